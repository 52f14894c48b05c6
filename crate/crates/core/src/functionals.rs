//! The functionals Φ, Ψ, Q = Ψ/Φ and the resonant energy J, with exact
//! gradients of their discrete versions and a dual-norm residual.
//!
//! ```text
//! Φ(u,v) = (α+1)/p ∫|∇u|^p + (β+1)/q ∫|∇v|^q          (per-element, exact for P1)
//! Ψ(u,v) = Σ_i m_i |u_i|^{α+1} |v_i|^{β+1}                (lumped)
//! J(z)   = Φ(z) - λ1 Ψ(z) - Σ_i m_i F(x_i,u_i,v_i) + Σ_i m_i (h1_i u_i + h2_i v_i)
//! ```

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::check_len;
use crate::resonance::Nonlinearity;
use crate::{Covector, Error, Mesh, Params, Result, StateVector};

/// `|x|^e`, with `0^e = 0` for the positive exponents used here.
#[inline]
pub(crate) fn abs_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(e)
    }
}

/// `sgn(x) |x|^e`, continuously extended by 0 at `x = 0`.
#[inline]
pub(crate) fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

fn check_state(mesh: &Mesh, z: &StateVector) -> Result<()> {
    check_len(mesh.vertex_count(), z.u.len())?;
    check_len(mesh.vertex_count(), z.v.len())
}

fn check_covector(mesh: &Mesh, r: &Covector) -> Result<()> {
    check_len(mesh.vertex_count(), r.du.len())?;
    check_len(mesh.vertex_count(), r.dv.len())
}

/// Gradient energy `Σ_e |e| |∇w_e|^r` and its regularized variant
/// `Σ_e |e| ((|∇w_e|² + ε²)^{r/2} - ε^r)`, used only when `r < 2` and `ε > 0`.
fn gradient_energy(mesh: &Mesh, w: &[f64], r: f64, eps: f64) -> f64 {
    let regularize = eps > 0.0 && r < 2.0;
    let offset = if regularize { eps.powf(r) } else { 0.0 };
    (0..mesh.element_count())
        .map(|e| {
            let g = mesh.element_gradient(e, w);
            let sq = g[0] * g[0] + g[1] * g[1];
            let density = if regularize {
                (sq + eps * eps).powf(0.5 * r) - offset
            } else if sq == 0.0 {
                0.0
            } else {
                sq.powf(0.5 * r)
            };
            density * mesh.element_measure()[e]
        })
        .sum()
}

/// Accumulates `weight Σ_e |e| ρ(∇w_e) ∇w_e · ∇φ_i` into `out`, where
/// `ρ(g) = |g|^{r-2}` (or its regularization).
fn gradient_energy_derivative(mesh: &Mesh, w: &[f64], r: f64, eps: f64, weight: f64, out: &mut [f64]) {
    let regularize = eps > 0.0 && r < 2.0;
    for e in 0..mesh.element_count() {
        let g = mesh.element_gradient(e, w);
        let sq = g[0] * g[0] + g[1] * g[1];
        let rho = if regularize {
            (sq + eps * eps).powf(0.5 * (r - 2.0))
        } else if sq == 0.0 {
            0.0
        } else {
            sq.powf(0.5 * (r - 2.0))
        };
        if rho == 0.0 {
            continue;
        }
        let scale = weight * rho * mesh.element_measure()[e];
        for (&a, ga) in mesh.element(e).iter().zip(mesh.basis_gradients(e)) {
            out[a] += scale * (g[0] * ga[0] + g[1] * ga[1]);
        }
    }
}

fn zero_boundary(mesh: &Mesh, r: &mut Covector) {
    mesh.apply_dirichlet(&mut r.du);
    mesh.apply_dirichlet(&mut r.dv);
}

/// Discrete seminorm powers `(∫|∇u|^p, ∫|∇v|^q)`.
pub fn seminorm_powers(mesh: &Mesh, params: &Params, z: &StateVector) -> Result<(f64, f64)> {
    check_state(mesh, z)?;
    Ok((
        gradient_energy(mesh, &z.u, params.p(), 0.0),
        gradient_energy(mesh, &z.v, params.q(), 0.0),
    ))
}

pub fn phi(mesh: &Mesh, params: &Params, z: &StateVector) -> Result<f64> {
    phi_regularized(mesh, params, z, 0.0)
}

/// Φ with the gradient regularization `ε` applied to exponents below 2.
pub fn phi_regularized(mesh: &Mesh, params: &Params, z: &StateVector, eps: f64) -> Result<f64> {
    check_state(mesh, z)?;
    Ok(params.u_weight() * gradient_energy(mesh, &z.u, params.p(), eps)
        + params.v_weight() * gradient_energy(mesh, &z.v, params.q(), eps))
}

pub fn psi(mesh: &Mesh, params: &Params, z: &StateVector) -> Result<f64> {
    check_state(mesh, z)?;
    let (a, b) = (params.alpha() + 1.0, params.beta() + 1.0);
    Ok(mesh
        .lumped_mass()
        .iter()
        .zip(z.u.iter().zip(&z.v))
        .map(|(m, (&u, &v))| m * abs_pow(u, a) * abs_pow(v, b))
        .sum())
}

pub fn grad_phi(mesh: &Mesh, params: &Params, z: &StateVector) -> Result<Covector> {
    grad_phi_regularized(mesh, params, z, 0.0)
}

/// Exact gradient of [`phi_regularized`].
pub fn grad_phi_regularized(mesh: &Mesh, params: &Params, z: &StateVector, eps: f64) -> Result<Covector> {
    check_state(mesh, z)?;
    let mut out = Covector::zeros(mesh.vertex_count());
    gradient_energy_derivative(mesh, &z.u, params.p(), eps, params.alpha() + 1.0, &mut out.du);
    gradient_energy_derivative(mesh, &z.v, params.q(), eps, params.beta() + 1.0, &mut out.dv);
    zero_boundary(mesh, &mut out);
    Ok(out)
}

/// Gradient of the lumped Ψ. Where a component vanishes, `|u|^{α-1} u` takes its
/// continuous extension 0.
pub fn grad_psi(mesh: &Mesh, params: &Params, z: &StateVector) -> Result<Covector> {
    check_state(mesh, z)?;
    let (a, b) = (params.alpha() + 1.0, params.beta() + 1.0);
    let mut out = Covector::zeros(mesh.vertex_count());
    for (i, m) in mesh.lumped_mass().iter().enumerate() {
        if mesh.is_boundary(i) {
            continue;
        }
        let (u, v) = (z.u[i], z.v[i]);
        out.du[i] = m * a * signed_pow(u, a - 1.0) * abs_pow(v, b);
        out.dv[i] = m * b * abs_pow(u, a) * signed_pow(v, b - 1.0);
    }
    Ok(out)
}

/// `Q(z) = Ψ(z)/Φ(z)`.
pub fn rayleigh_q(mesh: &Mesh, params: &Params, z: &StateVector) -> Result<f64> {
    let phi = phi(mesh, params, z)?;
    if !(phi > 0.0) {
        return Err(Error::Domain("Rayleigh quotient undefined at the origin".into()));
    }
    Ok(psi(mesh, params, z)? / phi)
}

/// `e(z) = (u/p, v/q)`; pairs with Φ′ and Ψ′ to give Φ and Ψ (Euler identity).
pub fn e_map(z: &StateVector, params: &Params) -> StateVector {
    z.scaled_blocks(1.0 / params.p(), 1.0 / params.q())
}

/// Riesz representative `(K⁻¹ du, K⁻¹ dv)` of a covector, `K` the P1 stiffness matrix.
pub fn riesz(mesh: &Mesh, r: &Covector) -> StateVector {
    StateVector { u: mesh.stiffness_solve(&r.du), v: mesh.stiffness_solve(&r.dv) }
}

/// `sqrt(r_uᵀ K⁻¹ r_u + r_vᵀ K⁻¹ r_v)`, a mesh-consistent dual Sobolev norm.
pub fn dual_norm(mesh: &Mesh, r: &Covector) -> Result<f64> {
    check_covector(mesh, r)?;
    let rep = riesz(mesh, r);
    Ok(r.pair(&rep).max(0.0).sqrt())
}

/// `‖Φ′(z) - λ Ψ′(z)‖_*`.
pub fn eigen_residual(mesh: &Mesh, params: &Params, z: &StateVector, lambda: f64) -> Result<f64> {
    if z.is_zero() {
        return Err(Error::Domain("eigen residual needs a nonzero state".into()));
    }
    let gphi = grad_phi(mesh, params, z)?;
    let gpsi = grad_psi(mesh, params, z)?;
    dual_norm(mesh, &Covector::combine(1.0, &gphi, -lambda, &gpsi))
}

/// Right side of the Young-inequality bound on Ψ:
/// `(α+1)/p Σ m_i |u_i|^p + (β+1)/q Σ m_i |v_i|^q`.
pub fn young_bound(mesh: &Mesh, params: &Params, z: &StateVector) -> Result<f64> {
    check_state(mesh, z)?;
    Ok(mesh
        .lumped_mass()
        .iter()
        .zip(z.u.iter().zip(&z.v))
        .map(|(m, (&u, &v))| {
            m * (params.u_weight() * abs_pow(u, params.p()) + params.v_weight() * abs_pow(v, params.q()))
        })
        .sum())
}

/// Data of the resonant problem: nonlinearity, forcings sampled at vertices, and
/// the discrete λ1 on the same mesh.
#[derive(Clone, Copy)]
pub struct ResonantData<'a> {
    pub nonlinearity: &'a dyn Nonlinearity,
    pub h1: &'a [f64],
    pub h2: &'a [f64],
    pub lambda1: Option<f64>,
}

impl<'a> ResonantData<'a> {
    pub fn new(nonlinearity: &'a dyn Nonlinearity, h1: &'a [f64], h2: &'a [f64], lambda1: f64) -> Self {
        Self { nonlinearity, h1, h2, lambda1: Some(lambda1) }
    }

    fn check(&self, mesh: &Mesh) -> Result<f64> {
        check_len(mesh.vertex_count(), self.h1.len())?;
        check_len(mesh.vertex_count(), self.h2.len())?;
        self.lambda1
            .ok_or_else(|| Error::State("λ1 must be supplied to evaluate J".into()))
    }
}

pub fn j_value(mesh: &Mesh, params: &Params, z: &StateVector, data: &ResonantData<'_>) -> Result<f64> {
    let lambda1 = data.check(mesh)?;
    let quadratic = phi(mesh, params, z)? - lambda1 * psi(mesh, params, z)?;
    let vertex_terms: f64 = mesh
        .vertices()
        .iter()
        .zip(mesh.lumped_mass())
        .enumerate()
        .map(|(i, (x, m))| {
            let (u, v) = (z.u[i], z.v[i]);
            m * (-data.nonlinearity.value(*x, u, v) + data.h1[i] * u + data.h2[i] * v)
        })
        .sum();
    Ok(quadratic + vertex_terms)
}

pub fn grad_j(mesh: &Mesh, params: &Params, z: &StateVector, data: &ResonantData<'_>) -> Result<Covector> {
    let lambda1 = data.check(mesh)?;
    let gphi = grad_phi(mesh, params, z)?;
    let gpsi = grad_psi(mesh, params, z)?;
    let mut out = Covector::combine(1.0, &gphi, -lambda1, &gpsi);
    for (i, (x, m)) in mesh.vertices().iter().zip(mesh.lumped_mass()).enumerate() {
        if mesh.is_boundary(i) {
            continue;
        }
        let (u, v) = (z.u[i], z.v[i]);
        out.du[i] += m * (data.h1[i] - data.nonlinearity.d_s(*x, u, v));
        out.dv[i] += m * (data.h2[i] - data.nonlinearity.d_t(*x, u, v));
    }
    Ok(out)
}

/// Nodal products `m_i w_i`, the load vector of a lumped field.
pub fn lumped_load(mesh: &Mesh, w: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = w.iter().zip(mesh.lumped_mass()).map(|(a, m)| a * m).collect();
    mesh.apply_dirichlet(&mut out);
    out
}
