//! Local refinement of an approximate eigenpair of any index.
//!
//! Inexact Newton on `g(z) = Φ′(z) - λΨ′(z)` restricted to the tangent space of
//! `M`, with `λ = 1/Ψ(z)` refreshed every step. The Newton system is solved by
//! preconditioned MINRES with Hessian products from central differences of `g`.
//! Steps are accepted when the eigen residual decreases; otherwise the
//! iteration falls back to descent of `gᵀ P⁻¹ g`.

#[allow(unused_imports)]
use num_traits::Float;

use super::{normalize_to_manifold, SolverOptions};
use crate::functionals::{e_map, eigen_residual, grad_phi, grad_psi, psi};
use crate::krylov::minres;
use crate::precond::Preconditioner;
use crate::{Covector, Mesh, Params, Result, StateVector};

pub(crate) struct Polished {
    pub z: StateVector,
    pub residual: f64,
}

use crate::krylov::{MINRES_ITERS, MINRES_RTOL};

fn residual_covector(mesh: &Mesh, params: &Params, z: &StateVector, lambda: f64) -> Result<Covector> {
    Ok(Covector::combine(1.0, &grad_phi(mesh, params, z)?, -lambda, &grad_psi(mesh, params, z)?))
}

/// Tangent-space projection `w - ⟨Φ′, w⟩ e(z)` and its transpose.
struct Tangent {
    gphi: Covector,
    e: StateVector,
}

impl Tangent {
    fn project(&self, w: &StateVector) -> StateVector {
        w.add_scaled(-self.gphi.pair(w), &self.e)
    }

    fn project_dual(&self, c: &Covector) -> Covector {
        Covector::combine(1.0, c, -c.pair(&self.e), &self.gphi)
    }
}

struct Linearization<'a> {
    mesh: &'a Mesh,
    params: &'a Params,
    z: &'a StateVector,
    lambda: f64,
    tangent: Tangent,
}

impl Linearization<'_> {
    /// `Πᵀ H Π w`.
    fn apply(&self, w: &StateVector) -> Result<Covector> {
        let w = self.tangent.project(w);
        let scale = w.max_abs();
        if !(scale > 0.0) {
            return Ok(Covector::zeros(w.len()));
        }
        let eps = 1e-5 * self.z.max_abs() / scale;
        let gp = residual_covector(self.mesh, self.params, &self.z.add_scaled(eps, &w), self.lambda)?;
        let gm = residual_covector(self.mesh, self.params, &self.z.add_scaled(-eps, &w), self.lambda)?;
        Ok(self.tangent.project_dual(&Covector::combine(0.5 / eps, &gp, -0.5 / eps, &gm)))
    }
}

fn residual_at(mesh: &Mesh, params: &Params, z: &StateVector) -> f64 {
    psi(mesh, params, z)
        .and_then(|q| eigen_residual(mesh, params, z, 1.0 / q))
        .unwrap_or(f64::INFINITY)
}

pub(crate) fn polish(
    mesh: &Mesh,
    params: &Params,
    opts: &SolverOptions,
    z0: &StateVector,
    max_iters: usize,
) -> Result<Polished> {
    let mut z = normalize_to_manifold(mesh, params, z0)?;
    let mut residual = residual_at(mesh, params, &z);
    for _ in 0..max_iters {
        if residual <= opts.tol_residual {
            break;
        }
        let lambda = 1.0 / psi(mesh, params, &z)?;
        let precond = Preconditioner::at(mesh, params, &z)?;
        let g = residual_covector(mesh, params, &z, lambda)?;
        let lin = Linearization {
            mesh,
            params,
            z: &z,
            lambda,
            tangent: Tangent { gphi: grad_phi(mesh, params, &z)?, e: e_map(&z, params) },
        };
        let rhs = lin.tangent.project_dual(&g).scaled(-1.0);
        let newton = lin.tangent.project(&minres(|w| lin.apply(w), &precond, mesh, &rhs, MINRES_RTOL, MINRES_ITERS)?);
        let candidates = [newton, {
            let w = precond.apply(mesh, &g);
            lin.tangent.project(&precond.apply(mesh, &lin.apply(&w)?).neg())
        }];
        let mut accepted = None;
        'search: for d in &candidates {
            let mut t = 1.0;
            for _ in 0..40 {
                if let Ok(zn) = normalize_to_manifold(mesh, params, &z.add_scaled(t, d)) {
                    let rn = residual_at(mesh, params, &zn);
                    if rn < residual {
                        accepted = Some((zn, rn));
                        break 'search;
                    }
                }
                t *= 0.5;
            }
        }
        let Some((zn, rn)) = accepted else { break };
        z = zn;
        residual = rn;
    }
    Ok(Polished { z, residual })
}
