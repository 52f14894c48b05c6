//! First and second eigenpairs of the coupled system.
//!
//! λ1 is the reciprocal of `max Ψ` on `M = {Φ = 1}`; it is computed by projected
//! ascent with the stiffness-preconditioned tangential gradient
//! `K⁻¹(Ψ′(z) - Ψ(z) Φ′(z))` and the exact retraction `z ↦ scale(z, 1/Φ(z))`.
//! λ2 is the reciprocal of the sup over odd loops in `M` of `min Ψ`, see [`minimax`].

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::functionals::{eigen_residual, grad_phi, grad_phi_regularized, grad_psi, phi, psi, riesz};
use crate::line_search::{Armijo, Step};
use crate::precond::Preconditioner;
use crate::state::homogeneous_scale;
use crate::{Covector, Error, Mesh, Params, Result, StateVector};

mod checks;
pub mod minimax;
mod polish;

pub use checks::{
    check_sign_structure, isolation_scan, min_residual_at, simplicity_check, simplicity_from_starts, IsolationPoint, SignCounts,
    SimplicityReport,
};
pub use minimax::{solve_lambda2, solve_lambda2_with_loop, LoopState};

/// Iteration controls shared by the eigen and resonance solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Stop when the dual-norm residual falls to this value.
    pub tol_residual: f64,
    /// Relative change of the objective below which an iteration counts as stalled.
    pub tol_q_rel: f64,
    pub max_iters: usize,
    /// Initial step, relative to the natural scale of each solver.
    pub step_init: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    /// Gradient regularization for exponents below 2, relative to the mean
    /// element gradient magnitude. Only affects search directions.
    pub epsilon_reg: f64,
    pub seed: u64,
    pub n_starts: usize,
    /// Stored loop points `m` (the loop has `2m` points).
    pub loop_samples: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-8,
            tol_q_rel: 1e-15,
            max_iters: 20_000,
            step_init: 1.0,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            epsilon_reg: 1e-8,
            seed: 0,
            n_starts: 8,
            loop_samples: 16,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.into()));
        if !(self.tol_residual > 0.0) {
            return bad("tol_residual must be positive");
        }
        if !(self.tol_q_rel > 0.0) {
            return bad("tol_q_rel must be positive");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1");
        }
        if !(self.step_init > 0.0) {
            return bad("step_init must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.epsilon_reg >= 0.0) {
            return bad("epsilon_reg must be non-negative");
        }
        if self.loop_samples < 4 {
            return bad("loop_samples must be at least 4");
        }
        Ok(())
    }

    pub(crate) fn armijo(&self) -> Armijo {
        Armijo { c: self.armijo_c, factor: self.backtrack_factor, max_backtracks: 60, slack: 0.0 }
    }
}

/// One row of a convergence history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub iteration: usize,
    /// Objective tracked by the solver (`Q` for eigen solvers, `J` for resonance).
    pub value: f64,
    pub residual: f64,
}

/// Eigenvalue with its eigenpair normalized to `Φ(z) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    pub z: StateVector,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<HistoryRecord>,
}

/// Scales `z` onto `M = {Φ = 1}` by (p,q)-homogeneous scaling.
pub fn normalize_to_manifold(mesh: &Mesh, params: &Params, z: &StateVector) -> Result<StateVector> {
    let value = phi(mesh, params, z)?;
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::Domain(format!("cannot normalize a state with Φ = {value}")));
    }
    homogeneous_scale(z, 1.0 / value, params)
}

/// Flips each component independently so that its lumped integral is non-negative.
/// All four sign combinations of an eigenpair are eigenpairs.
pub fn canonical_signs(mesh: &Mesh, z: &StateVector) -> StateVector {
    let integral = |w: &[f64]| -> f64 { w.iter().zip(mesh.lumped_mass()).map(|(a, m)| a * m).sum() };
    let su = if integral(&z.u) < 0.0 { -1.0 } else { 1.0 };
    let sv = if integral(&z.v) < 0.0 { -1.0 } else { 1.0 };
    z.scaled_blocks(su, sv)
}

/// Tangential Q-gradient `Ψ′(z) - Ψ(z) Φ′(z)` at a point of `M`, with the
/// regularized Φ′ when requested.
pub(crate) fn tangential_gradient(
    mesh: &Mesh,
    params: &Params,
    z: &StateVector,
    psi_value: f64,
    epsilon_rel: f64,
) -> Result<(Covector, Covector)> {
    let gpsi = grad_psi(mesh, params, z)?;
    let gphi = grad_phi(mesh, params, z)?;
    let exact = Covector::combine(1.0, &gpsi, -psi_value, &gphi);
    if epsilon_rel > 0.0 && (params.p() < 2.0 || params.q() < 2.0) {
        let eps = epsilon_rel * mean_gradient_magnitude(mesh, z);
        let gphi_reg = grad_phi_regularized(mesh, params, z, eps)?;
        let reg = Covector::combine(1.0, &gpsi, -psi_value, &gphi_reg);
        return Ok((exact, reg));
    }
    Ok((exact.clone(), exact))
}

fn mean_gradient_magnitude(mesh: &Mesh, z: &StateVector) -> f64 {
    let n = mesh.element_count() as f64;
    let total: f64 = (0..mesh.element_count())
        .map(|e| {
            let gu = mesh.element_gradient(e, &z.u);
            let gv = mesh.element_gradient(e, &z.v);
            (gu[0] * gu[0] + gu[1] * gu[1]).sqrt() + (gv[0] * gv[0] + gv[1] * gv[1]).sqrt()
        })
        .sum();
    total / (2.0 * n)
}

/// Relative tolerance on `Q` comparisons in line searches. Near a critical point
/// the change in `Q` is quadratic in the residual and drops below rounding error
/// long before the residual reaches its tolerance.
pub(crate) const ROUNDING_SLACK: f64 = 32.0 * f64::EPSILON;

/// Backtracking on the residual once `Q` no longer resolves the step: accepts
/// the first trial that lowers the residual without lowering `Q` beyond rounding.
pub(crate) fn rounding_level_step<F>(
    mesh: &Mesh,
    params: &Params,
    q: f64,
    residual: f64,
    t0: f64,
    trial: &F,
) -> Option<Step>
where
    F: Fn(f64) -> Option<(StateVector, f64)>,
{
    let mut t = t0;
    for _ in 0..60 {
        if let Some((zn, qn)) = trial(t) {
            if qn >= q - ROUNDING_SLACK * q {
                let rn = eigen_residual(mesh, params, &zn, 1.0 / qn).unwrap_or(f64::INFINITY);
                if rn <= (1.0 - 1e-4) * residual {
                    return Some(Step { t, value: qn });
                }
            }
        }
        t *= 0.5;
    }
    None
}

/// λ1 by projected ascent of Ψ on `M`.
///
/// Without `z0` the positive bump is used. Running out of iterations is not an
/// error: the best iterate comes back with `converged = false`.
pub fn solve_lambda1(
    mesh: &Mesh,
    params: &Params,
    opts: &SolverOptions,
    z0: Option<&StateVector>,
) -> Result<EigenResult> {
    opts.validate()?;
    let start = match z0 {
        Some(z) => {
            crate::error::check_len(mesh.vertex_count(), z.len())?;
            mesh.state(z.u.clone(), z.v.clone())?
        }
        None => crate::starts::positive_start(mesh),
    };
    if start.is_zero() {
        return Err(Error::Domain("start state is zero".into()));
    }
    let mut z = normalize_to_manifold(mesh, params, &start)?;
    let mut q = psi(mesh, params, &z)?;
    if !(q > 0.0) {
        return Err(Error::Start("Ψ vanishes at the start state; u and v do not overlap".into()));
    }

    let armijo = opts.armijo();
    let mut t = opts.step_init / q;
    let mut history = Vec::new();
    let mut stalled = 0;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..opts.max_iters {
        iterations = iter;
        let (exact, direction_cov) = tangential_gradient(mesh, params, &z, q, opts.epsilon_reg)?;
        let d = Preconditioner::at(mesh, params, &z)?.apply(mesh, &direction_cov);
        let slope = exact.pair(&d);
        let residual = exact.pair(&riesz(mesh, &exact)).max(0.0).sqrt() / q;
        history.push(crate::HistoryRecord { iteration: iter, value: q, residual });
        if residual <= opts.tol_residual {
            converged = true;
            break;
        }
        let trial = |t: f64| -> Option<(StateVector, f64)> {
            let candidate = z.add_scaled(t, &d);
            let zn = normalize_to_manifold(mesh, params, &candidate).ok()?;
            let value = psi(mesh, params, &zn).ok()?;
            Some((zn, value))
        };
        let step = if slope * t > ROUNDING_SLACK * q {
            armijo.maximize(q, slope, t, |s| trial(s).map_or(f64::NAN, |(_, v)| v))
        } else {
            None
        };
        let step = match step {
            Some(step) => step,
            None => match rounding_level_step(mesh, params, q, residual, t, &trial) {
                Some(step) => step,
                None => break,
            },
        };
        let (next, next_q) = trial(step.t).expect("accepted step re-evaluates");
        if (next_q - q).abs() <= opts.tol_q_rel * q {
            stalled += 1;
            if stalled >= 25 {
                z = next;
                break;
            }
        } else {
            stalled = 0;
        }
        z = next;
        q = next_q;
        t = (2.0 * step.t).min(1e3 / q);
    }
    finish(mesh, params, z, opts, iterations, converged, history)
}

pub(crate) fn finish(
    mesh: &Mesh,
    params: &Params,
    z: StateVector,
    opts: &SolverOptions,
    iterations: usize,
    converged: bool,
    history: Vec<HistoryRecord>,
) -> Result<EigenResult> {
    let z = normalize_to_manifold(mesh, params, &canonical_signs(mesh, &z))?;
    let psi_value = psi(mesh, params, &z)?;
    let lambda = 1.0 / psi_value;
    let residual = eigen_residual(mesh, params, &z, lambda)?;
    Ok(EigenResult {
        lambda,
        z,
        residual,
        iterations,
        converged: converged || residual <= opts.tol_residual,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn quadratic() -> Params {
        Params::new(2.0, 2.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn normalization() {
        let mesh = Mesh::interval(1.0, 16).unwrap();
        let params = quadratic();
        let z = crate::starts::positive_start(&mesh);
        let on = normalize_to_manifold(&mesh, &params, &z).unwrap();
        assert!((phi(&mesh, &params, &on).unwrap() - 1.0).abs() < 1e-12);
        let again = normalize_to_manifold(&mesh, &params, &on).unwrap();
        assert!(again.max_abs_diff(&on) < 1e-12 * on.max_abs());
        let four = homogeneous_scale(&on, 4.0, &params).unwrap();
        let back = normalize_to_manifold(&mesh, &params, &four).unwrap();
        assert!(back.max_abs_diff(&four.scaled(0.5)) < 1e-14);
        assert!(normalize_to_manifold(&mesh, &params, &StateVector::zeros(17)).is_err());
    }

    #[test]
    fn coarse_first_eigenvalue() {
        let mesh = Mesh::interval(1.0, 64).unwrap();
        let result = solve_lambda1(&mesh, &quadratic(), &SolverOptions::default(), None).unwrap();
        assert!(result.converged);
        assert!((result.lambda - PI * PI).abs() / (PI * PI) < 2e-3, "{}", result.lambda);
        assert!((phi(&mesh, &quadratic(), &result.z).unwrap() - 1.0).abs() < 1e-10);
        assert!(result.history.windows(2).all(|w| w[1].value >= w[0].value * (1.0 - ROUNDING_SLACK)));
    }

    #[test]
    fn uncoupled_start_rejected() {
        let mesh = Mesh::interval(1.0, 16).unwrap();
        let u = mesh.interpolate(|x| if x[0] < 0.5 { x[0] } else { 0.0 });
        let v = mesh.interpolate(|x| if x[0] > 0.5 { 1.0 - x[0] } else { 0.0 });
        let z = StateVector { u, v };
        let err = solve_lambda1(&mesh, &quadratic(), &SolverOptions::default(), Some(&z)).unwrap_err();
        assert!(matches!(err, Error::Start(_)));
    }

    #[test]
    fn iteration_cap_returns_best_iterate() {
        let mesh = Mesh::interval(1.0, 32).unwrap();
        let opts = SolverOptions { max_iters: 1, ..SolverOptions::default() };
        let result = solve_lambda1(&mesh, &quadratic(), &opts, None).unwrap();
        assert!(!result.converged);
        assert!(result.lambda > PI * PI * 0.99);
    }

    #[test]
    fn canonical_signs_flip_components() {
        let mesh = Mesh::interval(1.0, 8).unwrap();
        let b = crate::starts::bump(&mesh);
        let z = StateVector { u: b.iter().map(|x| -x).collect(), v: b.clone() };
        let c = canonical_signs(&mesh, &z);
        assert_eq!(c.u, b);
        assert_eq!(c.v, b);
    }
}
