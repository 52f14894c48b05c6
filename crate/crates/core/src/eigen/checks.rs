//! Numerical evidence for the structure of the spectrum: sign changes, the
//! shape of the first eigenfunction set, and the gap above λ1.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{canonical_signs, normalize_to_manifold, solve_lambda1, EigenResult, SolverOptions};
use crate::functionals::{e_map, grad_phi, grad_psi, riesz};
use crate::{Covector, Mesh, Params, Result, StateVector};

/// Counts of strictly positive and negative interior nodal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SignCounts {
    pub u_pos: usize,
    pub u_neg: usize,
    pub v_pos: usize,
    pub v_neg: usize,
}

impl SignCounts {
    pub fn both_change_sign(&self) -> bool {
        self.u_pos > 0 && self.u_neg > 0 && self.v_pos > 0 && self.v_neg > 0
    }

    pub fn both_positive(&self) -> bool {
        self.u_pos > 0 && self.v_pos > 0 && self.u_neg == 0 && self.v_neg == 0
    }
}

pub fn check_sign_structure(mesh: &Mesh, z: &StateVector) -> SignCounts {
    let mut counts = SignCounts::default();
    for i in (0..mesh.vertex_count()).filter(|&i| !mesh.is_boundary(i)) {
        counts.u_pos += (z.u[i] > 0.0) as usize;
        counts.u_neg += (z.u[i] < 0.0) as usize;
        counts.v_pos += (z.v[i] > 0.0) as usize;
        counts.v_neg += (z.v[i] < 0.0) as usize;
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicityReport {
    /// Largest nodal deviation between canonical representatives of any two runs.
    pub max_deviation: f64,
    /// `(max λ - min λ) / min λ` over converged runs.
    pub lambda_spread: f64,
    pub runs: usize,
    /// Start indices that failed or did not converge; excluded from the statistics.
    pub failed: Vec<usize>,
    pub lambdas: Vec<f64>,
}

/// Runs [`solve_lambda1`] from `opts.n_starts` seeded random starts and compares
/// the canonical representatives of the results.
pub fn simplicity_check(mesh: &Mesh, params: &Params, opts: &SolverOptions) -> Result<SimplicityReport> {
    let mut rng = crate::starts::rng(opts.seed);
    let starts: Vec<StateVector> = (0..opts.n_starts.max(1))
        .map(|_| crate::starts::random_smooth(mesh, &mut rng, 4))
        .collect();
    simplicity_from_starts(mesh, params, opts, &starts)
}

/// [`simplicity_check`] with explicit starts.
pub fn simplicity_from_starts(
    mesh: &Mesh,
    params: &Params,
    opts: &SolverOptions,
    starts: &[StateVector],
) -> Result<SimplicityReport> {
    let mut reps: Vec<StateVector> = Vec::new();
    let mut lambdas = Vec::new();
    let mut failed = Vec::new();
    for (k, z0) in starts.iter().enumerate() {
        match solve_lambda1(mesh, params, opts, Some(z0)) {
            Ok(res) if res.converged => {
                let rep = normalize_to_manifold(mesh, params, &canonical_signs(mesh, &res.z))?;
                reps.push(rep);
                lambdas.push(res.lambda);
            }
            Ok(_) | Err(_) => failed.push(k),
        }
    }
    let mut max_deviation = 0.0f64;
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            max_deviation = max_deviation.max(reps[i].max_abs_diff(&reps[j]));
        }
    }
    let lo = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lambda_spread = if lambdas.is_empty() { 0.0 } else { (hi - lo) / lo };
    Ok(SimplicityReport { max_deviation, lambda_spread, runs: starts.len(), failed, lambdas })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolationPoint {
    pub lambda: f64,
    pub min_residual: f64,
}

/// For each of `n_grid` equally spaced λ in `[lo, hi]`, the smallest eigen
/// residual found on `M` from the given eigenpairs, low sine modes, and
/// `opts.n_starts` seeded random starts.
pub fn isolation_scan(
    mesh: &Mesh,
    params: &Params,
    opts: &SolverOptions,
    known: &[&EigenResult],
    range: (f64, f64),
    n_grid: usize,
) -> Result<Vec<IsolationPoint>> {
    let starts = isolation_starts(mesh, opts, known);
    let (lo, hi) = range;
    (0..n_grid)
        .map(|k| {
            let lambda = if n_grid == 1 { lo } else { lo + (hi - lo) * k as f64 / (n_grid - 1) as f64 };
            let min_residual = min_residual_at(mesh, params, opts, lambda, &starts)?;
            Ok(IsolationPoint { lambda, min_residual })
        })
        .collect()
}

fn isolation_starts(mesh: &Mesh, opts: &SolverOptions, known: &[&EigenResult]) -> Vec<StateVector> {
    let mut starts: Vec<StateVector> = known.iter().map(|r| r.z.clone()).collect();
    for k in 1..=3 {
        let s = crate::starts::sine_mode(mesh, k, 1);
        starts.push(StateVector { u: s.clone(), v: s.clone() });
        starts.push(StateVector { u: s.clone(), v: s.iter().map(|x| -x).collect() });
    }
    let mut rng = crate::starts::rng(opts.seed ^ 0x5eed);
    for _ in 0..opts.n_starts {
        starts.push(crate::starts::random_smooth(mesh, &mut rng, 4));
    }
    starts
}

const RESIDUAL_DESCENT_ITERS: usize = 200;

/// Smallest `‖Φ′(z) - λ Ψ′(z)‖_*` over `M` reached by projected descent of the
/// squared residual from each start.
pub fn min_residual_at(
    mesh: &Mesh,
    params: &Params,
    opts: &SolverOptions,
    lambda: f64,
    starts: &[StateVector],
) -> Result<f64> {
    let mut best = f64::INFINITY;
    for z0 in starts {
        if z0.is_zero() {
            continue;
        }
        let z = normalize_to_manifold(mesh, params, z0)?;
        best = best.min(descend_residual(mesh, params, opts, lambda, z)?);
        if best <= opts.tol_residual {
            break;
        }
    }
    Ok(best)
}

fn residual_covector(mesh: &Mesh, params: &Params, z: &StateVector, lambda: f64) -> Result<Covector> {
    Ok(Covector::combine(1.0, &grad_phi(mesh, params, z)?, -lambda, &grad_psi(mesh, params, z)?))
}

fn squared_residual(mesh: &Mesh, params: &Params, z: &StateVector, lambda: f64) -> Result<f64> {
    let g = residual_covector(mesh, params, z, lambda)?;
    Ok(g.pair(&riesz(mesh, &g)))
}

fn descend_residual(mesh: &Mesh, params: &Params, opts: &SolverOptions, lambda: f64, mut z: StateVector) -> Result<f64> {
    let armijo = opts.armijo();
    let mut value = squared_residual(mesh, params, &z, lambda)?;
    let mut t = 1.0;
    for _ in 0..RESIDUAL_DESCENT_ITERS {
        if value.sqrt() <= opts.tol_residual {
            break;
        }
        let g = residual_covector(mesh, params, &z, lambda)?;
        let w = riesz(mesh, &g);
        // Hessian-vector product of Φ - λΨ by central differences of the gradient
        let eps = 1e-7 * z.max_abs().max(1e-300) / w.max_abs().max(1e-300);
        let gp = residual_covector(mesh, params, &z.add_scaled(eps, &w), lambda)?;
        let gm = residual_covector(mesh, params, &z.add_scaled(-eps, &w), lambda)?;
        let hw = Covector::combine(0.5 / eps, &gp, -0.5 / eps, &gm);
        let mut d = riesz(mesh, &hw).neg();
        let normal = grad_phi(mesh, params, &z)?.pair(&d);
        d.axpy(-normal, &e_map(&z, params));
        let rate = -2.0 * hw.pair(&d);
        let trial = |s: f64| -> f64 {
            normalize_to_manifold(mesh, params, &z.add_scaled(s, &d))
                .and_then(|zn| squared_residual(mesh, params, &zn, lambda))
                .unwrap_or(f64::NAN)
        };
        let Some(step) = armijo.minimize(value, rate, t, trial) else { break };
        z = normalize_to_manifold(mesh, params, &z.add_scaled(step.t, &d))?;
        value = step.value;
        t = 2.0 * step.t;
    }
    Ok(value.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_state_has_no_signs() {
        let mesh = Mesh::interval(1.0, 8).unwrap();
        assert_eq!(check_sign_structure(&mesh, &StateVector::zeros(9)), SignCounts::default());
    }

    #[test]
    fn sine_mode_signs() {
        let mesh = Mesh::interval(1.0, 9).unwrap();
        let s = crate::starts::sine_mode(&mesh, 2, 1);
        let z = StateVector { u: s.clone(), v: s };
        let c = check_sign_structure(&mesh, &z);
        assert_eq!(c, SignCounts { u_pos: 4, u_neg: 4, v_pos: 4, v_neg: 4 });
        assert!(c.both_change_sign());
    }

    #[test]
    fn single_start_has_zero_deviation() {
        let mesh = Mesh::interval(1.0, 32).unwrap();
        let params = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let opts = SolverOptions { n_starts: 1, ..SolverOptions::default() };
        let report = simplicity_check(&mesh, &params, &opts).unwrap();
        assert_eq!(report.runs, 1);
        assert_eq!(report.max_deviation, 0.0);
        assert_eq!(report.lambda_spread, 0.0);
    }
}
