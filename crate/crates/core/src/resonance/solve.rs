//! Critical points of `J = Φ - λ1Ψ - ∫F(x,u,v) + ∫h1 u + ∫h2 v`.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{unit_normalize, Nonlinearity};
use crate::eigen::{EigenResult, HistoryRecord, SolverOptions, ROUNDING_SLACK};
use crate::functionals::{dual_norm, grad_j, j_value, phi, psi, ResonantData};
use crate::krylov::{minres, MINRES_ITERS, MINRES_RTOL};
use crate::precond::Preconditioner;
use crate::state::{sign_branch, Branch};
use crate::{Covector, Error, Mesh, Params, Result, StateVector};

#[derive(Debug, Clone, PartialEq)]
pub struct ResonantSolution {
    pub z: StateVector,
    pub j: f64,
    /// `‖J′(z)‖_*`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(iteration, J, residual)` of the returned run.
    pub history: Vec<HistoryRecord>,
}

/// `J` along a sign branch of the unit-normalized first eigenpair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSample {
    pub branch: Branch,
    /// Signed branch parameter.
    pub theta: f64,
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub solution: ResonantSolution,
    /// Θ of the path endpoints `±(Θ^{1/p} φ1, Θ^{1/q} ψ1)`.
    pub theta: f64,
    pub j_at_zero: f64,
    /// Samples at `±Θ, ±2Θ, ±4Θ` on both branches.
    pub samples: Vec<BranchSample>,
    /// `J` strictly decreases from `|θ| = Θ` to `2Θ` to `4Θ` on all four half-branches.
    pub branches_decreasing: bool,
    /// Largest `J` over the four branch points at `|θ| = Θ`.
    pub endpoint_max_j: f64,
    /// `J` at the nodes of the final path.
    pub path_values: Vec<f64>,
    /// `max` of `Φ - λ2 Ψ` over the final path, a polyline sampled at
    /// [`GAP_SUBSAMPLES`] points per segment.
    pub path_lambda2_gap: f64,
    /// The same maximum minimized over every path of the relaxation,
    /// the initial one included.
    pub min_path_lambda2_gap: f64,
}

const THETA_MAX_DOUBLINGS: i32 = 20;
const PATH_NODES: usize = 33;
const MAX_MOVE: f64 = 0.25;
const SETTLE_WINDOW: usize = 10;
pub const GAP_SUBSAMPLES: usize = 8;
const REFINE_ITERS: usize = 100;
/// Smallest relative gap `(λ2 - λ1)/λ1` accepted by [`solve_saddle`].
pub const MIN_SPECTRAL_GAP: f64 = 1e-6;

struct Problem<'a> {
    mesh: &'a Mesh,
    params: &'a Params,
    data: ResonantData<'a>,
}

impl Problem<'_> {
    fn j(&self, z: &StateVector) -> Result<f64> {
        j_value(self.mesh, self.params, z, &self.data)
    }

    fn grad(&self, z: &StateVector) -> Result<Covector> {
        grad_j(self.mesh, self.params, z, &self.data)
    }

    fn residual(&self, z: &StateVector) -> Result<f64> {
        dual_norm(self.mesh, &self.grad(z)?)
    }

    /// Size of the terms of `J`, for rounding-level comparisons.
    fn scale(&self, z: &StateVector, j: f64) -> f64 {
        let quad = phi(self.mesh, self.params, z).unwrap_or(0.0)
            + self.data.lambda1.unwrap_or(0.0) * psi(self.mesh, self.params, z).unwrap_or(0.0);
        j.abs() + quad + f64::MIN_POSITIVE
    }

    /// One preconditioned descent step from `z` with initial trial step `t0`.
    /// Falls back to decrease of the residual when `J` no longer resolves the step.
    fn descent_step(
        &self,
        opts: &SolverOptions,
        z: &StateVector,
        j: f64,
        residual: f64,
        t0: f64,
        max_move: Option<f64>,
    ) -> Result<Option<(StateVector, f64, f64)>> {
        let g = self.grad(z)?;
        let d = Preconditioner::at(self.mesh, self.params, z)?.apply(self.mesh, &g).neg();
        let rate = -g.pair(&d);
        let mut t = t0;
        if let Some(limit) = max_move {
            t = t.min(limit / self.mesh.energy_norm(&d).max(f64::MIN_POSITIVE));
        }
        let slack = ROUNDING_SLACK * self.scale(z, j);
        if rate * t > slack {
            let step = opts.armijo().minimize(j, rate, t, |s| self.j(&z.add_scaled(s, &d)).unwrap_or(f64::NAN));
            if let Some(step) = step {
                return Ok(Some((z.add_scaled(step.t, &d), step.value, step.t)));
            }
        }
        let mut s = t;
        for _ in 0..60 {
            let zn = z.add_scaled(s, &d);
            let jn = self.j(&zn)?;
            if jn <= j + slack && self.residual(&zn)? < residual {
                return Ok(Some((zn, jn, s)));
            }
            s *= 0.5;
        }
        Ok(None)
    }

    /// Inexact Newton on `J′ = 0` from `z0`; with `monotone`, steps may not raise `J`
    /// beyond rounding. Returns the last accepted iterate and its records.
    fn refine(
        &self,
        opts: &SolverOptions,
        z0: &StateVector,
        monotone: bool,
        first_iteration: usize,
    ) -> Result<(StateVector, f64, f64, Vec<HistoryRecord>)> {
        let mut z = z0.clone();
        let mut j = self.j(&z)?;
        let mut residual = self.residual(&z)?;
        let mut records = Vec::new();
        for it in 0..REFINE_ITERS {
            if residual <= opts.tol_residual {
                break;
            }
            let precond = Preconditioner::at(self.mesh, self.params, &z)?;
            let g = self.grad(&z)?;
            let hessian = |w: &StateVector| -> Result<Covector> {
                let scale = w.max_abs();
                if !(scale > 0.0) {
                    return Ok(Covector::zeros(w.len()));
                }
                let eps = 1e-5 * (1.0 + z.max_abs()) / scale;
                let gp = self.grad(&z.add_scaled(eps, w))?;
                let gm = self.grad(&z.add_scaled(-eps, w))?;
                Ok(Covector::combine(0.5 / eps, &gp, -0.5 / eps, &gm))
            };
            let newton = minres(hessian, &precond, self.mesh, &g.scaled(-1.0), MINRES_RTOL, MINRES_ITERS)?;
            let w = precond.apply(self.mesh, &g);
            let gauss = precond.apply(self.mesh, &hessian(&w)?).neg();
            let slack = ROUNDING_SLACK * self.scale(&z, j);
            let mut accepted = None;
            'search: for d in [&newton, &gauss] {
                let mut t = 1.0;
                for _ in 0..40 {
                    let zn = z.add_scaled(t, d);
                    let jn = self.j(&zn)?;
                    if jn.is_finite() && (!monotone || jn <= j + slack) {
                        let rn = self.residual(&zn)?;
                        if rn < residual {
                            accepted = Some((zn, jn, rn));
                            break 'search;
                        }
                    }
                    t *= 0.5;
                }
            }
            let Some((zn, jn, rn)) = accepted else { break };
            z = zn;
            j = jn;
            residual = rn;
            records.push(HistoryRecord { iteration: first_iteration + it + 1, value: j, residual });
        }
        Ok((z, j, residual, records))
    }

    fn descend(&self, opts: &SolverOptions, z0: StateVector) -> Result<ResonantSolution> {
        let mut z = z0;
        let mut j = self.j(&z)?;
        if !j.is_finite() {
            return Err(Error::NonFinite("J is not finite at the start".into()));
        }
        let mut t = opts.step_init;
        let mut history = Vec::new();
        let mut iterations = 0;
        let mut residual = self.residual(&z)?;
        for iter in 0..opts.max_iters {
            iterations = iter;
            history.push(HistoryRecord { iteration: iter, value: j, residual });
            if residual <= opts.tol_residual {
                break;
            }
            let Some((zn, jn, s)) = self.descent_step(opts, &z, j, residual, t, None)? else { break };
            if !jn.is_finite() {
                return Err(Error::NonFinite("descent produced a non-finite J".into()));
            }
            z = zn;
            j = jn;
            residual = self.residual(&z)?;
            t = (2.0 * s).min(1e6);
        }
        if residual > opts.tol_residual {
            let (zr, jr, rr, records) = self.refine(opts, &z, true, iterations)?;
            if rr < residual {
                iterations += records.len();
                history.extend(records);
                z = zr;
                j = jr;
                residual = rr;
            }
        }
        Ok(ResonantSolution { z, j, residual, iterations, converged: residual <= opts.tol_residual, history })
    }
}

fn check_eigen(eig: &EigenResult, which: &str) -> Result<()> {
    if !eig.converged {
        return Err(Error::Precondition(format!("{which} eigenpair is not converged")));
    }
    Ok(())
}

/// Global minimization of `J` by preconditioned descent from `0` and `±` the
/// first eigenpair; the best of the three runs is returned.
pub fn solve_coercive(
    mesh: &Mesh,
    params: &Params,
    nl: &dyn Nonlinearity,
    h1: &[f64],
    h2: &[f64],
    first: &EigenResult,
    opts: &SolverOptions,
) -> Result<ResonantSolution> {
    opts.validate()?;
    check_eigen(first, "first")?;
    let problem = Problem { mesh, params, data: ResonantData::new(nl, h1, h2, first.lambda) };
    let starts = [StateVector::zeros(mesh.vertex_count()), first.z.clone(), first.z.neg()];
    let mut best: Option<ResonantSolution> = None;
    for z0 in starts {
        let run = problem.descend(opts, z0)?;
        let better = match &best {
            None => true,
            Some(b) => (run.converged && !b.converged) || (run.converged == b.converged && run.j < b.j),
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("three starts"))
}

/// Saddle point of `J` by minimax over paths joining antipodal points of the
/// first-eigenfunction set.
///
/// Θ is `theta_big` when given, otherwise the smallest power of two with `J`
/// below `J(0) - 1` at all four branch points. The path starts as
/// `s E + (1 - s²) W`, `s ∈ [-1, 1]`, with `E` the endpoint and `W` the scaled
/// second eigenpair; interior nodes descend `J` with equal-arclength
/// redistribution, and the highest node is refined to a critical point once the
/// path maximum settles.
#[allow(clippy::too_many_arguments)]
pub fn solve_saddle(
    mesh: &Mesh,
    params: &Params,
    nl: &dyn Nonlinearity,
    h1: &[f64],
    h2: &[f64],
    first: &EigenResult,
    second: &EigenResult,
    opts: &SolverOptions,
    theta_big: Option<f64>,
) -> Result<SaddleSolution> {
    opts.validate()?;
    check_eigen(first, "first")?;
    check_eigen(second, "second")?;
    if !(second.lambda - first.lambda > MIN_SPECTRAL_GAP * first.lambda) {
        return Err(Error::Precondition(format!(
            "λ2 - λ1 = {} is below the gap needed for the saddle construction",
            second.lambda - first.lambda
        )));
    }
    let problem = Problem { mesh, params, data: ResonantData::new(nl, h1, h2, first.lambda) };
    let unit = unit_normalize(mesh, params, &first.z)?;
    let j_at_zero = problem.j(&StateVector::zeros(mesh.vertex_count()))?;

    let branch_values = |theta: f64| -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (k, (branch, sign)) in [(Branch::Aligned, 1.0), (Branch::Aligned, -1.0), (Branch::Mirrored, 1.0), (Branch::Mirrored, -1.0)]
            .into_iter()
            .enumerate()
        {
            out[k] = problem.j(&sign_branch(&unit, sign * theta, branch, params))?;
        }
        Ok(out)
    };
    let theta = match theta_big {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::Parameter(format!("Θ must be positive, got {t}"))),
        None => {
            let mut found = None;
            for k in 0..=THETA_MAX_DOUBLINGS {
                let t = 2f64.powi(k);
                if branch_values(t)?.iter().all(|&j| j < j_at_zero - 1.0) {
                    found = Some(t);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Degenerate("J does not fall below J(0) - 1 on all branches up to Θ = 2^20".into())
            })?
        }
    };

    let mut samples = Vec::new();
    let mut per_scale = Vec::new();
    for factor in [1.0, 2.0, 4.0] {
        let values = branch_values(factor * theta)?;
        for (k, (branch, sign)) in [(Branch::Aligned, 1.0), (Branch::Aligned, -1.0), (Branch::Mirrored, 1.0), (Branch::Mirrored, -1.0)]
            .into_iter()
            .enumerate()
        {
            samples.push(BranchSample { branch, theta: sign * factor * theta, j: values[k] });
        }
        per_scale.push(values);
    }
    let branches_decreasing = (0..4).all(|k| per_scale[1][k] < per_scale[0][k] && per_scale[2][k] < per_scale[1][k]);
    let endpoint_max_j = per_scale[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let end = sign_branch(&unit, theta, Branch::Aligned, params);
    let bulge = sign_branch(&unit_normalize(mesh, params, &second.z)?, theta, Branch::Aligned, params);
    let mut nodes: Vec<StateVector> = (0..PATH_NODES)
        .map(|i| {
            let s = -1.0 + 2.0 * i as f64 / (PATH_NODES - 1) as f64;
            StateVector::combine(s, &end, 1.0 - s * s, &bulge)
        })
        .collect();
    let mut values = nodes.iter().map(|z| problem.j(z)).collect::<Result<Vec<_>>>()?;
    let mut steps = alloc::vec![opts.step_init; PATH_NODES];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut next_refine = 0;
    let mut result: Option<(StateVector, f64, f64)> = None;
    let lambda2 = second.lambda;
    let path_gap = |nodes: &[StateVector]| -> Result<f64> {
        let mut gap = f64::NEG_INFINITY;
        for pair in nodes.windows(2) {
            for k in 0..GAP_SUBSAMPLES {
                let s = k as f64 / GAP_SUBSAMPLES as f64;
                let z = StateVector::combine(1.0 - s, &pair[0], s, &pair[1]);
                gap = gap.max(phi(mesh, params, &z)? - lambda2 * psi(mesh, params, &z)?);
            }
        }
        Ok(gap)
    };
    let mut min_path_lambda2_gap = path_gap(&nodes)?;

    for iter in 0..opts.max_iters {
        iterations = iter;
        let k_max = argmax_interior(&values);
        let residual = problem.residual(&nodes[k_max])?;
        history.push(HistoryRecord { iteration: iter, value: values[k_max], residual });
        if residual <= opts.tol_residual {
            result = Some((nodes[k_max].clone(), values[k_max], residual));
            break;
        }
        if iter >= next_refine && settled(&history) {
            let (zr, jr, rr, _) = problem.refine(opts, &nodes[k_max], false, iter)?;
            let drift = (jr - values[k_max]).abs();
            if rr <= opts.tol_residual && drift <= 0.05 * values[k_max].abs().max(1.0) {
                history.push(HistoryRecord { iteration: iter + 1, value: jr, residual: rr });
                iterations = iter + 1;
                result = Some((zr, jr, rr));
                break;
            }
            next_refine = iter + 10 * SETTLE_WINDOW;
        }

        let spacing = crate::path::arc_lengths(mesh, &nodes)[PATH_NODES - 1] / (PATH_NODES - 1) as f64;
        let mut moved = nodes.clone();
        let mut progress = false;
        for k in 1..PATH_NODES - 1 {
            let residual_k = problem.residual(&nodes[k])?;
            if let Some((zn, _, s)) =
                problem.descent_step(opts, &nodes[k], values[k], residual_k, steps[k], Some(MAX_MOVE * spacing))?
            {
                moved[k] = zn;
                steps[k] = (2.0 * s).min(1e6);
                progress = true;
            }
        }
        if !progress {
            break;
        }
        nodes = crate::path::redistribute(mesh, &moved, PATH_NODES)
            .ok_or_else(|| Error::Degenerate("saddle path collapsed".into()))?;
        values = nodes.iter().map(|z| problem.j(z)).collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("J is not finite on the path".into()));
        }
        min_path_lambda2_gap = min_path_lambda2_gap.min(path_gap(&nodes)?);
    }

    let (z, j, residual) = match result {
        Some(r) => r,
        None => {
            let k = argmax_interior(&values);
            (nodes[k].clone(), values[k], problem.residual(&nodes[k])?)
        }
    };
    let path_lambda2_gap = path_gap(&nodes)?;
    Ok(SaddleSolution {
        solution: ResonantSolution { z, j, residual, iterations, converged: residual <= opts.tol_residual, history },
        theta,
        j_at_zero,
        samples,
        branches_decreasing,
        endpoint_max_j,
        path_values: values,
        path_lambda2_gap,
        min_path_lambda2_gap,
    })
}

fn argmax_interior(values: &[f64]) -> usize {
    (1..values.len() - 1).fold(1, |best, k| if values[k] > values[best] { k } else { best })
}

/// The path maximum changed by less than 1e-3 (relative, floor 1) over the last
/// [`SETTLE_WINDOW`] iterations.
fn settled(history: &[HistoryRecord]) -> bool {
    let n = history.len();
    if n <= 2 * SETTLE_WINDOW {
        return false;
    }
    let (old, new) = (history[n - 1 - SETTLE_WINDOW].value, history[n - 1].value);
    (new - old).abs() <= 1e-3 * new.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{solve_lambda1, solve_lambda2};
    use crate::resonance::ArctanSum;

    fn setup(n: usize) -> (Mesh, Params, EigenResult) {
        let mesh = Mesh::interval(1.0, n).unwrap();
        let params = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let first = solve_lambda1(&mesh, &params, &SolverOptions::default(), None).unwrap();
        (mesh, params, first)
    }

    #[test]
    fn flat_functional_minimum_at_zero() {
        let (mesh, params, first) = setup(32);
        let zero = alloc::vec![0.0; mesh.vertex_count()];
        let sol = solve_coercive(&mesh, &params, &ArctanSum::new(0.0, 0.0), &zero, &zero, &first, &SolverOptions::default())
            .unwrap();
        assert!(sol.converged);
        assert!(sol.j <= 1e-10);
    }

    #[test]
    fn coercive_with_forcing_lowers_j() {
        let (mesh, params, first) = setup(32);
        let h = alloc::vec![0.5; mesh.vertex_count()];
        let opts = SolverOptions { tol_residual: 1e-8, ..SolverOptions::default() };
        let sol = solve_coercive(&mesh, &params, &ArctanSum::new(-1.0, -1.0), &h, &h, &first, &opts).unwrap();
        assert!(sol.converged, "residual {}", sol.residual);
        assert!(sol.j < 0.0);
        assert!(sol.history.windows(2).all(|w| w[1].value <= w[0].value + 1e-12 * w[0].value.abs().max(1.0)));
    }

    #[test]
    fn saddle_requires_gap() {
        let (mesh, params, first) = setup(16);
        let zero = alloc::vec![0.0; mesh.vertex_count()];
        let r = solve_saddle(&mesh, &params, &ArctanSum::new(1.0, 1.0), &zero, &zero, &first, &first, &SolverOptions::default(), None);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn saddle_with_forcing() {
        let (mesh, params, first) = setup(32);
        let opts = SolverOptions::default();
        let second = solve_lambda2(&mesh, &params, &opts, &first).unwrap();
        let h = alloc::vec![0.3; mesh.vertex_count()];
        let sol = solve_saddle(&mesh, &params, &ArctanSum::new(1.0, 1.0), &h, &h, &first, &second, &opts, None).unwrap();
        assert!(sol.branches_decreasing);
        assert!(sol.solution.converged, "residual {}", sol.solution.residual);
        assert!(sol.solution.j > sol.endpoint_max_j);
        assert!(sol.path_lambda2_gap >= -1e-8);
        assert!(sol.min_path_lambda2_gap <= sol.path_lambda2_gap);
    }
}
