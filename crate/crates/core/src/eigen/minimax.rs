//! λ2 from the sup over odd loops in `M` of `min Ψ`.
//!
//! The loop is stored as `m` points; the remaining `m` are their negatives, so
//! antipodal symmetry holds by construction. Every iteration moves all points
//! up the preconditioned tangential gradient of Q, retracts them to `M`, and
//! redistributes them at equal energy-norm spacing along the half loop
//! `z_0 → … → z_{m-1} → -z_0` (string method). Once the loop minimum has
//! settled, the lowest point is refined locally to the critical point of Q that
//! realizes the sup-min.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use super::{
    finish, normalize_to_manifold, tangential_gradient, EigenResult, HistoryRecord, SolverOptions, ROUNDING_SLACK,
};
use super::polish::polish;
use crate::functionals::{psi, riesz};
use crate::precond::Preconditioner;
use crate::{Error, Mesh, Params, Result, StateVector};

/// Odd closed loop on `M`, sampled at `2m` points with `point(i + m) = -point(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopState {
    points: Vec<StateVector>,
    pub min_index: usize,
}

impl LoopState {
    pub fn new(points: Vec<StateVector>) -> Self {
        Self { points, min_index: 0 }
    }

    /// Number of stored points `m`.
    pub fn stored(&self) -> usize {
        self.points.len()
    }

    /// Number of loop points `2m`.
    pub fn len(&self) -> usize {
        2 * self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point `i mod 2m` of the loop.
    pub fn point(&self, i: usize) -> StateVector {
        let m = self.points.len();
        let i = i % (2 * m);
        if i < m {
            self.points[i].clone()
        } else {
            self.points[i - m].neg()
        }
    }

    pub fn stored_points(&self) -> &[StateVector] {
        &self.points
    }
}

/// λ2 and its eigenpair; see [`solve_lambda2_with_loop`].
pub fn solve_lambda2(mesh: &Mesh, params: &Params, opts: &SolverOptions, first: &EigenResult) -> Result<EigenResult> {
    solve_lambda2_with_loop(mesh, params, opts, first).map(|(r, _)| r)
}

/// λ2 together with the final loop.
pub fn solve_lambda2_with_loop(
    mesh: &Mesh,
    params: &Params,
    opts: &SolverOptions,
    first: &EigenResult,
) -> Result<(EigenResult, LoopState)> {
    opts.validate()?;
    if !first.converged {
        return Err(Error::Precondition("λ2 needs a converged first eigenpair".into()));
    }
    let mut state = initial_loop(mesh, params, opts.loop_samples, &first.z)?;
    let m = state.stored();

    let mut values = loop_values(mesh, params, &state)?;
    let q_max = values.iter().cloned().fold(0.0, f64::max);
    let mut steps = alloc::vec![0.5 * opts.step_init / q_max; m];
    let armijo = opts.armijo();
    let mut history: Vec<HistoryRecord> = Vec::new();
    let mut iterations = 0;
    let mut next_polish = 0;

    for iter in 0..opts.max_iters {
        iterations = iter;
        let (k_min, q_min) = argmin(&values);
        state.min_index = k_min;
        let z_min = &state.points[k_min];
        let (r_min, _) = tangential_gradient(mesh, params, z_min, q_min, 0.0)?;
        let residual = r_min.pair(&riesz(mesh, &r_min)).max(0.0).sqrt() / q_min;
        history.push(HistoryRecord { iteration: iter, value: q_min, residual });
        if residual <= opts.tol_residual {
            let z = z_min.clone();
            return Ok((finish(mesh, params, z, opts, iterations, true, history)?, state));
        }
        if iter >= next_polish && settled(&history) {
            let polished = polish(mesh, params, opts, z_min, POLISH_ITERS)?;
            let q = psi(mesh, params, &polished.z)?;
            if polished.residual <= opts.tol_residual && (q - q_min).abs() <= POLISH_DRIFT * q_min {
                history.push(HistoryRecord { iteration: iter + 1, value: q, residual: polished.residual });
                return Ok((finish(mesh, params, polished.z, opts, iter + 1, true, history)?, state));
            }
            next_polish = iter + SETTLE_WINDOW * 10;
        }

        let spacing = half_loop_length(mesh, &state) / m as f64;
        let mut moved = Vec::with_capacity(m);
        let mut progress = false;
        for k in 0..m {
            let z = &state.points[k];
            let precond = Preconditioner::at(mesh, params, z)?;
            let (exact, dir_cov) = tangential_gradient(mesh, params, z, values[k], opts.epsilon_reg)?;
            let d = precond.apply(mesh, &dir_cov);
            let trial = |t: f64| -> Option<(StateVector, f64)> {
                let zn = normalize_to_manifold(mesh, params, &z.add_scaled(t, &d)).ok()?;
                let value = psi(mesh, params, &zn).ok()?;
                Some((zn, value))
            };
            let slope = exact.pair(&d);
            let t0 = steps[k].min(MAX_MOVE * spacing / mesh.energy_norm(&d).max(f64::MIN_POSITIVE));
            let step = if slope * t0 > ROUNDING_SLACK * values[k] {
                armijo.maximize(values[k], slope, t0, |s| trial(s).map_or(f64::NAN, |(_, v)| v))
            } else {
                None
            };
            match step.and_then(|st| trial(st.t).map(|(zn, _)| (zn, st.t))) {
                Some((zn, t)) => {
                    moved.push(zn);
                    steps[k] = (2.0 * t).min(1e3 / values[k]);
                    progress = true;
                }
                None => moved.push(z.clone()),
            }
        }
        if !progress {
            break;
        }
        let pts = reparametrize(mesh, params, &moved)?;
        if !pts.iter().all(StateVector::is_finite) {
            return Err(Error::NonFinite("loop evolution produced non-finite values".into()));
        }
        state = LoopState::new(pts);
        values = loop_values(mesh, params, &state)?;
    }

    let (k_min, _) = argmin(&values);
    state.min_index = k_min;
    let z = state.points[k_min].clone();
    let result = finish(mesh, params, z, opts, iterations, false, history)?;
    Ok((result, state))
}

fn argmin(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, v)| if v < best.1 { (k, v) } else { best })
}

fn loop_values(mesh: &Mesh, params: &Params, state: &LoopState) -> Result<Vec<f64>> {
    state.points.iter().map(|z| psi(mesh, params, z)).collect()
}

/// Largest move of a loop point per iteration, as a fraction of the point
/// spacing. Larger moves let the loop tunnel through the origin.
const MAX_MOVE: f64 = 0.25;
const SETTLE_WINDOW: usize = 10;
const POLISH_ITERS: usize = 100;
/// Largest relative change of `Ψ` accepted from refinement; larger moves mean
/// the loop minimum was not near the sup-min critical point.
const POLISH_DRIFT: f64 = 0.05;

/// The loop minimum has changed by less than 1e-3 (relative) over the last
/// [`SETTLE_WINDOW`] iterations.
fn settled(history: &[HistoryRecord]) -> bool {
    let n = history.len();
    if n <= 2 * SETTLE_WINDOW {
        return false;
    }
    let (old, new) = (history[n - 1 - SETTLE_WINDOW].value, history[n - 1].value);
    (new - old).abs() <= 1e-3 * new.abs()
}

fn half_loop_length(mesh: &Mesh, state: &LoopState) -> f64 {
    let m = state.stored();
    let nodes: Vec<StateVector> = (0..=m).map(|i| state.point(i)).collect();
    crate::path::arc_lengths(mesh, &nodes)[m]
}

/// Equal energy-norm spacing along `z_0 → … → z_{m-1} → -z_0`, point 0 fixed.
fn reparametrize(mesh: &Mesh, params: &Params, points: &[StateVector]) -> Result<Vec<StateVector>> {
    let m = points.len();
    let mut half: Vec<StateVector> = points.to_vec();
    half.push(points[0].neg());
    let even = crate::path::redistribute(mesh, &half, m + 1)
        .ok_or_else(|| Error::Degenerate("loop collapsed to zero length".into()))?;
    even.into_iter().take(m).map(|z| normalize_to_manifold(mesh, params, &z)).collect()
}

/// Half loop `cos(πs) z1 + sin(πs) w`, `s = j/m`, through the first eigenpair, with
/// `w` a second sine mode in both components made energy-orthogonal to `z1`.
fn initial_loop(mesh: &Mesh, params: &Params, m: usize, z1: &StateVector) -> Result<LoopState> {
    let candidates: &[(u32, u32)] = if mesh.dim() == 2 { &[(2, 1), (1, 2), (2, 2)] } else { &[(2, 1), (3, 1)] };
    let z1_norms = block_norms(mesh, z1);
    for &(kx, ky) in candidates {
        let mode = crate::starts::sine_mode(mesh, kx, ky);
        let mut w = StateVector { u: mode.clone(), v: mode };
        orthogonalize_blocks(mesh, &mut w, z1);
        let w_norms = block_norms(mesh, &w);
        if w_norms[0] <= 1e-8 * z1_norms[0] || w_norms[1] <= 1e-8 * z1_norms[1] {
            continue;
        }
        let w = w.scaled_blocks(z1_norms[0] / w_norms[0], z1_norms[1] / w_norms[1]);
        let points = (0..m)
            .map(|j| {
                let s = PI * j as f64 / m as f64;
                normalize_to_manifold(mesh, params, &StateVector::combine(s.cos(), z1, s.sin(), &w))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(LoopState::new(points));
    }
    Err(Error::Degenerate("no loop perturbation independent of the first eigenpair".into()))
}

fn block_norms(mesh: &Mesh, z: &StateVector) -> [f64; 2] {
    let ku = mesh.stiffness_apply(&z.u);
    let kv = mesh.stiffness_apply(&z.v);
    [
        crate::state::dot(&z.u, &ku).max(0.0).sqrt(),
        crate::state::dot(&z.v, &kv).max(0.0).sqrt(),
    ]
}

fn orthogonalize_blocks(mesh: &Mesh, w: &mut StateVector, z: &StateVector) {
    for (wb, zb) in [(&mut w.u, &z.u), (&mut w.v, &z.v)] {
        let kz = mesh.stiffness_apply(zb);
        let zz = crate::state::dot(zb, &kz);
        if zz > 0.0 {
            let c = crate::state::dot(wb, &kz) / zz;
            for (a, b) in wb.iter_mut().zip(zb.iter()) {
                *a -= c * b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::solve_lambda1;

    #[test]
    fn loop_is_odd() {
        let mesh = Mesh::interval(1.0, 16).unwrap();
        let params = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let first = solve_lambda1(&mesh, &params, &SolverOptions::default(), None).unwrap();
        let state = initial_loop(&mesh, &params, 6, &first.z).unwrap();
        assert_eq!(state.len(), 12);
        for i in 0..12 {
            assert_eq!(state.point(i + 6), state.point(i).neg());
            let phi = crate::functionals::phi(&mesh, &params, &state.point(i)).unwrap();
            assert!((phi - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn coarse_second_eigenvalue() {
        let mesh = Mesh::interval(1.0, 64).unwrap();
        let params = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let opts = SolverOptions::default();
        let first = solve_lambda1(&mesh, &params, &opts, None).unwrap();
        let second = solve_lambda2(&mesh, &params, &opts, &first).unwrap();
        assert!(second.converged, "residual {}", second.residual);
        let target = 4.0 * PI * PI;
        assert!((second.lambda - target).abs() / target < 5e-3, "{}", second.lambda);
    }

    #[test]
    fn unconverged_first_pair_rejected() {
        let mesh = Mesh::interval(1.0, 16).unwrap();
        let params = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let opts = SolverOptions { max_iters: 1, ..SolverOptions::default() };
        let first = solve_lambda1(&mesh, &params, &opts, None).unwrap();
        assert!(matches!(solve_lambda2(&mesh, &params, &opts, &first), Err(Error::Precondition(_))));
    }
}
