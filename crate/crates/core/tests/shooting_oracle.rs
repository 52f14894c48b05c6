//! λ1 of the symmetric system against a shooting-method eigenvalue of the
//! scalar 1D p-Laplacian on (0, 1).

use pqlap_core::eigen::solve_lambda1;
use pqlap_core::{Mesh, Params, SolverOptions};

fn phi_pow(x: f64, r: f64) -> f64 {
    x.abs().powf(r - 1.0) * x.signum()
}

/// Integrates `u' = φ_{p'}(w)`, `w' = -λ φ_p(u)` from `u(0) = 0`, `w(0) = 1`
/// with classical RK4 and returns `u(1)`.
fn shoot(p: f64, lambda: f64, steps: usize) -> f64 {
    let pc = p / (p - 1.0);
    let rhs = |u: f64, w: f64| (phi_pow(w, pc), -lambda * phi_pow(u, p));
    let h = 1.0 / steps as f64;
    let (mut u, mut w) = (0.0f64, 1.0f64);
    for _ in 0..steps {
        let k1 = rhs(u, w);
        let k2 = rhs(u + 0.5 * h * k1.0, w + 0.5 * h * k1.1);
        let k3 = rhs(u + 0.5 * h * k2.0, w + 0.5 * h * k2.1);
        let k4 = rhs(u + h * k3.0, w + h * k3.1);
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        w += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    u
}

/// Smallest λ with `u(1) = 0`: march λ upward until `u(1)` turns negative,
/// then bisect.
fn shooting_eigenvalue(p: f64) -> f64 {
    let steps = 20_000;
    let mut lo = 0.5;
    assert!(shoot(p, lo, steps) > 0.0);
    let mut hi = lo;
    while shoot(p, hi, steps) > 0.0 {
        lo = hi;
        hi *= 1.25;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shoot(p, mid, steps) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn shooting_reproduces_dirichlet_laplacian() {
    let l = shooting_eigenvalue(2.0);
    let pi2 = core::f64::consts::PI.powi(2);
    assert!((l - pi2).abs() / pi2 < 1e-6, "{l}");
}

#[test]
fn shooting_matches_closed_form_pi_p() {
    for p in [1.5, 3.0] {
        let pi_p = 2.0 * core::f64::consts::PI / (p * (core::f64::consts::PI / p).sin());
        let exact = (p - 1.0) * pi_p.powf(p);
        let l = shooting_eigenvalue(p);
        assert!((l - exact).abs() / exact < 1e-4, "p={p}: {l} vs {exact}");
    }
}

#[test]
fn lambda1_matches_shooting_for_general_p() {
    let mesh = Mesh::interval(1.0, 256).unwrap();
    for p in [1.5, 3.0] {
        let params = Params::symmetric(p).unwrap();
        let res = solve_lambda1(&mesh, &params, &SolverOptions::default(), None).unwrap();
        assert!(res.converged, "p={p} residual {}", res.residual);
        let oracle = shooting_eigenvalue(p);
        let rel = (res.lambda - oracle).abs() / oracle;
        assert!(rel < 1e-2, "p={p}: {} vs {oracle}", res.lambda);
    }
}
