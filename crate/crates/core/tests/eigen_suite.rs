//! Eigenvalue oracles and structural checks on the computed eigenpairs.

use core::f64::consts::PI;

use pqlap_core::eigen::{check_sign_structure, isolation_scan, simplicity_check, solve_lambda1, solve_lambda2};
use pqlap_core::functionals::{eigen_residual, phi};
use pqlap_core::{Mesh, Params, SolverOptions};

#[test]
fn first_eigenvalue_interval() {
    let mesh = Mesh::interval(1.0, 256).unwrap();
    let params = Params::symmetric(2.0).unwrap();
    let res = solve_lambda1(&mesh, &params, &SolverOptions::default(), None).unwrap();
    assert!(res.converged);
    assert!((res.lambda - PI * PI).abs() / (PI * PI) < 5e-3, "{}", res.lambda);
    assert!((phi(&mesh, &params, &res.z).unwrap() - 1.0).abs() < 1e-12);
    assert!(check_sign_structure(&mesh, &res.z).both_positive());
    let r = eigen_residual(&mesh, &params, &res.z, res.lambda).unwrap();
    assert!(r <= 1e-8);
}

#[test]
fn first_eigenvalue_square() {
    let mesh = Mesh::rectangle(1.0, 1.0, 24, 24).unwrap();
    let params = Params::symmetric(2.0).unwrap();
    let res = solve_lambda1(&mesh, &params, &SolverOptions::default(), None).unwrap();
    assert!(res.converged);
    let exact = 2.0 * PI * PI;
    assert!((res.lambda - exact).abs() / exact < 2e-2, "{}", res.lambda);
}

#[test]
fn mixed_exponents_keep_positivity() {
    let mesh = Mesh::interval(1.0, 128).unwrap();
    let params = Params::with_coupled_beta(3.0, 1.5, 0.5).unwrap();
    let res = solve_lambda1(&mesh, &params, &SolverOptions::default(), None).unwrap();
    assert!(res.converged, "{}", res.residual);
    assert!(check_sign_structure(&mesh, &res.z).both_positive());
}

#[test]
fn second_eigenvalue_changes_sign() {
    let mesh = Mesh::interval(1.0, 128).unwrap();
    let params = Params::symmetric(2.0).unwrap();
    let opts = SolverOptions::default();
    let first = solve_lambda1(&mesh, &params, &opts, None).unwrap();
    let second = solve_lambda2(&mesh, &params, &opts, &first).unwrap();
    assert!(second.converged);
    let exact = 4.0 * PI * PI;
    assert!((second.lambda - exact).abs() / exact < 1e-2, "{}", second.lambda);
    assert!(check_sign_structure(&mesh, &second.z).both_change_sign());
    assert!(second.lambda > first.lambda);
}

#[test]
fn multistart_agrees_on_first_eigenpair() {
    let mesh = Mesh::interval(1.0, 64).unwrap();
    let params = Params::symmetric(2.0).unwrap();
    let rep = simplicity_check(&mesh, &params, &SolverOptions::default()).unwrap();
    assert!(rep.failed.is_empty());
    assert_eq!(rep.runs, 8);
    assert!(rep.max_deviation <= 1e-4);
    assert!(rep.lambda_spread <= 1e-8);
}

#[test]
fn gap_between_first_two_eigenvalues_has_residual_floor() {
    let mesh = Mesh::interval(1.0, 64).unwrap();
    let params = Params::symmetric(2.0).unwrap();
    let opts = SolverOptions { n_starts: 4, ..SolverOptions::default() };
    let first = solve_lambda1(&mesh, &params, &opts, None).unwrap();
    let second = solve_lambda2(&mesh, &params, &opts, &first).unwrap();
    let scan =
        isolation_scan(&mesh, &params, &opts, &[&first, &second], (first.lambda + 0.5, second.lambda - 0.5), 5)
            .unwrap();
    let floor = scan.iter().map(|s| s.min_residual).fold(f64::INFINITY, f64::min);
    assert!(floor >= 10.0 * opts.tol_residual, "{floor:e}");
}
