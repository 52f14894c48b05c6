//! Analytic gradients against central finite differences.

use pqlap_core::functionals::{grad_j, grad_phi, grad_psi, j_value, phi, psi, ResonantData};
use pqlap_core::resonance::ArctanSum;
use pqlap_core::starts::{random_smooth, rng};
use pqlap_core::{Covector, Mesh, Params, Result, StateVector};

const REL_TOL: f64 = 1e-5;
const STATES: usize = 20;
const CASES: [(f64, f64, f64); 3] = [(2.0, 2.0, 0.0), (3.0, 1.5, 0.0), (2.5, 2.5, 0.25)];

fn fd_gradient<F: Fn(&StateVector) -> Result<f64>>(mesh: &Mesh, z: &StateVector, f: F) -> Covector {
    let n = mesh.vertex_count();
    let mut out = Covector::zeros(n);
    for i in 0..n {
        if mesh.is_boundary(i) {
            continue;
        }
        for block in 0..2 {
            let x = if block == 0 { z.u[i] } else { z.v[i] };
            let h = 1e-6 * x.abs().max(1e-2);
            let eval = |d: f64| {
                let mut w = z.clone();
                if block == 0 {
                    w.u[i] += d;
                } else {
                    w.v[i] += d;
                }
                f(&w).unwrap()
            };
            let d = (eval(h) - eval(-h)) / (2.0 * h);
            if block == 0 {
                out.du[i] = d;
            } else {
                out.dv[i] = d;
            }
        }
    }
    out
}

fn relative_error(exact: &Covector, fd: &Covector) -> f64 {
    let diff = exact.du.iter().chain(&exact.dv).zip(fd.du.iter().chain(&fd.dv));
    let num = diff.map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    num / exact.max_abs().max(1e-300)
}

fn meshes() -> Vec<Mesh> {
    vec![Mesh::interval(1.0, 24).unwrap(), Mesh::rectangle(1.0, 1.0, 6, 6).unwrap()]
}

fn states(mesh: &Mesh, seed: u64) -> Vec<StateVector> {
    let mut r = rng(seed);
    (0..STATES).map(|_| random_smooth(mesh, &mut r, 4)).collect()
}

#[test]
fn grad_phi_matches_finite_differences() {
    for mesh in meshes() {
        for (k, &(p, q, alpha)) in CASES.iter().enumerate() {
            let params = Params::with_coupled_beta(p, q, alpha).unwrap();
            for z in states(&mesh, 10 + k as u64) {
                let g = grad_phi(&mesh, &params, &z).unwrap();
                let fd = fd_gradient(&mesh, &z, |w| phi(&mesh, &params, w));
                let err = relative_error(&g, &fd);
                assert!(err <= REL_TOL, "(p,q)=({p},{q}) dim {}: {err:e}", mesh.dim());
            }
        }
    }
}

#[test]
fn grad_psi_matches_finite_differences() {
    for mesh in meshes() {
        for (k, &(p, q, alpha)) in CASES.iter().enumerate() {
            let params = Params::with_coupled_beta(p, q, alpha).unwrap();
            for z in states(&mesh, 20 + k as u64) {
                let g = grad_psi(&mesh, &params, &z).unwrap();
                let fd = fd_gradient(&mesh, &z, |w| psi(&mesh, &params, w));
                let err = relative_error(&g, &fd);
                assert!(err <= REL_TOL, "(p,q)=({p},{q}) dim {}: {err:e}", mesh.dim());
            }
        }
    }
}

#[test]
fn grad_j_matches_finite_differences() {
    let nl = ArctanSum::with_modulation(-1.0, 0.7, 0.3);
    for mesh in meshes() {
        let h1 = mesh.sample(|x| 0.4 + x[0]);
        let h2 = mesh.sample(|x| -0.2 * x[0] * x[1]);
        for (k, &(p, q, alpha)) in CASES.iter().enumerate() {
            let params = Params::with_coupled_beta(p, q, alpha).unwrap();
            let data = ResonantData::new(&nl, &h1, &h2, 9.87);
            for z in states(&mesh, 30 + k as u64) {
                let z = z.scaled(3.0);
                let g = grad_j(&mesh, &params, &z, &data).unwrap();
                let fd = fd_gradient(&mesh, &z, |w| j_value(&mesh, &params, w, &data));
                let err = relative_error(&g, &fd);
                assert!(err <= REL_TOL, "(p,q)=({p},{q}) dim {}: {err:e}", mesh.dim());
            }
        }
    }
}
