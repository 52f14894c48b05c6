//! Homogeneity and Euler identities of Φ and Ψ.

use pqlap_core::functionals::{e_map, grad_phi, grad_psi, phi, psi, rayleigh_q};
use pqlap_core::starts::{random_smooth, rng, uniform};
use pqlap_core::state::homogeneous_scale;
use pqlap_core::{Mesh, Params, StateVector};
use proptest::prelude::*;

const REL: f64 = 1e-10;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn params_list() -> Vec<Params> {
    vec![
        Params::symmetric(2.0).unwrap(),
        Params::symmetric(1.5).unwrap(),
        Params::with_coupled_beta(3.0, 1.5, 0.0).unwrap(),
        Params::with_coupled_beta(4.0, 2.0, 1.0).unwrap(),
    ]
}

fn random_nodal(mesh: &Mesh, seed: u64) -> StateVector {
    let mut r = rng(seed);
    let u = (0..mesh.vertex_count()).map(|_| uniform(&mut r, -2.0, 2.0)).collect();
    let v = (0..mesh.vertex_count()).map(|_| uniform(&mut r, -2.0, 2.0)).collect();
    mesh.state(u, v).unwrap()
}

fn hundred_states(mesh: &Mesh) -> Vec<StateVector> {
    let mut r = rng(7);
    (0..100)
        .map(|k| if k % 2 == 0 { random_smooth(mesh, &mut r, 5) } else { random_nodal(mesh, k) })
        .collect()
}

#[test]
fn homogeneity_on_hundred_states() {
    for mesh in [Mesh::interval(1.0, 64).unwrap(), Mesh::rectangle(1.0, 1.0, 8, 8).unwrap()] {
        for params in params_list() {
            for z in hundred_states(&mesh) {
                let (f, g, q) = (
                    phi(&mesh, &params, &z).unwrap(),
                    psi(&mesh, &params, &z).unwrap(),
                    rayleigh_q(&mesh, &params, &z).unwrap(),
                );
                for theta in [0.5, 2.0, 10.0] {
                    let w = homogeneous_scale(&z, theta, &params).unwrap();
                    assert!(rel(phi(&mesh, &params, &w).unwrap(), theta * f) <= REL);
                    assert!(rel(psi(&mesh, &params, &w).unwrap(), theta * g) <= REL);
                    assert!(rel(rayleigh_q(&mesh, &params, &w).unwrap(), q) <= REL);
                }
            }
        }
    }
}

#[test]
fn euler_identities_on_hundred_states() {
    for mesh in [Mesh::interval(1.0, 64).unwrap(), Mesh::rectangle(1.0, 1.0, 8, 8).unwrap()] {
        for params in params_list() {
            for z in hundred_states(&mesh) {
                let e = e_map(&z, &params);
                let f = phi(&mesh, &params, &z).unwrap();
                let g = psi(&mesh, &params, &z).unwrap();
                assert!(rel(grad_phi(&mesh, &params, &z).unwrap().pair(&e), f) <= REL);
                assert!(rel(grad_psi(&mesh, &params, &z).unwrap().pair(&e), g) <= REL);
            }
        }
    }
}

proptest! {
    #[test]
    fn homogeneity_for_any_exponents(
        p in 1.2f64..5.0,
        q in 1.2f64..5.0,
        frac in 0.05f64..0.95,
        theta in 1e-3f64..1e3,
        seed in any::<u64>(),
    ) {
        let alpha = frac * p - 1.0;
        let params = Params::with_coupled_beta(p, q, alpha).unwrap();
        let mesh = Mesh::interval(1.0, 16).unwrap();
        let z = random_nodal(&mesh, seed);
        let w = homogeneous_scale(&z, theta, &params).unwrap();
        prop_assert!(rel(phi(&mesh, &params, &w).unwrap(), theta * phi(&mesh, &params, &z).unwrap()) <= REL);
        prop_assert!(rel(psi(&mesh, &params, &w).unwrap(), theta * psi(&mesh, &params, &z).unwrap()) <= REL);
    }

    #[test]
    fn euler_identity_for_any_exponents(
        p in 1.2f64..5.0,
        q in 1.2f64..5.0,
        frac in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let alpha = frac * p - 1.0;
        let params = Params::with_coupled_beta(p, q, alpha).unwrap();
        let mesh = Mesh::rectangle(1.0, 1.0, 4, 4).unwrap();
        let z = random_nodal(&mesh, seed);
        let e = e_map(&z, &params);
        prop_assert!(rel(grad_phi(&mesh, &params, &z).unwrap().pair(&e), phi(&mesh, &params, &z).unwrap()) <= REL);
        prop_assert!(rel(grad_psi(&mesh, &params, &z).unwrap().pair(&e), psi(&mesh, &params, &z).unwrap()) <= REL);
    }

    #[test]
    fn psi_is_bounded_by_young(seed in any::<u64>()) {
        let params = Params::with_coupled_beta(3.0, 1.5, 0.5).unwrap();
        let mesh = Mesh::interval(1.0, 16).unwrap();
        let z = random_nodal(&mesh, seed);
        let bound = pqlap_core::functionals::young_bound(&mesh, &params, &z).unwrap();
        prop_assert!(psi(&mesh, &params, &z).unwrap() <= bound * (1.0 + 1e-12));
    }
}
