//! Randomized Picone identity checks on admissible pairs.

use pqlap_core::picone::{picone_fields, verify_picone};
use pqlap_core::starts::{bump, random_smooth, rng, uniform};
use pqlap_core::Mesh;
use proptest::prelude::*;

const EXPONENTS: [f64; 6] = [1.2, 1.5, 2.0, 2.5, 3.0, 4.0];

/// `v > 0` inside, `u ≥ 0` with occasional interior zeros.
fn admissible_pair(mesh: &Mesh, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let b = bump(mesh);
    let wu = random_smooth(mesh, &mut r, 3);
    let wv = random_smooth(mesh, &mut r, 3);
    let amp_u = uniform(&mut r, 0.1, 2.0);
    let amp_v = uniform(&mut r, 0.1, 2.0);
    let cut = uniform(&mut r, -0.3, 0.3);
    let u = b.iter().zip(&wu.u).map(|(bi, w)| amp_u * (bi * (1.0 + 0.5 * w) + cut * w).max(0.0)).collect();
    let v = b.iter().zip(&wv.v).map(|(bi, w)| amp_v * bi * (1.0 + 0.4 * w.clamp(-1.0, 1.0))).collect();
    (u, v)
}

fn meshes() -> [Mesh; 2] {
    [Mesh::interval(1.0, 12).unwrap(), Mesh::rectangle(1.0, 1.0, 6, 6).unwrap()]
}

#[test]
fn identity_and_positivity_on_random_pairs() {
    for mesh in meshes() {
        for seed in 0..200 {
            let (u, v) = admissible_pair(&mesh, seed);
            for r in EXPONENTS {
                let rep = verify_picone(&mesh, r, &u, &v, 1e-10).unwrap();
                assert!(rep.identity_gap <= 1e-10, "r={r} seed={seed}: gap {:e}", rep.identity_gap);
                assert!(rep.min_l >= -1e-10, "r={r} seed={seed}: min {:e}", rep.min_l);
                assert!(rep.pass);
            }
        }
    }
}

#[test]
fn proportional_pairs_give_zero() {
    for mesh in meshes() {
        let mut g = rng(99);
        for seed in 0..200 {
            let (_, v) = admissible_pair(&mesh, seed);
            let k = uniform(&mut g, 0.0, 3.0);
            let u: Vec<f64> = v.iter().map(|x| k * x).collect();
            for r in EXPONENTS {
                let f = picone_fields(&mesh, r, &u, &v).unwrap();
                let max_l = f.l_values.iter().map(|x| x.abs()).fold(0.0, f64::max);
                assert!(max_l <= 1e-12, "r={r} k={k}: {max_l:e}");
            }
        }
    }
}

#[test]
fn quadratic_case_matches_closed_form() {
    for mesh in meshes() {
        for seed in 0..200 {
            let (u, v) = admissible_pair(&mesh, seed);
            let f = picone_fields(&mesh, 2.0, &u, &v).unwrap();
            for e in 0..mesh.element_count() {
                let nodes = mesh.element(e);
                let ub = nodes.iter().map(|&i| u[i]).sum::<f64>() / nodes.len() as f64;
                let vb = nodes.iter().map(|&i| v[i]).sum::<f64>() / nodes.len() as f64;
                let k = if vb > 0.0 { ub / vb } else { 0.0 };
                let g = mesh.basis_gradients(e);
                let mut d = [0.0; 2];
                for (a, &i) in nodes.iter().enumerate() {
                    for c in 0..2 {
                        d[c] += (u[i] - k * v[i]) * g[a][c];
                    }
                }
                let closed = d[0] * d[0] + d[1] * d[1];
                assert!((f.l_values[e] - closed).abs() <= 1e-12, "element {e}: {} vs {closed}", f.l_values[e]);
            }
        }
    }
}

proptest! {
    #[test]
    fn l_scales_with_power_r(seed in 0u64..10_000, c in 0.1f64..10.0, ri in 0usize..6) {
        let r = EXPONENTS[ri];
        let mesh = Mesh::interval(1.0, 10).unwrap();
        let (u, v) = admissible_pair(&mesh, seed);
        let base = picone_fields(&mesh, r, &u, &v).unwrap();
        let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
        let cv: Vec<f64> = v.iter().map(|x| c * x).collect();
        let scaled = picone_fields(&mesh, r, &cu, &cv).unwrap();
        let cr = c.powf(r);
        for (a, b) in base.l_values.iter().zip(&scaled.l_values) {
            prop_assert!((b - cr * a).abs() <= 1e-9 * cr.max(1.0) * (1.0 + a.abs()));
        }
    }
}

#[test]
fn inadmissible_pairs_are_rejected() {
    let mesh = Mesh::interval(1.0, 8).unwrap();
    let (u, mut v) = admissible_pair(&mesh, 1);
    let mut neg = u.clone();
    neg[3] = -1e-3;
    assert!(verify_picone(&mesh, 2.0, &neg, &v, 1e-10).is_err());
    assert!(verify_picone(&mesh, 1.0, &u, &v, 1e-10).is_err());
    v[4] = 0.0;
    assert!(verify_picone(&mesh, 2.0, &u, &v, 1e-10).is_err());
}
