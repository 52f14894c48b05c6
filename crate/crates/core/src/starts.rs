//! Initial states: bumps, sine modes, and seeded random smooth fields.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Mesh, StateVector};

/// Deterministic generator used by multi-start routines.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample in `[lo, hi)`.
pub fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * unit
}

/// Product-of-linear bump `Π x_i (L_i - x_i)`, positive in the interior.
pub fn bump(mesh: &Mesh) -> Vec<f64> {
    let [lx, ly] = mesh.extent();
    let dim = mesh.dim();
    mesh.interpolate(|x| {
        let mut b = x[0] * (lx - x[0]);
        if dim == 2 {
            b *= x[1] * (ly - x[1]);
        }
        b
    })
}

/// Dirichlet sine mode `sin(kx π x/Lx) sin(ky π y/Ly)` (the y factor only in 2D).
pub fn sine_mode(mesh: &Mesh, kx: u32, ky: u32) -> Vec<f64> {
    let [lx, ly] = mesh.extent();
    let dim = mesh.dim();
    mesh.interpolate(|x| {
        let mut s = (kx as f64 * PI * x[0] / lx).sin();
        if dim == 2 {
            s *= (ky as f64 * PI * x[1] / ly).sin();
        }
        s
    })
}

/// Default start for λ1: the positive bump in both components.
pub fn positive_start(mesh: &Mesh) -> StateVector {
    let b = bump(mesh);
    StateVector { u: b.clone(), v: b }
}

/// Random combination of the lowest sine modes in each component, with
/// coefficients uniform in `[-1, 1]`.
pub fn random_smooth(mesh: &Mesh, rng: &mut impl RngCore, modes: u32) -> StateVector {
    let modes = modes.max(1);
    let ky_max = if mesh.dim() == 2 { modes } else { 1 };
    let mut u = alloc::vec![0.0; mesh.vertex_count()];
    let mut v = alloc::vec![0.0; mesh.vertex_count()];
    for kx in 1..=modes {
        for ky in 1..=ky_max {
            let shape = sine_mode(mesh, kx, ky);
            let (a, b) = (uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
            let decay = 1.0 / (kx * ky) as f64;
            for ((ui, vi), s) in u.iter_mut().zip(v.iter_mut()).zip(&shape) {
                *ui += a * decay * s;
                *vi += b * decay * s;
            }
        }
    }
    StateVector { u, v }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_positive_inside() {
        let mesh = Mesh::rectangle(2.0, 1.0, 6, 4).unwrap();
        let b = bump(&mesh);
        for (i, &x) in b.iter().enumerate() {
            if mesh.is_boundary(i) {
                assert_eq!(x, 0.0);
            } else {
                assert!(x > 0.0);
            }
        }
    }

    #[test]
    fn seeded_starts_repeat() {
        let mesh = Mesh::interval(1.0, 20).unwrap();
        let a = random_smooth(&mesh, &mut rng(7), 4);
        let b = random_smooth(&mesh, &mut rng(7), 4);
        let c = random_smooth(&mesh, &mut rng(8), 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.u[0], 0.0);
    }

    #[test]
    fn uniform_range() {
        let mut r = rng(1);
        for _ in 0..1000 {
            let x = uniform(&mut r, -2.0, 3.0);
            assert!((-2.0..3.0).contains(&x));
        }
    }
}
