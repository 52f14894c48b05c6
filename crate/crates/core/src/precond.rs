//! Variable-coefficient preconditioner for search directions.
//!
//! Each block uses the stiffness matrix weighted by the second derivative of
//! the integrand of Φ along the current state, so that `P⁻¹` approximates the
//! inverse Hessian of Φ. When both exponents are 2 this is just `K`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::banded::{BandedCholesky, SymmetricBand};
use crate::functionals::riesz;
use crate::{Covector, Mesh, Params, Result, StateVector};

/// Floor of the gradient magnitude in the weights, relative to its mean.
const WEIGHT_FLOOR: f64 = 1e-2;

pub(crate) enum Preconditioner {
    Stiffness,
    Weighted([BandedCholesky; 2]),
}

impl Preconditioner {
    pub(crate) fn at(mesh: &Mesh, params: &Params, z: &StateVector) -> Result<Self> {
        if params.p() == 2.0 && params.q() == 2.0 {
            return Ok(Self::Stiffness);
        }
        let bu = block(mesh, &z.u, params.p(), params.u_weight() * params.p())?;
        let bv = block(mesh, &z.v, params.q(), params.v_weight() * params.q())?;
        let factors = [BandedCholesky::factor(&bu)?, BandedCholesky::factor(&bv)?];
        Ok(Self::Weighted(factors))
    }

    /// `P⁻¹ r`.
    pub(crate) fn apply(&self, mesh: &Mesh, r: &Covector) -> StateVector {
        match self {
            Self::Stiffness => riesz(mesh, r),
            Self::Weighted([fu, fv]) => {
                StateVector { u: mesh.factored_solve(fu, &r.du), v: mesh.factored_solve(fv, &r.dv) }
            }
        }
    }
}

fn block(mesh: &Mesh, w: &[f64], exponent: f64, coefficient: f64) -> Result<SymmetricBand> {
    let norms: Vec<f64> = (0..mesh.element_count())
        .map(|e| {
            let g = mesh.element_gradient(e, w);
            (g[0] * g[0] + g[1] * g[1]).sqrt()
        })
        .collect();
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    let floor = WEIGHT_FLOOR * mean;
    let scale = coefficient * (exponent - 1.0);
    let weights: Vec<f64> = if floor > 0.0 {
        norms.iter().map(|g| scale * (g * g + floor * floor).powf(0.5 * (exponent - 2.0))).collect()
    } else {
        alloc::vec![scale; norms.len()]
    };
    mesh.weighted_stiffness(&weights)
}
