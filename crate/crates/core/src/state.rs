//! Discrete pairs `z = (u, v)`, their duals, and (p,q)-homogeneous scaling.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Params, Result};

/// Nodal coefficients of a pair `(u, v)`, one value per mesh vertex.
///
/// Entries at Dirichlet vertices are kept at exactly zero by every operation in
/// this crate that produces a state from mesh data.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Assembled weak-form residual or functional gradient, same layout as [`StateVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
}

impl StateVector {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        crate::error::check_len(u.len(), v.len())?;
        Ok(Self { u, v })
    }

    pub fn zeros(n: usize) -> Self {
        Self { u: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.v).all(|&x| x == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.scaled_blocks(a, a)
    }

    pub fn scaled_blocks(&self, a: f64, b: f64) -> Self {
        Self {
            u: self.u.iter().map(|x| a * x).collect(),
            v: self.v.iter().map(|x| b * x).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    /// `self + a * other`.
    pub fn add_scaled(&self, a: f64, other: &StateVector) -> Self {
        let mut out = self.clone();
        out.axpy(a, other);
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &StateVector) {
        for (x, y) in self.u.iter_mut().zip(&other.u) {
            *x += a * y;
        }
        for (x, y) in self.v.iter_mut().zip(&other.v) {
            *x += a * y;
        }
    }

    /// `a * self + b * other`.
    pub fn combine(a: f64, x: &StateVector, b: f64, y: &StateVector) -> Self {
        Self {
            u: x.u.iter().zip(&y.u).map(|(p, q)| a * p + b * q).collect(),
            v: x.v.iter().zip(&y.v).map(|(p, q)| a * p + b * q).collect(),
        }
    }

    pub fn sub(&self, other: &StateVector) -> Self {
        Self::combine(1.0, self, -1.0, other)
    }

    /// Largest nodal deviation over both components.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .chain(self.v.iter().zip(&other.v))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.v).map(|x| x.abs()).fold(0.0, f64::max)
    }
}

impl Covector {
    pub fn zeros(n: usize) -> Self {
        Self { du: vec![0.0; n], dv: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.du.len()
    }

    pub fn is_empty(&self) -> bool {
        self.du.is_empty()
    }

    /// Duality pairing `⟨self, z⟩`.
    pub fn pair(&self, z: &StateVector) -> f64 {
        dot(&self.du, &z.u) + dot(&self.dv, &z.v)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            du: self.du.iter().map(|x| a * x).collect(),
            dv: self.dv.iter().map(|x| a * x).collect(),
        }
    }

    /// `a * x + b * y`.
    pub fn combine(a: f64, x: &Covector, b: f64, y: &Covector) -> Self {
        Self {
            du: x.du.iter().zip(&y.du).map(|(p, q)| a * p + b * q).collect(),
            dv: x.dv.iter().zip(&y.dv).map(|(p, q)| a * p + b * q).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.du.iter().chain(&self.dv).map(|x| x.abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Returns `(θ^{1/p} u, θ^{1/q} v)`.
pub fn homogeneous_scale(z: &StateVector, theta: f64, params: &Params) -> Result<StateVector> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Parameter(alloc::format!(
            "scaling factor must be positive and finite, got {theta}"
        )));
    }
    Ok(z.scaled_blocks(theta.powf(1.0 / params.p()), theta.powf(1.0 / params.q())))
}

/// The two sign branches generating the first-eigenfunction set from one eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `(|θ|^{1/p} u, |θ|^{1/q} v) sgn θ`
    Aligned,
    /// `(-|θ|^{1/p} u, |θ|^{1/q} v) sgn θ`
    Mirrored,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::Aligned, Branch::Mirrored];
}

/// Point of the given branch at parameter θ; `θ = 0` maps to the origin.
pub fn sign_branch(z: &StateVector, theta: f64, branch: Branch, params: &Params) -> StateVector {
    if theta == 0.0 {
        return StateVector::zeros(z.len());
    }
    let s = theta.signum();
    let a = theta.abs().powf(1.0 / params.p());
    let b = theta.abs().powf(1.0 / params.q());
    match branch {
        Branch::Aligned => z.scaled_blocks(s * a, s * b),
        Branch::Mirrored => z.scaled_blocks(-s * a, s * b),
    }
}
