//! Exponents of the coupled system and their coupling identity.

use alloc::format;

use crate::{Error, Result};

/// Largest admissible violation of `(α+1)/p + (β+1)/q = 1`.
pub const COUPLING_TOLERANCE: f64 = 1e-12;

/// Exponents `(p, q, α, β)` of the coupled system.
///
/// `α` and `β` are accepted on `(-1, ∞)`: the functionals only need the powers
/// `α+1`, `β+1` to be positive, and the scalar-reduction cases `p = q = 2` or
/// `p = q = 1.5` force `α = β ≤ 0`. [`Params::within_standard_hypotheses`]
/// reports whether the strict positivity `α, β > 0` holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    p: f64,
    q: f64,
    alpha: f64,
    beta: f64,
}

impl Params {
    pub fn new(p: f64, q: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, value) in [("p", p), ("q", q), ("alpha", alpha), ("beta", beta)] {
            if !value.is_finite() {
                return Err(Error::Parameter(format!("{name} must be finite, got {value}")));
            }
        }
        if p <= 1.0 {
            return Err(Error::Parameter(format!("p must exceed 1, got {p}")));
        }
        if q <= 1.0 {
            return Err(Error::Parameter(format!("q must exceed 1, got {q}")));
        }
        if alpha <= -1.0 {
            return Err(Error::Parameter(format!("alpha must exceed -1, got {alpha}")));
        }
        if beta <= -1.0 {
            return Err(Error::Parameter(format!("beta must exceed -1, got {beta}")));
        }
        let defect = coupling_defect(p, q, alpha, beta);
        if defect.abs() > COUPLING_TOLERANCE {
            return Err(Error::Parameter(format!(
                "(alpha+1)/p + (beta+1)/q must equal 1, off by {defect:e}"
            )));
        }
        Ok(Self { p, q, alpha, beta })
    }

    /// Solves the coupling identity for β given `(p, q, α)`.
    pub fn with_coupled_beta(p: f64, q: f64, alpha: f64) -> Result<Self> {
        let beta = q * (1.0 - (alpha + 1.0) / p) - 1.0;
        Self::new(p, q, alpha, beta)
    }

    /// Symmetric exponents `p = q`, `α = β = p/2 - 1`.
    pub fn symmetric(p: f64) -> Result<Self> {
        let alpha = 0.5 * p - 1.0;
        Self::new(p, p, alpha, alpha)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `(α+1)/p`, the weight of the u-gradient energy.
    pub fn u_weight(&self) -> f64 {
        (self.alpha + 1.0) / self.p
    }

    /// `(β+1)/q`, the weight of the v-gradient energy.
    pub fn v_weight(&self) -> f64 {
        (self.beta + 1.0) / self.q
    }

    /// True when `α > 0` and `β > 0`.
    pub fn within_standard_hypotheses(&self) -> bool {
        self.alpha > 0.0 && self.beta > 0.0
    }

    /// Which of `p < q`, `p = q`, `p > q` applies.
    pub fn exponent_order(&self) -> ExponentOrder {
        if (self.p - self.q).abs() <= COUPLING_TOLERANCE * self.p.max(self.q) {
            ExponentOrder::Equal
        } else if self.p < self.q {
            ExponentOrder::Less
        } else {
            ExponentOrder::Greater
        }
    }
}

/// `(α+1)/p + (β+1)/q - 1`.
pub fn coupling_defect(p: f64, q: f64, alpha: f64, beta: f64) -> f64 {
    (alpha + 1.0) / p + (beta + 1.0) / q - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentOrder {
    Less,
    Equal,
    Greater,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_broken_coupling() {
        assert!(Params::new(2.0, 2.0, 0.1, 0.0).is_err());
        assert!(Params::new(2.0, 2.0, 0.0, 0.0).is_ok());
    }

    #[test]
    fn rejects_small_exponents() {
        assert!(Params::new(1.0, 2.0, 0.0, 0.0).is_err());
        assert!(Params::new(2.0, 0.5, 0.0, 0.0).is_err());
        assert!(Params::with_coupled_beta(3.0, 3.0, -1.5).is_err());
    }

    #[test]
    fn coupled_beta_satisfies_identity() {
        let params = Params::with_coupled_beta(2.0, 3.0, 0.25).unwrap();
        assert!((params.beta() - 0.125).abs() < 1e-14);
        assert!(coupling_defect(2.0, 3.0, 0.25, params.beta()).abs() < 1e-15);
        let params = Params::with_coupled_beta(2.5, 2.5, 0.25).unwrap();
        assert!((params.beta() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn symmetric_case() {
        let params = Params::symmetric(3.0).unwrap();
        assert_eq!(params.alpha(), 0.5);
        assert_eq!(params.exponent_order(), ExponentOrder::Equal);
        assert!(params.within_standard_hypotheses());
        assert!(!Params::symmetric(2.0).unwrap().within_standard_hypotheses());
    }
}
