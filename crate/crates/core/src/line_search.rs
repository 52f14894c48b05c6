//! Armijo backtracking.

/// Sufficient-decrease backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Armijo {
    /// Sufficient-decrease constant in `(0, 1)`.
    pub c: f64,
    /// Step contraction factor in `(0, 1)`.
    pub factor: f64,
    pub max_backtracks: usize,
    /// Absolute tolerance on the comparison, for values at rounding level.
    pub slack: f64,
}

impl Default for Armijo {
    fn default() -> Self {
        Self { c: 1e-4, factor: 0.5, max_backtracks: 60, slack: 0.0 }
    }
}

/// Accepted step of a line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t: f64,
    pub value: f64,
}

impl Armijo {
    /// Finds `t ≤ t0` with `f(t) ≤ f0 - c t decrease_rate`, where `decrease_rate > 0` is
    /// the directional decrease `-f'(0)`. Non-finite trial values are rejected.
    pub fn minimize<F: FnMut(f64) -> f64>(&self, f0: f64, decrease_rate: f64, t0: f64, mut f: F) -> Option<Step> {
        if !(decrease_rate > 0.0) {
            return None;
        }
        let mut t = t0;
        for _ in 0..=self.max_backtracks {
            let value = f(t);
            if value.is_finite() && value <= f0 - self.c * t * decrease_rate + self.slack {
                return Some(Step { t, value });
            }
            t *= self.factor;
        }
        None
    }

    /// Ascent counterpart of [`Armijo::minimize`]: `f(t) ≥ f0 + c t increase_rate`.
    pub fn maximize<F: FnMut(f64) -> f64>(&self, f0: f64, increase_rate: f64, t0: f64, mut f: F) -> Option<Step> {
        self.minimize(-f0, increase_rate, t0, |t| -f(t))
            .map(|s| Step { t: s.t, value: -s.value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_descent() {
        let armijo = Armijo::default();
        // f(x) = x², from x = 1 along d = -2: f(t) = (1 - 2t)²
        let step = armijo.minimize(1.0, 4.0, 1.0, |t| (1.0 - 2.0 * t).powi(2)).unwrap();
        assert_eq!(step.t, 0.5);
        assert_eq!(step.value, 0.0);
    }

    #[test]
    fn ascent_and_rejection() {
        let armijo = Armijo::default();
        let step = armijo.maximize(0.0, 1.0, 8.0, |t| t - t * t).unwrap();
        assert!(step.value > 0.0 && step.t <= 1.0);
        assert!(armijo.minimize(0.0, 1.0, 1.0, |_| f64::NAN).is_none());
        assert!(armijo.minimize(0.0, -1.0, 1.0, |t| -t).is_none());
    }
}
