//! Resonant systems at λ1: nonlinearities with bounded derivatives and
//! quadrant limits, Landesman–Lazer classification, and the two solvers.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
#[allow(unused_imports)]
use num_traits::Float;

use crate::eigen::EigenResult;
use crate::functionals::seminorm_powers;
use crate::params::ExponentOrder;
use crate::state::homogeneous_scale;
use crate::{Error, Mesh, Params, Result, StateVector};

mod solve;

pub use solve::{solve_coercive, solve_saddle, BranchSample, ResonantSolution, SaddleSolution};

/// Limits of `F_s` and `F_t` as `(s, t)` tends to infinity in each quadrant.
/// The suffix gives the signs of `s` and `t`: `pm` is `s → +∞, t → -∞`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadrantLimits {
    pub fs_pp: f64,
    pub fs_pm: f64,
    pub fs_mp: f64,
    pub fs_mm: f64,
    pub ft_pp: f64,
    pub ft_pm: f64,
    pub ft_mp: f64,
    pub ft_mm: f64,
}

/// `F(x, s, t)`, C¹ in `(s, t)`, with bounded partial derivatives and
/// quadrant limits supplied as data.
pub trait Nonlinearity {
    fn value(&self, x: [f64; 2], s: f64, t: f64) -> f64;
    fn d_s(&self, x: [f64; 2], s: f64, t: f64) -> f64;
    fn d_t(&self, x: [f64; 2], s: f64, t: f64) -> f64;
    /// Bound `M` on `|F_s|` and `|F_t|`.
    fn bound(&self) -> f64;
    fn limits(&self, x: [f64; 2]) -> QuadrantLimits;
}

/// `g(s) = s·atan(s) - ½ ln(1 + s²)`, the antiderivative of `atan` with `g(0) = 0`.
pub fn arctan_primitive(s: f64) -> f64 {
    s * s.atan() - 0.5 * (s * s).ln_1p()
}

/// `F(x, s, t) = m(x) (a g(s) + b g(t))` with `m(x) = 1 + c cos(π(x₀ + x₁))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArctanSum {
    pub a: f64,
    pub b: f64,
    /// Amplitude `c` of the modulation.
    pub modulation: f64,
}

impl ArctanSum {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b, modulation: 0.0 }
    }

    pub fn with_modulation(a: f64, b: f64, modulation: f64) -> Self {
        Self { a, b, modulation }
    }

    fn weight(&self, x: [f64; 2]) -> f64 {
        if self.modulation == 0.0 {
            1.0
        } else {
            1.0 + self.modulation * (core::f64::consts::PI * (x[0] + x[1])).cos()
        }
    }
}

impl Nonlinearity for ArctanSum {
    fn value(&self, x: [f64; 2], s: f64, t: f64) -> f64 {
        self.weight(x) * (self.a * arctan_primitive(s) + self.b * arctan_primitive(t))
    }

    fn d_s(&self, x: [f64; 2], s: f64, _t: f64) -> f64 {
        self.weight(x) * self.a * s.atan()
    }

    fn d_t(&self, x: [f64; 2], _s: f64, t: f64) -> f64 {
        self.weight(x) * self.b * t.atan()
    }

    fn bound(&self) -> f64 {
        (1.0 + self.modulation.abs()) * self.a.abs().max(self.b.abs()) * FRAC_PI_2
    }

    fn limits(&self, x: [f64; 2]) -> QuadrantLimits {
        let fs = self.weight(x) * self.a * FRAC_PI_2;
        let ft = self.weight(x) * self.b * FRAC_PI_2;
        QuadrantLimits { fs_pp: fs, fs_pm: fs, fs_mp: -fs, fs_mm: -fs, ft_pp: ft, ft_pm: -ft, ft_mp: ft, ft_mm: -ft }
    }
}

/// Spot check of the derivative bound on seeded random samples at the mesh
/// vertices with `|s|, |t| ≤ 1e3`. Returns the largest observed derivative.
pub fn check_bound(nl: &dyn Nonlinearity, mesh: &Mesh, seed: u64, samples: usize) -> Result<f64> {
    let mut rng = crate::starts::rng(seed);
    let m = nl.bound();
    let mut largest = 0.0f64;
    for k in 0..samples {
        let x = mesh.vertices()[k % mesh.vertex_count()];
        let s = crate::starts::uniform(&mut rng, -1e3, 1e3);
        let t = crate::starts::uniform(&mut rng, -1e3, 1e3);
        let d = nl.d_s(x, s, t).abs().max(nl.d_t(x, s, t).abs());
        if !(d <= m * (1.0 + 1e-12)) {
            return Err(Error::Parameter(format!("|F_s| or |F_t| = {d} exceeds the bound {m} at s={s}, t={t}")));
        }
        largest = largest.max(d);
    }
    Ok(largest)
}

/// Spot check that the supplied quadrant limits match the derivatives at
/// `|s| = |t| = big` to within `tol` at every mesh vertex.
pub fn check_limits(nl: &dyn Nonlinearity, mesh: &Mesh, big: f64, tol: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in mesh.vertices() {
        let l = nl.limits(x);
        let quadrants = [
            (big, big, l.fs_pp, l.ft_pp),
            (big, -big, l.fs_pm, l.ft_pm),
            (-big, big, l.fs_mp, l.ft_mp),
            (-big, -big, l.fs_mm, l.ft_mm),
        ];
        for (s, t, fs, ft) in quadrants {
            let gap = (nl.d_s(x, s, t) - fs).abs().max((nl.d_t(x, s, t) - ft).abs());
            if !(gap <= tol) {
                return Err(Error::Parameter(format!(
                    "quadrant limits disagree with the derivatives by {gap} at x={x:?}, s={s}, t={t}"
                )));
            }
            worst = worst.max(gap);
        }
    }
    Ok(worst)
}

/// Closed-form forcing terms.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    Constant(f64),
    /// `c₀ + c₁ x + c₂ x² + …` in the first coordinate.
    Polynomial(Vec<f64>),
    /// A multiple of the matching first-eigenpair component.
    ScaledEigen(f64),
}

impl Forcing {
    /// Nodal values; `eigencomponent` is used by [`Forcing::ScaledEigen`] only.
    pub fn nodal(&self, mesh: &Mesh, eigencomponent: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            Forcing::Zero => alloc::vec![0.0; mesh.vertex_count()],
            Forcing::Constant(c) => alloc::vec![*c; mesh.vertex_count()],
            Forcing::Polynomial(coeffs) => {
                mesh.sample(|x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x[0] + c))
            }
            Forcing::ScaledEigen(c) => {
                crate::error::check_len(mesh.vertex_count(), eigencomponent.len())?;
                eigencomponent.iter().map(|w| c * w).collect()
            }
        })
    }
}

/// Scales a converged first eigenpair so that `∫|∇u|^p + ∫|∇v|^q = 1`.
pub fn normalize_eigenpair_unitnorm(mesh: &Mesh, params: &Params, eig: &EigenResult) -> Result<StateVector> {
    if !eig.converged {
        return Err(Error::Precondition("unit normalization needs a converged eigenpair".into()));
    }
    unit_normalize(mesh, params, &eig.z)
}

pub(crate) fn unit_normalize(mesh: &Mesh, params: &Params, z: &StateVector) -> Result<StateVector> {
    if z.is_zero() {
        return Err(Error::Domain("cannot normalize the zero state".into()));
    }
    let (a, b) = seminorm_powers(mesh, params, z)?;
    homogeneous_scale(z, 1.0 / (a + b), params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Coercive,
    Saddle,
    None,
}

/// The ten integrals entering the Landesman–Lazer conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LLIntegrals {
    /// `∫F_s^{σ} φ1` in the order `++, +-, -+, --`.
    pub fs_phi: [f64; 4],
    /// `∫F_t^{σ} ψ1` in the order `++, +-, -+, --`.
    pub ft_psi: [f64; 4],
    pub h1_phi: f64,
    pub h2_psi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LLReport {
    pub integrals: LLIntegrals,
    /// Conditions (7) through (12); only the pair of the exponent case is evaluated.
    pub holds: [bool; 6],
    pub regime: Regime,
    pub case: ExponentOrder,
    /// Some inequality of the case is an equality up to quadrature rounding; the
    /// regime is then reported as [`Regime::None`].
    pub borderline: bool,
}

impl LLReport {
    /// Condition `(k)` for `k` in `7..=12`.
    pub fn holds(&self, k: usize) -> bool {
        (7..=12).contains(&k) && self.holds[k - 7]
    }
}

/// Margins below this fraction of the integral scale count as borderline.
pub const BORDERLINE_REL: f64 = 1e-10;

const PP: usize = 0;
const PM: usize = 1;
const MP: usize = 2;
const MM: usize = 3;

/// Evaluates the conditions of the exponent case with lumped quadrature against
/// the unit-normalized eigenpair `unit`.
pub fn ll_classify(
    mesh: &Mesh,
    params: &Params,
    nl: &dyn Nonlinearity,
    h1: &[f64],
    h2: &[f64],
    unit: &StateVector,
) -> Result<LLReport> {
    crate::error::check_len(mesh.vertex_count(), unit.len())?;
    crate::error::check_len(mesh.vertex_count(), h1.len())?;
    crate::error::check_len(mesh.vertex_count(), h2.len())?;
    let mut ig = LLIntegrals::default();
    for (i, (&x, &m)) in mesh.vertices().iter().zip(mesh.lumped_mass()).enumerate() {
        let l = nl.limits(x);
        let (phi, psi) = (unit.u[i], unit.v[i]);
        for (k, (fs, ft)) in [(l.fs_pp, l.ft_pp), (l.fs_pm, l.ft_pm), (l.fs_mp, l.ft_mp), (l.fs_mm, l.ft_mm)]
            .into_iter()
            .enumerate()
        {
            ig.fs_phi[k] += m * fs * phi;
            ig.ft_psi[k] += m * ft * psi;
        }
        ig.h1_phi += m * h1[i] * phi;
        ig.h2_psi += m * h2[i] * psi;
    }

    let (s, t) = (&ig.fs_phi, &ig.ft_psi);
    let (hs, hd) = (ig.h1_phi + ig.h2_psi, ig.h1_phi - ig.h2_psi);
    let case = params.exponent_order();
    // each condition is two chains lo < mid < hi
    let (first, second, offset): ([[f64; 3]; 2], [[f64; 3]; 2], usize) = match case {
        ExponentOrder::Less => (
            [[s[PP], ig.h1_phi, s[MM]], [s[PM], ig.h1_phi, s[MP]]],
            [[s[MM], ig.h1_phi, s[PP]], [s[MP], ig.h1_phi, s[PM]]],
            0,
        ),
        ExponentOrder::Equal => (
            [[s[PP] + t[PP], hs, s[MM] + t[MM]], [s[PM] - t[PM], hd, s[MP] - t[MP]]],
            [[s[MM] + t[MM], hs, s[PP] + t[PP]], [s[MP] - t[MP], hd, s[PM] - t[PM]]],
            2,
        ),
        ExponentOrder::Greater => (
            [[t[PP], ig.h2_psi, t[MM]], [t[MP], ig.h2_psi, t[PM]]],
            [[t[MM], ig.h2_psi, t[PP]], [t[PM], ig.h2_psi, t[MP]]],
            4,
        ),
    };
    let chain = |c: &[f64; 3]| c[0] < c[1] && c[1] < c[2];
    let coercive = first.iter().all(chain);
    let saddle = second.iter().all(chain);
    let mut holds = [false; 6];
    holds[offset] = coercive;
    holds[offset + 1] = saddle;

    let scale = s.iter().chain(t.iter()).map(|x| x.abs()).sum::<f64>() + ig.h1_phi.abs() + ig.h2_psi.abs();
    let borderline = first
        .iter()
        .flat_map(|c| [c[1] - c[0], c[2] - c[1]])
        .any(|margin| margin.abs() <= BORDERLINE_REL * scale);
    let regime = match (borderline, coercive, saddle) {
        (true, _, _) => Regime::None,
        (false, true, _) => Regime::Coercive,
        (false, false, true) => Regime::Saddle,
        _ => Regime::None,
    };
    Ok(LLReport { integrals: ig, holds, regime, case, borderline })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{solve_lambda1, SolverOptions};

    #[test]
    fn primitive_and_derivative() {
        for s in [-3.0, -0.5, 0.0, 0.7, 20.0] {
            let h = 1e-6;
            let fd = (arctan_primitive(s + h) - arctan_primitive(s - h)) / (2.0 * h);
            assert!((fd - s.atan()).abs() < 1e-8);
        }
        assert_eq!(arctan_primitive(0.0), 0.0);
    }

    #[test]
    fn spot_checks_pass_for_family() {
        let mesh = Mesh::interval(1.0, 8).unwrap();
        let nl = ArctanSum::with_modulation(-1.0, 0.5, 0.3);
        assert!(check_bound(&nl, &mesh, 3, 500).unwrap() <= nl.bound());
        assert!(check_limits(&nl, &mesh, 1e6, 1e-3).unwrap() < 1e-5);
    }

    struct WrongLimits;

    impl Nonlinearity for WrongLimits {
        fn value(&self, _: [f64; 2], s: f64, _: f64) -> f64 {
            arctan_primitive(s)
        }
        fn d_s(&self, _: [f64; 2], s: f64, _: f64) -> f64 {
            s.atan()
        }
        fn d_t(&self, _: [f64; 2], _: f64, _: f64) -> f64 {
            0.0
        }
        fn bound(&self) -> f64 {
            1.0
        }
        fn limits(&self, _: [f64; 2]) -> QuadrantLimits {
            QuadrantLimits::default()
        }
    }

    #[test]
    fn spot_checks_catch_bad_specs() {
        let mesh = Mesh::interval(1.0, 4).unwrap();
        assert!(check_bound(&WrongLimits, &mesh, 0, 200).is_err());
        assert!(check_limits(&WrongLimits, &mesh, 1e6, 1e-3).is_err());
    }

    #[test]
    fn forcing_nodal_values() {
        let mesh = Mesh::interval(1.0, 4).unwrap();
        assert_eq!(Forcing::Polynomial(alloc::vec![1.0, 2.0]).nodal(&mesh, &[]).unwrap(), [1.0, 1.5, 2.0, 2.5, 3.0]);
        let comp = [0.0, 1.0, 2.0, 1.0, 0.0];
        assert_eq!(Forcing::ScaledEigen(-2.0).nodal(&mesh, &comp).unwrap(), [-0.0, -2.0, -4.0, -2.0, -0.0]);
        assert!(Forcing::ScaledEigen(1.0).nodal(&mesh, &comp[..2]).is_err());
    }

    fn unit_pair(mesh: &Mesh, params: &Params) -> StateVector {
        let eig = solve_lambda1(mesh, params, &SolverOptions::default(), None).unwrap();
        normalize_eigenpair_unitnorm(mesh, params, &eig).unwrap()
    }

    #[test]
    fn unit_normalization() {
        let mesh = Mesh::interval(1.0, 32).unwrap();
        let params = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let unit = unit_pair(&mesh, &params);
        let (a, b) = seminorm_powers(&mesh, &params, &unit).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
        let again = unit_normalize(&mesh, &params, &unit).unwrap();
        assert!(again.max_abs_diff(&unit) < 1e-12);
    }

    #[test]
    fn arctan_regimes() {
        let mesh = Mesh::interval(1.0, 32).unwrap();
        let params = Params::new(2.0, 2.0, 0.0, 0.0).unwrap();
        let unit = unit_pair(&mesh, &params);
        let zero = alloc::vec![0.0; mesh.vertex_count()];
        let coercive = ll_classify(&mesh, &params, &ArctanSum::new(-1.0, -1.0), &zero, &zero, &unit).unwrap();
        assert_eq!(coercive.regime, Regime::Coercive);
        assert!(coercive.holds(9) && !coercive.holds(10));
        let saddle = ll_classify(&mesh, &params, &ArctanSum::new(1.0, 1.0), &zero, &zero, &unit).unwrap();
        assert_eq!(saddle.regime, Regime::Saddle);
        assert!(saddle.holds(10) && !saddle.holds(9));
        let flat = ll_classify(&mesh, &params, &ArctanSum::new(0.0, 0.0), &zero, &zero, &unit).unwrap();
        assert_eq!(flat.regime, Regime::None);
        assert!(flat.borderline);
    }
}
