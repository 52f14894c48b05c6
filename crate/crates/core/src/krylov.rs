//! Preconditioned MINRES for symmetric, possibly indefinite, systems.

#[allow(unused_imports)]
use num_traits::Float;

use crate::precond::Preconditioner;
use crate::{Covector, Mesh, Result, StateVector};

pub(crate) const MINRES_RTOL: f64 = 1e-4;
pub(crate) const MINRES_ITERS: usize = 200;

/// Approximate solution of `A x = b` with `A` symmetric, stopping when the
/// preconditioned residual drops by `rtol`.
pub(crate) fn minres<A>(
    mut a: A,
    precond: &Preconditioner,
    mesh: &Mesh,
    b: &Covector,
    rtol: f64,
    max_iters: usize,
) -> Result<StateVector>
where
    A: FnMut(&StateVector) -> Result<Covector>,
{
    let n = b.len();
    let mut x = StateVector::zeros(n);
    let mut r1 = b.clone();
    let mut y = precond.apply(mesh, &r1);
    let beta1 = r1.pair(&y);
    if !(beta1 > 0.0) {
        return Ok(x);
    }
    let beta1 = beta1.sqrt();
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = StateVector::zeros(n);
    let mut w2 = StateVector::zeros(n);
    for itn in 0..max_iters {
        let v = y.scaled(1.0 / beta);
        let mut yc = a(&v)?;
        if itn > 0 {
            yc = Covector::combine(1.0, &yc, -beta / oldb, &r1);
        }
        let alfa = yc.pair(&v);
        yc = Covector::combine(1.0, &yc, -alfa / beta, &r2);
        r1 = r2;
        r2 = yc;
        y = precond.apply(mesh, &r2);
        oldb = beta;
        let bb = r2.pair(&y);
        if !(bb >= 0.0) {
            break;
        }
        beta = bb.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = w2;
        w2 = w;
        w = StateVector::combine(1.0, &v, -oldeps, &w1).add_scaled(-delta, &w2).scaled(1.0 / gamma);
        x.axpy(phi, &w);
        if phibar <= rtol * beta1 || !(beta > 0.0) {
            break;
        }
    }
    Ok(x)
}

