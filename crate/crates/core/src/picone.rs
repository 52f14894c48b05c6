//! Elementwise Picone quantities for P1 function pairs.
//!
//! With `k = ū/v̄` taken at the element midpoint and the constant P1 gradients,
//!
//! ```text
//! L_r = |∇u|^r + (r-1) k^r |∇v|^r - r k^{r-1} |∇v|^{r-2} ∇v·∇u
//! R_r = |∇u|^r - |∇v|^{r-2} ∇v·∇(u^r / v^{r-1})
//! ```
//!
//! where `∇(u^r / v^{r-1}) = r k^{r-1} ∇u - (r-1) k^r ∇v` is expanded by the chain
//! rule from the same midpoint values, so `L_r = R_r` up to rounding.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::check_len;
use crate::{Error, Mesh, Result};

/// Interior values of `v` at or below this are rejected.
pub const POSITIVITY_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct PiconeField {
    pub l_values: Vec<f64>,
    pub r_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiconeReport {
    /// Largest elementwise `|L_r - R_r|`.
    pub identity_gap: f64,
    pub min_l: f64,
    pub pass: bool,
}

fn check_admissible(mesh: &Mesh, r: f64, u: &[f64], v: &[f64]) -> Result<()> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::Domain(format!("Picone exponent must exceed 1, got {r}")));
    }
    check_len(mesh.vertex_count(), u.len())?;
    check_len(mesh.vertex_count(), v.len())?;
    if let Some(i) = u.iter().position(|&x| !(x >= 0.0)) {
        return Err(Error::Domain(format!("u must be nonnegative, u[{i}] = {}", u[i])));
    }
    for (i, &x) in v.iter().enumerate() {
        if !mesh.is_boundary(i) && !(x > POSITIVITY_THRESHOLD) {
            return Err(Error::Domain(format!("v must be positive in the interior, v[{i}] = {x}")));
        }
    }
    Ok(())
}

/// `|w|^{r-2} w`, zero at `w = 0`.
fn duality_map(w: [f64; 2], r: f64) -> [f64; 2] {
    let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
    if n == 0.0 {
        return [0.0, 0.0];
    }
    let s = n.powf(r - 2.0);
    [s * w[0], s * w[1]]
}

fn midpoint(mesh: &Mesh, e: usize, w: &[f64]) -> f64 {
    let nodes = mesh.element(e);
    nodes.iter().map(|&i| w[i]).sum::<f64>() / nodes.len() as f64
}

pub fn picone_fields(mesh: &Mesh, r: f64, u: &[f64], v: &[f64]) -> Result<PiconeField> {
    check_admissible(mesh, r, u, v)?;
    let n = mesh.element_count();
    let mut l_values = Vec::with_capacity(n);
    let mut r_values = Vec::with_capacity(n);
    for e in 0..n {
        let (ub, vb) = (midpoint(mesh, e, u), midpoint(mesh, e, v));
        // v̄ = 0 only on elements with every vertex on the boundary, where ∇v = 0
        let k = if vb > 0.0 { ub / vb } else { 0.0 };
        let gu = mesh.element_gradient(e, u);
        let gv = mesh.element_gradient(e, v);
        let nu = (gu[0] * gu[0] + gu[1] * gu[1]).sqrt();
        let nv = (gv[0] * gv[0] + gv[1] * gv[1]).sqrt();
        let jv = duality_map(gv, r);
        let jv_gu = jv[0] * gu[0] + jv[1] * gu[1];
        let (kr, kr1) = (k.powf(r), k.powf(r - 1.0));
        l_values.push(nu.powf(r) + (r - 1.0) * kr * nv.powf(r) - r * kr1 * jv_gu);
        let quotient_grad = [r * kr1 * gu[0] - (r - 1.0) * kr * gv[0], r * kr1 * gu[1] - (r - 1.0) * kr * gv[1]];
        r_values.push(nu.powf(r) - (jv[0] * quotient_grad[0] + jv[1] * quotient_grad[1]));
    }
    Ok(PiconeField { l_values, r_values })
}

pub fn verify_picone(mesh: &Mesh, r: f64, u: &[f64], v: &[f64], tol: f64) -> Result<PiconeReport> {
    let field = picone_fields(mesh, r, u, v)?;
    let identity_gap = field
        .l_values
        .iter()
        .zip(&field.r_values)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max);
    let min_l = field.l_values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(PiconeReport { identity_gap, min_l, pass: identity_gap <= tol && min_l >= -tol })
}
