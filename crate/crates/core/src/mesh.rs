//! P1 meshes on intervals and rectangles.
//!
//! Gradient energies are evaluated exactly per element (P1 gradients are
//! constant on each element). Vertex-value integrals use the lumped weights
//! `m_i = Σ_{e ∋ i} |e| / (dim + 1)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::banded::{BandedCholesky, SymmetricBand};
use crate::error::check_len;
use crate::{Error, Result, StateVector};

/// Simplicial mesh of `(0, lx)` or `(0, lx) × (0, ly)` with a cached factorization
/// of the interior P1 stiffness matrix.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    extent: [f64; 2],
    vertices: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    measure: Vec<f64>,
    grad_coeffs: Vec<[[f64; 2]; 3]>,
    lumped_mass: Vec<f64>,
    dof_of_vertex: Vec<Option<usize>>,
    vertex_of_dof: Vec<usize>,
    stiffness: SymmetricBand,
    stiffness_factor: BandedCholesky,
}

impl Mesh {
    /// Uniform mesh of `(0, length)` with `n_cells` elements.
    pub fn interval(length: f64, n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::Parameter(format!("n_cells must be at least 2, got {n_cells}")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Parameter(format!("length must be positive, got {length}")));
        }
        let h = length / n_cells as f64;
        let vertices: Vec<[f64; 2]> = (0..=n_cells)
            .map(|i| [if i == n_cells { length } else { i as f64 * h }, 0.0])
            .collect();
        let elements = (0..n_cells).map(|e| [e, e + 1, usize::MAX]).collect();
        let mut boundary = vec![false; n_cells + 1];
        boundary[0] = true;
        boundary[n_cells] = true;
        Self::assemble(1, [length, 0.0], vertices, elements, boundary)
    }

    /// Structured triangulation of `(0, lx) × (0, ly)`: every grid cell is split
    /// along its lower-left to upper-right diagonal.
    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Parameter(format!("nx and ny must be at least 2, got {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0) || !(lx.is_finite() && ly.is_finite()) {
            return Err(Error::Parameter(format!("rectangle sides must be positive, got {lx}x{ly}")));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let coord = |k: usize, n: usize, l: f64| if k == n { l } else { k as f64 * l / n as f64 };
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([coord(i, nx, lx), coord(j, ny, ly)]);
                boundary.push(i == 0 || j == 0 || i == nx || j == ny);
            }
        }
        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            }
        }
        Self::assemble(2, [lx, ly], vertices, elements, boundary)
    }

    fn assemble(
        dim: usize,
        extent: [f64; 2],
        vertices: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        let nv = vertices.len();
        let mut measure = Vec::with_capacity(elements.len());
        let mut grad_coeffs = Vec::with_capacity(elements.len());
        for el in &elements {
            let (m, g) = if dim == 1 {
                let h = vertices[el[1]][0] - vertices[el[0]][0];
                (h, [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]])
            } else {
                let [x0, y0] = vertices[el[0]];
                let [x1, y1] = vertices[el[1]];
                let [x2, y2] = vertices[el[2]];
                let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
                let inv = 1.0 / det;
                (
                    0.5 * det,
                    [
                        [(y1 - y2) * inv, (x2 - x1) * inv],
                        [(y2 - y0) * inv, (x0 - x2) * inv],
                        [(y0 - y1) * inv, (x1 - x0) * inv],
                    ],
                )
            };
            if !(m > 0.0) {
                return Err(Error::Degenerate(format!("element with non-positive measure {m}")));
            }
            measure.push(m);
            grad_coeffs.push(g);
        }

        let nodes = dim + 1;
        let mut lumped_mass = vec![0.0; nv];
        for (el, m) in elements.iter().zip(&measure) {
            for &a in &el[..nodes] {
                lumped_mass[a] += m / nodes as f64;
            }
        }

        let mut dof_of_vertex = vec![None; nv];
        let mut vertex_of_dof = Vec::new();
        for (i, &b) in boundary.iter().enumerate() {
            if !b {
                dof_of_vertex[i] = Some(vertex_of_dof.len());
                vertex_of_dof.push(i);
            }
        }
        let mut bw = 0;
        for el in &elements {
            for &a in &el[..nodes] {
                for &b in &el[..nodes] {
                    if let (Some(i), Some(j)) = (dof_of_vertex[a], dof_of_vertex[b]) {
                        bw = bw.max(i.abs_diff(j));
                    }
                }
            }
        }
        let mut stiffness = SymmetricBand::zeros(vertex_of_dof.len(), bw);
        for ((el, m), g) in elements.iter().zip(&measure).zip(&grad_coeffs) {
            for a in 0..nodes {
                for b in 0..=a {
                    if let (Some(i), Some(j)) = (dof_of_vertex[el[a]], dof_of_vertex[el[b]]) {
                        let kab = m * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                        if a == b {
                            stiffness.add(i, i, kab);
                        } else {
                            stiffness.add(i, j, kab);
                        }
                    }
                }
            }
        }
        if vertex_of_dof.is_empty() {
            return Err(Error::Parameter("mesh has no interior vertices".into()));
        }
        let stiffness_factor = BandedCholesky::factor(&stiffness)?;
        Ok(Self {
            dim,
            extent,
            vertices,
            elements,
            boundary,
            measure,
            grad_coeffs,
            lumped_mass,
            dof_of_vertex,
            vertex_of_dof,
            stiffness,
            stiffness_factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Side lengths of the domain (`[length, 0]` in 1D).
    pub fn extent(&self) -> [f64; 2] {
        self.extent
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn interior_count(&self) -> usize {
        self.vertex_of_dof.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Vertex indices of element `e` (2 in 1D, 3 in 2D).
    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.dim + 1]
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.elements.iter().map(move |el| &el[..self.dim + 1])
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        self.boundary[vertex]
    }

    pub fn element_measure(&self) -> &[f64] {
        &self.measure
    }

    /// Constant gradients of the local P1 basis functions on element `e`.
    pub fn basis_gradients(&self, e: usize) -> &[[f64; 2]] {
        &self.grad_coeffs[e][..self.dim + 1]
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped_mass
    }

    /// `Σ |e|`, the measure of the domain.
    pub fn domain_measure(&self) -> f64 {
        self.measure.iter().sum()
    }

    /// Constant gradient of the P1 interpolant of `w` on each element.
    pub fn gradient_field(&self, w: &[f64]) -> Result<Vec<[f64; 2]>> {
        check_len(self.vertex_count(), w.len())?;
        Ok((0..self.element_count()).map(|e| self.element_gradient(e, w)).collect())
    }

    #[inline]
    pub(crate) fn element_gradient(&self, e: usize, w: &[f64]) -> [f64; 2] {
        let el = &self.elements[e];
        let g = &self.grad_coeffs[e];
        let mut out = [0.0; 2];
        for a in 0..=self.dim {
            out[0] += g[a][0] * w[el[a]];
            out[1] += g[a][1] * w[el[a]];
        }
        out
    }

    /// `Σ_e values[e] |e|`.
    pub fn integrate_elementwise(&self, values: &[f64]) -> Result<f64> {
        check_len(self.element_count(), values.len())?;
        Ok(values.iter().zip(&self.measure).map(|(v, m)| v * m).sum())
    }

    /// Lumped quadrature `Σ_i m_i w_i`.
    pub fn lumped_integral(&self, w: &[f64]) -> Result<f64> {
        check_len(self.vertex_count(), w.len())?;
        Ok(w.iter().zip(&self.lumped_mass).map(|(a, m)| a * m).sum())
    }

    /// Samples `f` at every vertex.
    pub fn sample<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        self.vertices.iter().map(|&x| f(x)).collect()
    }

    /// Samples `f` at every vertex and zeroes the Dirichlet vertices.
    pub fn interpolate<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Vec<f64> {
        self.vertices
            .iter()
            .zip(&self.boundary)
            .map(|(&x, &b)| if b { 0.0 } else { f(x) })
            .collect()
    }

    pub fn apply_dirichlet(&self, w: &mut [f64]) {
        for (x, &b) in w.iter_mut().zip(&self.boundary) {
            if b {
                *x = 0.0;
            }
        }
    }

    /// Builds a state from nodal data, zeroing the Dirichlet vertices.
    pub fn state(&self, mut u: Vec<f64>, mut v: Vec<f64>) -> Result<StateVector> {
        check_len(self.vertex_count(), u.len())?;
        check_len(self.vertex_count(), v.len())?;
        self.apply_dirichlet(&mut u);
        self.apply_dirichlet(&mut v);
        Ok(StateVector { u, v })
    }

    /// `K⁻¹ r` for a nodal load `r` (boundary entries ignored, result zero there).
    pub fn stiffness_solve(&self, r: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.vertex_of_dof.iter().map(|&i| r[i]).collect();
        self.stiffness_factor.solve_in_place(&mut x);
        let mut out = vec![0.0; self.vertex_count()];
        for (&i, xi) in self.vertex_of_dof.iter().zip(x) {
            out[i] = xi;
        }
        out
    }

    /// `K w` restricted to interior vertices (zero at the boundary).
    pub fn stiffness_apply(&self, w: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = self.vertex_of_dof.iter().map(|&i| w[i]).collect();
        let mut y = vec![0.0; x.len()];
        self.stiffness.matvec(&x, &mut y);
        let mut out = vec![0.0; self.vertex_count()];
        for (&i, yi) in self.vertex_of_dof.iter().zip(y) {
            out[i] = yi;
        }
        out
    }

    /// `aᵀ K b` per component, summed over both components.
    pub fn energy_inner(&self, a: &StateVector, b: &StateVector) -> f64 {
        let ku = self.stiffness_apply(&b.u);
        let kv = self.stiffness_apply(&b.v);
        crate::state::dot(&a.u, &ku) + crate::state::dot(&a.v, &kv)
    }

    pub fn energy_norm(&self, a: &StateVector) -> f64 {
        self.energy_inner(a, a).max(0.0).sqrt()
    }

    /// Interior stiffness matrix with one weight per element.
    pub(crate) fn weighted_stiffness(&self, weights: &[f64]) -> Result<SymmetricBand> {
        check_len(self.element_count(), weights.len())?;
        let nodes = self.dim + 1;
        let mut band = SymmetricBand::zeros(self.vertex_of_dof.len(), self.stiffness.bandwidth());
        for (((el, m), g), w) in self.elements.iter().zip(&self.measure).zip(&self.grad_coeffs).zip(weights) {
            for a in 0..nodes {
                for b in 0..=a {
                    if let (Some(i), Some(j)) = (self.dof_of_vertex[el[a]], self.dof_of_vertex[el[b]]) {
                        band.add(i, j, w * m * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
                    }
                }
            }
        }
        Ok(band)
    }

    /// Solve with a factor of a band from [`Mesh::weighted_stiffness`].
    pub(crate) fn factored_solve(&self, factor: &BandedCholesky, r: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.vertex_of_dof.iter().map(|&i| r[i]).collect();
        factor.solve_in_place(&mut x);
        let mut out = vec![0.0; self.vertex_count()];
        for (&i, xi) in self.vertex_of_dof.iter().zip(x) {
            out[i] = xi;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_two_cells() {
        let mesh = Mesh::interval(1.0, 2).unwrap();
        let xs: Vec<f64> = mesh.vertices().iter().map(|v| v[0]).collect();
        assert_eq!(xs, [0.0, 0.5, 1.0]);
        assert_eq!(mesh.boundary_mask(), [true, false, true]);
        assert_eq!(mesh.interior_count(), 1);
        assert_eq!(mesh.dof_of_vertex[1], Some(0));
    }

    #[test]
    fn interval_measures_and_mass() {
        let mesh = Mesh::interval(1.0, 4).unwrap();
        assert!(mesh.element_measure().iter().all(|&m| m == 0.25));
        let mesh = Mesh::interval(2.0, 2).unwrap();
        assert_eq!(mesh.lumped_mass(), [0.5, 1.0, 0.5]);
    }

    #[test]
    fn too_coarse_rejected() {
        assert!(Mesh::interval(1.0, 1).is_err());
        assert!(Mesh::interval(0.0, 4).is_err());
        assert!(Mesh::rectangle(1.0, 1.0, 1, 3).is_err());
        assert!(Mesh::rectangle(1.0, -1.0, 3, 3).is_err());
    }

    #[test]
    fn unit_square_counts() {
        let mesh = Mesh::rectangle(1.0, 1.0, 2, 2).unwrap();
        assert_eq!(mesh.vertex_count(), 9);
        assert_eq!(mesh.element_count(), 8);
        assert_eq!(mesh.boundary_mask().iter().filter(|&&b| b).count(), 8);
        assert!(mesh.element_measure().iter().all(|&a| (a - 0.125).abs() < 1e-15));
    }

    #[test]
    fn measures_partition_domain() {
        let mesh = Mesh::rectangle(2.0, 0.5, 7, 5).unwrap();
        assert!((mesh.domain_measure() - 1.0).abs() < 1e-12);
        let mass: f64 = mesh.lumped_mass().iter().sum();
        assert!((mass - 1.0).abs() < 1e-10);
        assert!(mesh.lumped_mass().iter().all(|&m| m > 0.0));
    }

    #[test]
    fn linear_fields_have_constant_gradients() {
        let mesh = Mesh::interval(1.0, 8).unwrap();
        let constant = vec![3.0; mesh.vertex_count()];
        assert!(mesh.gradient_field(&constant).unwrap().iter().all(|g| g[0].abs() < 1e-12));
        let x = mesh.sample(|p| p[0]);
        assert!(mesh.gradient_field(&x).unwrap().iter().all(|g| (g[0] - 1.0).abs() < 1e-12));

        let mesh = Mesh::rectangle(1.0, 2.0, 4, 3).unwrap();
        let x = mesh.sample(|p| p[0]);
        for g in mesh.gradient_field(&x).unwrap() {
            assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
        }
        let y = mesh.sample(|p| p[1]);
        for g in mesh.gradient_field(&y).unwrap() {
            assert!(g[0].abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn elementwise_integration() {
        let mesh = Mesh::interval(1.0, 2).unwrap();
        assert_eq!(mesh.integrate_elementwise(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mesh.integrate_elementwise(&[0.0, 1.0]).unwrap(), 0.5);
        assert!(mesh.integrate_elementwise(&[1.0]).is_err());
        let square = Mesh::rectangle(1.0, 1.0, 3, 3).unwrap();
        let ones = vec![1.0; square.element_count()];
        assert!((square.integrate_elementwise(&ones).unwrap() - 1.0).abs() < 1e-14);
        assert!(square.gradient_field(&[0.0; 3]).is_err());
    }

    #[test]
    fn stiffness_solve_inverts_apply() {
        let mesh = Mesh::rectangle(1.0, 1.0, 6, 5).unwrap();
        let w = mesh.interpolate(|p| (p[0] * 3.0).sin() + p[1] * p[1]);
        let kw = mesh.stiffness_apply(&w);
        let back = mesh.stiffness_solve(&kw);
        for (a, b) in back.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_energy_converges_at_second_order() {
        let energy = |n: usize| {
            let mesh = Mesh::interval(1.0, n).unwrap();
            let w = mesh.sample(|p| (core::f64::consts::PI * p[0]).sin());
            let g = mesh.gradient_field(&w).unwrap();
            let sq: Vec<f64> = g.iter().map(|g| g[0] * g[0]).collect();
            mesh.integrate_elementwise(&sq).unwrap()
        };
        let exact = core::f64::consts::PI.powi(2) / 2.0;
        let e1 = (energy(16) - exact).abs();
        let e2 = (energy(32) - exact).abs();
        let rate = (e1 / e2).log2();
        assert!((rate - 2.0).abs() < 0.1, "observed rate {rate}");
    }
}
