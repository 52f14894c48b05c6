//! Symmetric banded storage and its Cholesky factorization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

/// Symmetric matrix stored by its lower band: `(i, j)` for `i - bw <= j <= i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymmetricBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `value` to entry `(i, j)` (and, implicitly, `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += value;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let mut acc = 0.0;
            for j in lo..i {
                let a = row[j + self.bw - i];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc + row[self.bw] * x[i];
        }
    }
}

/// `L Lᵀ` factor of a symmetric positive definite banded matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedCholesky {
    l: SymmetricBand,
}

impl BandedCholesky {
    pub fn factor(matrix: &SymmetricBand) -> Result<Self> {
        let mut l = matrix.clone();
        let bw = l.bw;
        for i in 0..l.n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = l.data[l.idx(i, j)];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= l.data[l.idx(i, k)] * l.data[l.idx(j, k)];
                }
                if j == i {
                    if !(sum > 0.0) {
                        return Err(Error::Degenerate(format!(
                            "matrix not positive definite at row {i} (pivot {sum:e})"
                        )));
                    }
                    let k = l.idx(i, i);
                    l.data[k] = sum.sqrt();
                } else {
                    let k = l.idx(i, j);
                    l.data[k] = sum / l.data[l.idx(j, j)];
                }
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.n
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let l = &self.l;
        let bw = l.bw;
        for i in 0..l.n {
            let lo = i.saturating_sub(bw);
            let mut sum = b[i];
            for k in lo..i {
                sum -= l.data[l.idx(i, k)] * b[k];
            }
            b[i] = sum / l.data[l.idx(i, i)];
        }
        for i in (0..l.n).rev() {
            let hi = (i + bw).min(l.n - 1);
            let mut sum = b[i];
            for k in i + 1..=hi {
                sum -= l.data[l.idx(k, i)] * b[k];
            }
            b[i] = sum / l.data[l.idx(i, i)];
        }
    }
}
