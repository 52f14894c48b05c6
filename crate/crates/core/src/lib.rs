//! Numerical solvers for the coupled (p,q)-Laplacian eigenvalue system
//!
//! ```text
//! -Δ_p u = λ (α+1) |u|^{α-1} |v|^{β+1} u,   -Δ_q v = λ (β+1) |u|^{α+1} |v|^{β-1} v,   u = v = 0 on ∂Ω
//! ```
//!
//! and for the system at resonance with λ1, discretized by P1 finite elements on
//! interval and rectangle meshes.
//!
//! The crate is `no_std` and only needs `alloc`. The `std` feature switches the
//! floating-point intrinsics from `libm` to the platform implementations.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

mod banded;
pub mod eigen;
mod error;
mod path;
pub mod functionals;
mod krylov;
pub mod line_search;
pub mod mesh;
pub mod params;
pub mod picone;
mod precond;
pub mod resonance;
pub mod starts;
pub mod state;

pub use banded::BandedCholesky;
pub use eigen::{EigenResult, HistoryRecord, SolverOptions};
pub use error::{Error, Result};
pub use mesh::Mesh;
pub use params::Params;
pub use state::{Covector, StateVector};
