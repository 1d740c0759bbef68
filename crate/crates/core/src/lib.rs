//! Finite element computation of Helmholtz transmission eigenvalues.
//!
//! The transmission problem is linearized into a nonsymmetric pencil
//! `A x = lambda B x` on `S_h x S_h`, where `S_h` is the Bogner-Fox-Schmit
//! bicubic space with clamped boundary conditions. Eigenvalues are first
//! computed on a coarse mesh, then corrected level by level: each correction
//! solves one boundary value problem per tracked eigenpair on the finer mesh
//! and a small eigenproblem on the coarse space enriched with those solutions.
//!
//! Module map:
//! - [`mesh`]: square-cell meshes of the unit square and the L-shape, dyadic refinement.
//! - [`bfs`]: the C1 element, constrained spaces, prolongation between levels.
//! - [`assembly`]: quadrature, refraction fields, the `A` and `B` matrices.
//! - [`linalg`]: sparse LU, dense eigensolvers, shift-invert Arnoldi.
//! - [`multigrid`]: coarse solve, correction step, full multilevel scheme.
//! - [`report`]: configuration, experiment driver, CSV/SVG output.

pub mod assembly;
pub mod bfs;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod multigrid;
pub mod report;

pub use error::{Error, Result};
pub use num_complex::Complex64;
