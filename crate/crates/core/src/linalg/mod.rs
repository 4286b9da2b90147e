//! Hand-rolled dense complex linear algebra sized for desk-scale matrices
//! (n ≤ 64): LU solves, Cholesky for Hermitian positive-definite systems,
//! and a balanced shifted-QR eigensolver with eigenvector extraction.

pub mod chol;
pub mod eigen;
pub mod matrix;
pub mod solve;

pub use chol::{cholesky, logdet_hpd, CholFactor};
pub use eigen::{
    eigen_residual, eigendecompose, eigenvalues_only, EigenDecomposition, ShiftedQrBackend,
    SpectralBackend,
};
pub use matrix::{matvec, vec_norm, ComplexMatrix};
pub use solve::{inverse, lu_factor, solve_linear, LuFactor};
