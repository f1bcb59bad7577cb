//! Numerical workhorses: adaptive quadrature, dense determinants and
//! factorizations, a small symmetric eigensolver, and seeded RNG streams.

pub mod eigen;
pub mod matrix;
pub mod quad;
pub mod rng;

pub use eigen::sym_eigenvalues;
pub use matrix::{ldu_biorthogonalize, DenseMatrix, LduFactors, LDU_PIVOT_TOL};
pub use quad::{integrate_1d, integrate_2d, Domain, Quadrature, QuadratureSpec};
pub use rng::RngStream;
