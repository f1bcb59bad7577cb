//! Determinantal correlation kernels on the punctured real line.
//!
//! The crate has five parts:
//!
//! - [`specfun`]: gamma, Pochhammer, and the Whittaker function
//!   `W_{kappa,mu}` with derivative;
//! - [`numerics`]: adaptive quadrature, dense determinants, LDU
//!   biorthogonalization, a small symmetric eigensolver, seeded RNG;
//! - [`whittaker`]: the J-symmetric matrix Whittaker kernel on
//!   `R* = R_+ ⊔ R_-`, its correlation determinants, and numerical
//!   verification of its closed forms and symmetries;
//! - [`necklace`]: an exact combinatorial engine that cross-checks the
//!   determinantal formula against its defining sum on discrete data, plus
//!   the mixed row/column determinant expansion;
//! - [`eynard_mehta`]: the two-coupled-random-matrix ensemble, biorthogonal
//!   polynomials, its block kernel and correlation functions, a brute-force
//!   oracle, and a Monte Carlo sampler for the Gaussian case.

pub mod error;
pub mod eynard_mehta;
pub mod necklace;
pub mod numerics;
pub mod specfun;
pub mod whittaker;

pub use error::{Error, Result};
