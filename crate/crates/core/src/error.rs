//! Error type shared by all modules of the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Gamma has simple poles at 0, -1, -2, ...
    #[error("gamma pole at non-positive integer x = {0}")]
    GammaPole(f64),

    /// Argument outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An intermediate quantity left the representable range.
    #[error("overflow in special-function evaluation: {0}")]
    Overflow(String),

    /// Adaptive quadrature hit the subdivision cap before reaching the
    /// requested tolerance. Carries the best estimate so far.
    #[error("quadrature did not converge after {subdivisions} subdivisions: best estimate {estimate:e} +/- {error:e}")]
    QuadratureDidNotConverge {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    /// A leading principal minor of the pairing vanished; `index` is the
    /// first failing pivot (0-based).
    #[error("degenerate pairing: leading minor {index} vanishes (pivot {pivot:e})")]
    DegeneratePairing { index: usize, pivot: f64 },

    /// Combinatorial size guard. These sums are superexponential; the guard
    /// is a hard error, never a truncation.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    /// Kernel parameter validation failure.
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),

    /// Matrix shape mismatch.
    #[error("shape mismatch: {0}")]
    Shape(String),
}
