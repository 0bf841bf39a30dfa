use thiserror::Error;

use crate::hnum::Quaternion;

/// Errors raised by the calculus engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quaternion with modulus {modulus:e} is not invertible")]
    ZeroDivision { modulus: f64 },

    #[error("the argument is undefined at the origin")]
    DomainError,

    #[error("invalid imaginary unit: {0}")]
    InvalidUnit(String),

    #[error("invalid sector half-angle {0} (must lie in (0, pi))")]
    InvalidSector(f64),

    #[error("matrix is not symmetric (residual {residual:e})")]
    NonSymmetric { residual: f64 },

    #[error("components {i} and {j} do not commute (residual {residual:e})")]
    NonCommuting { i: usize, j: usize, residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("pencil is singular at s = {s}: smallest singular value {sigma_min:e} (norm {norm:e})")]
    SpectralPoint {
        s: Quaternion,
        sigma_min: f64,
        norm: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("operator is not sectorial for angle {theta}: spectrum reaches argument {max_arg}")]
    NotSectorial { theta: f64, max_arg: f64 },

    #[error("point {0} lies outside the function's domain")]
    OutOfDomain(Quaternion),

    #[error("hypothesis ({condition}) violated: {detail}")]
    HypothesisViolation {
        condition: &'static str,
        detail: String,
    },

    #[error("left factor of a product must be intrinsic")]
    NotIntrinsic,

    #[error("finite-difference error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    StepTooLarge { estimate: f64, tolerance: f64 },

    #[error("tolerance {tol:e} not reached within {nodes} nodes (last estimate {estimate:e})")]
    UnreachableTolerance { tol: f64, nodes: usize, estimate: f64 },

    #[error("kernel singular on the contour: {0}")]
    KernelSingular(Box<Error>),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("denominator has a zero {root} inside the closed sector of angle {omega}")]
    ZeroInSector { root: String, omega: f64 },

    #[error("regularizer value e(T) is not injective (sigma_min {sigma_min:e}, norm {norm:e})")]
    RegularizerSingular { sigma_min: f64, norm: f64 },

    #[error("regularized product is not in the decaying class: {0}")]
    ProductNotDecaying(String),

    #[error("function class {found} is not admissible here (expected {expected})")]
    ClassMismatch { expected: String, found: String },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
