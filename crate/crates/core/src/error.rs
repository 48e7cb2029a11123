use thiserror::Error;

/// Errors raised by the algebra, spectral and calculus layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("algebra dimension {0} is outside the supported range 1..=8")]
    UnsupportedDimension(usize),

    #[error("element is not invertible")]
    SingularElement,

    #[error("operator is singular (smallest singular value {sigma_min:e}, norm {norm:e})")]
    SingularOperator { sigma_min: f64, norm: f64 },

    #[error("point with Re = {u}, |Im| = {r} lies in the S-spectrum")]
    InSpectrum { u: f64, r: f64 },

    #[error("kernel is singular: x lies on the sphere of s")]
    SingularKernel,

    #[error("|x - c| = {dist} is outside the convergence annulus ({inner}, {outer})")]
    OutsideConvergence { dist: f64, inner: f64, outer: f64 },

    #[error("series did not converge within {0} terms")]
    TruncationCap(usize),

    #[error("left expansion condition violated: |Im s| * ||(Re s - T)^-1|| = {0} >= 1")]
    ConditionViolated(f64),

    #[error("contour error: {0}")]
    Contour(String),

    #[error("contour clearance {clearance:e} is below the floor {floor:e}")]
    Clearance { clearance: f64, floor: f64 },

    #[error("eigenvalue solver failed to converge")]
    EigenFailure,

    #[error("scan found no singular point; tolerance is misconfigured")]
    EmptyScan,

    #[error("matrices do not commute (defect {0:e})")]
    NonCommuting(f64),

    #[error("matrix has non-real eigenvalues (imaginary part {0:e})")]
    ComplexEigenvalues(f64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
