//! Error type shared across the crate.

/// Errors raised by constructors and operations when an input violates a
/// documented contract (non-Hermitian matrix, dimension mismatch, ...).
///
/// Note that an unreachable crossing time or interpolation target is *not* an
/// error: those are reported as `None` values, since parameter sweeps need
/// them as data.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |X - X^dag| entry {deviation:.3e} exceeds {tol:.1e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("operator is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("density operator trace {trace} differs from 1 beyond tolerance")]
    NonUnitTrace { trace: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension {dim} does not factor as {d_first} x {d_second}")]
    NonFactorableDimension {
        dim: usize,
        d_first: usize,
        d_second: usize,
    },

    #[error("projector family violates {what}: deviation {deviation:.3e}")]
    InvalidProjectorFamily { what: &'static str, deviation: f64 },

    #[error("invalid time grid: {reason}")]
    InvalidGrid { reason: &'static str },

    #[error("invalid eigenvalue interval: x_min {x_min} > x_max {x_max}")]
    InvalidInterval { x_min: f64, x_max: f64 },

    #[error("mean {mean} lies outside the eigenvalue range [{x_min}, {x_max}]")]
    MeanOutOfRange { mean: f64, x_min: f64, x_max: f64 },

    #[error("value {value} lies outside the spectral range [{x_min}, {x_max}]")]
    OutsideSpectralRange { value: f64, x_min: f64, x_max: f64 },

    #[error(
        "state does not commute with the first-measurement projector: max |[rho, A]| = {norm:.3e}"
    )]
    NonCommuting { norm: f64 },

    #[error("projector equals the identity; the TPM limit bound requires A != I")]
    IdentityProjector,

    #[error("zero energy dispersion: Mandelstam-Tamm time undefined")]
    ZeroDispersion,

    #[error("expected a {expected} curve, got {found}")]
    WrongCurveKind {
        expected: &'static str,
        found: &'static str,
    },

    #[error("unsupported dimension {dim}; supported range is {min}..={max}")]
    UnsupportedDimension { dim: usize, min: usize, max: usize },

    #[error("matrix data has {len} entries, expected {expected} for dim {dim}")]
    BadMatrixData {
        len: usize,
        dim: usize,
        expected: usize,
    },

    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
