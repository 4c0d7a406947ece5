use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty model: dimension must be positive")]
    EmptyModel,

    #[error("ctmc row {row} sums to {sum:e}, expected 0")]
    CtmcRowSum { row: usize, sum: f64 },

    #[error("ctmc off-diagonal rate at ({row}, {col}) is negative: {value}")]
    CtmcNegativeRate { row: usize, col: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("semigroup is one-sided: t = {0} < 0")]
    NegativeTime(f64),

    #[error("z = {z} lies on the spectrum (eigenvalue {eigenvalue})")]
    Pole { z: Complex64, eigenvalue: Complex64 },

    #[error("outside the domain: {0}")]
    Domain(String),

    #[error("extension pole: eta*Id + R(z) is singular (target {target})")]
    ExtensionPole { target: Complex64 },

    #[error("Neumann series diverges: (alpha+ell)*rho(R) ~ {ratio:.6} >= 1")]
    SeriesDivergence { ratio: f64 },

    #[error("contour circle of radius {radius} around {center} also encloses {other}")]
    ContourOverlap {
        center: Complex64,
        radius: f64,
        other: Complex64,
    },

    #[error("contour passes within {distance:e} of eigenvalue {eigenvalue}")]
    ContourThroughPole { eigenvalue: Complex64, distance: f64 },

    #[error("eigenvalue {eigenvalue} sits on the strip boundary Re = -{lambda}")]
    StripBoundary { eigenvalue: Complex64, lambda: f64 },

    #[error("eigenvalue {eigenvalue} violates the rapid holomorphy region")]
    RegionViolation { eigenvalue: Complex64 },

    #[error("ledger undefined: {formula}")]
    LedgerUndefined { formula: String },

    #[error("insufficient regularity: q = {q} but the rule requires q > {required}")]
    InsufficientRegularity { q: u32, required: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}
