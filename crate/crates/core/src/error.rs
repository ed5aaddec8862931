use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("interval mismatch: ({0}, {1}) vs ({2}, {3})")]
    IntervalMismatch(f64, f64, f64, f64),

    #[error("hermitian flag set but {which} is not Hermitian at t = {t} (defect {defect:.3e})")]
    NotHermitian {
        which: &'static str,
        t: f64,
        defect: f64,
    },

    #[error("point {t} lies outside [{a}, {b}]")]
    OutOfDomain { t: f64, a: f64, b: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh is missing coefficient breakpoint {0}")]
    MissingBreakpoint(f64),

    #[error(
        "λ = {lambda} is not in the resolvent set for this boundary condition (cond = {cond:.3e})"
    )]
    NotInResolventSet { lambda: crate::C64, cond: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("contour search failed: {0}")]
    Contour(String),

    #[error("invariant check failed: {0}")]
    CheckFailed(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
