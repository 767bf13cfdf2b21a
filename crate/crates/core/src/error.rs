use thiserror::Error;

/// Broad failure classes, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Regime,
    Solver,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ring configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected} sites, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("outside the approximation regime: {0}")]
    OutOfRegime(String),

    #[error("no bound state at E = {energy}: |cos E| <= cos(theta) is a propagating energy")]
    Propagating { energy: f64 },

    #[error("plane-wave eigenvector normalization vanishes at E = {energy}, q = {q}")]
    DegenerateDirection { energy: f64, q: f64 },

    #[error("root finder did not converge in [{lo}, {hi}] (residual {residual:e})")]
    NoConvergence { lo: f64, hi: f64, residual: f64 },

    #[error("boundary matrix null space has dimension {0}, expected 1")]
    NullSpace(usize),

    #[error("Bloch phase {phi} is not compatible with field alpha = {alpha} on {sites} sites")]
    FluxMismatch { phi: f64, alpha: f64, sites: usize },

    #[error("oscillation period is infinite (field splitting vanishes)")]
    InfinitePeriod,

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("no doublet at quasi-energy {target} (closest eigenvalue {distance:e} away)")]
    NoDoublet { target: f64, distance: f64 },

    #[error("doublet at quasi-energy {target} is not degenerate (gap {gap:e})")]
    NotDegenerate { target: f64, gap: f64 },

    #[error("no revival of the initial state within {0} steps")]
    NoRevival(usize),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_) | Error::LengthMismatch { .. } | Error::ZeroNorm => {
                ErrorKind::Config
            }
            Error::OutOfRegime(_) | Error::Propagating { .. } | Error::InfinitePeriod => {
                ErrorKind::Regime
            }
            _ => ErrorKind::Solver,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
