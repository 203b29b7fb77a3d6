use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge: estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    #[error("no closed-form coherence time for the {0} spectral density; supply a reset wait explicitly")]
    NoClosedFormT2(&'static str),

    #[error("ergodic preparation needs a finite long-time backreaction rate, which the {0} bath does not have")]
    NoErgodicLimit(&'static str),

    #[error("block with {pulses} pulses exceeds the branch limit of {max} pulses; split it with coherence resets")]
    BranchOverflow { pulses: usize, max: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("unknown pulse name `{0}`")]
    UnknownPulse(String),

    #[error("Hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("Fock cutoff {cutoff} too small for mode at frequency {omega}: top-level occupation {occupation:.3e}")]
    CutoffInadequate {
        cutoff: usize,
        omega: f64,
        occupation: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
