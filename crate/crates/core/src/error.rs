use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid drive, topology or window parameters.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("drive photon flux N_in({t}) = {value} is negative")]
    NegativeDrive { t: f64, value: f64 },

    #[error("envelope breakpoint t = {edge} lies strictly inside grid segment [{start}, {end}]")]
    GridMisaligned { edge: f64, start: f64, end: f64 },

    #[error("invalid time arguments: {0}")]
    InvalidTimes(String),

    #[error("integration did not converge under step halving: {0}")]
    NotConverged(String),

    #[error("cutoff k = {k} insufficient: {detail}")]
    CutoffInsufficient { k: usize, detail: String },

    #[error("probability P_{n} = {value:e} is negative beyond clamping tolerance")]
    NegativeProbability { n: usize, value: f64 },

    #[error("trajectory step underflow: step {step:e} for maximum rate {rate:e}")]
    StepUnderflow { step: f64, rate: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("at grid point {point}: {source}")]
    AtGridPoint {
        point: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures caused by user input rather than numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidSpec(_)
            | Error::InvalidTimes(_)
            | Error::GridMisaligned { .. }
            | Error::NegativeDrive { .. } => true,
            Error::AtGridPoint { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
