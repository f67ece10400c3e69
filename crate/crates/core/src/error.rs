use std::fmt;

use thiserror::Error;

/// Pipeline stage a failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ambient,
    Decode,
    Pdi,
    SigmaFit,
    UnpolarizedPhase,
    KRatio,
    Amplitude,
    Removal,
    Depth,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Ambient => "ambient subtraction",
            Stage::Decode => "tap decoding",
            Stage::Pdi => "polarization difference",
            Stage::SigmaFit => "decay-rate fit",
            Stage::UnpolarizedPhase => "unpolarized phase",
            Stage::KRatio => "amplitude-to-offset ratio",
            Stage::Amplitude => "amplitude solve",
            Stage::Removal => "scattering removal",
            Stage::Depth => "depth conversion",
        };
        f.write_str(name)
    }
}

/// Broad failure class, used by the command-line front end to choose an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("no unpolarized component: sigma_p must be positive")]
    NoUnpolarized,

    #[error(
        "quadrature did not converge on [{lower}, {upper}]: estimate {estimate:e}, \
         error {abs_error:e} after {intervals} subintervals"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        abs_error: f64,
        intervals: usize,
    },

    #[error("optimizer did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("depth {depth} m is outside the unambiguous range (0, {max_depth}) m")]
    OutOfRange { depth: f64, max_depth: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("only {valid} of {total} pixels are valid")]
    InsufficientValid { valid: usize, total: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::OutOfRange { .. } | Error::Json(_) => ErrorClass::Config,
            Error::Io(_) | Error::Format(_) => ErrorClass::Io,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Numeric,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
