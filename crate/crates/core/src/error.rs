use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A time (or other argument) fell outside the domain of a profile or grid.
    #[error("{what}: {value} outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Two objects that must share a time grid or a length do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Invalid model or solver parameters.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The integrator produced a non-finite value.
    #[error("integration blew up at step {step} (t = {t})")]
    Blowup { step: usize, t: f64 },

    /// A state left its admissible region by more than rounding noise.
    #[error("state left the admissible region at step {step}: {detail}")]
    StateOutOfRange { step: usize, detail: String },

    /// An iterative solver stopped without meeting its tolerance.
    #[error("solver did not converge after {iterations} iterations (residual {residual:e}, cost {cost})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        cost: f64,
    },

    /// A per-step transition probability in the agent-based simulator exceeded one.
    #[error("transition probability for {rate} exceeds 1 ({probability}); reduce dt_event")]
    ProbabilityOverflow { rate: &'static str, probability: f64 },

    /// Run-configuration errors, with the offending line when known.
    #[error("config line {line}: `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(line: usize, key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            key: key.into(),
            message: message.into(),
        }
    }
}
