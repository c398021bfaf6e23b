use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value for `{0}`")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular {what} at omega = {omega:e} rad/s")]
    SingularAt { what: &'static str, omega: f64 },

    #[error("singular {0}")]
    Singular(&'static str),

    #[error("perfect mirror (r = -1) has no transfer matrix")]
    PerfectMirror,

    #[error(
        "eigensolver did not converge for a {n}x{n} matrix \
         (frobenius norm {norm:e}, condition estimate {condition:e})"
    )]
    EigenNonConvergence { n: usize, norm: f64, condition: f64 },

    #[error("matrix dimension {n} exceeds the configured cap of {cap}")]
    DimensionCap { n: usize, cap: usize },

    #[error("incomplete crosstalk calibration, missing coil pairs {missing:?}")]
    IncompleteCalibration { missing: Vec<(usize, usize)> },

    #[error("ambiguous fit window: {0}")]
    AmbiguousWindow(String),

    #[error("no crossing of the 0.5 level in the saturation curve")]
    NoCrossing,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(name))
    }
}
