use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("misordered interval: lower bound {a} exceeds upper bound {b}")]
    MisorderedInterval { a: f64, b: f64 },

    #[error("coefficient syntax error at byte {pos} of `{input}`: {msg}")]
    CoeffParse {
        input: String,
        pos: usize,
        msg: String,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time {t} lies outside the admissible interval starting at t0 = {t0}")]
    OutOfInterval { t: f64, t0: f64 },

    #[error("conditional law is undefined at t = {t} (requires t > t0 and t != 0)")]
    DegenerateConditioning { t: f64 },

    #[error("time step {dt:e} exceeds the maximal admissible step {max_dt:e} ({limit})")]
    Stability {
        dt: f64,
        max_dt: f64,
        limit: &'static str,
    },

    #[error("non-finite value produced at time step {step}")]
    NonFinite { step: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("config error in field `{field}`: {msg}")]
    Field { field: String, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn field(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Field {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// True for failures raised by a numerical scheme rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Stability { .. } | Error::NonFinite { .. })
    }
}
