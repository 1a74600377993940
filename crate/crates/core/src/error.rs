use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported order {order} (maximum {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("degenerate kernel: coefficient system is singular (condition estimate {condition:e})")]
    DegenerateKernel { condition: f64 },

    #[error("invalid kernel scale omega = {0} (must be > 0)")]
    InvalidScale(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid epsilon {0}: must lie in (0, 1]")]
    InvalidEpsilon(f64),

    #[error("logarithmic omega schedule is undefined at epsilon = 1 (log(1/eps) = 0)")]
    LogScheduleAtOne,

    #[error("placement error: {what} at {position} does not fit inside ({a}, {b})")]
    Placement {
        what: String,
        position: f64,
        a: f64,
        b: f64,
    },

    #[error("insufficient data: {got} points, at least {need} required")]
    InsufficientData { got: usize, need: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("singular tridiagonal system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("solve at epsilon = {epsilon} failed: {source}")]
    Net {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("oracle out of contraction regime: T * sup|q| = {0} (must be < 1)")]
    OutOfRegime(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("inapplicable experiment: {0}")]
    Inapplicable(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("invalid config value for `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
