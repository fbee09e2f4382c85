use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("bracket failure for level {level}: s({q_lo}) and s({q_hi}) do not straddle {target}")]
    BracketFailure {
        level: u32,
        q_lo: String,
        q_hi: String,
        target: String,
    },

    #[error("precision unreachable: {0}")]
    PrecisionUnreachable(String),

    #[error("insufficient coefficients for {label}: need a(1..{required}), have {available}")]
    InsufficientCoefficients {
        label: String,
        required: usize,
        available: usize,
    },

    #[error("series division by a series with zero leading coefficient")]
    ZeroLeadingCoefficient,

    #[error("non-integral coefficient at q^{index}: {value}")]
    NonIntegralCoefficient { index: usize, value: String },

    #[error("unsupported functional-equation sign {0}")]
    UnsupportedSign(i32),

    #[error("acceleration stagnated: successive transforms differ by {0}")]
    AccelerationStagnation(String),

    #[error("series diverges at |x| = {0}")]
    Divergent(String),

    #[error("unroutable argument: {0}")]
    Unroutable(String),

    #[error("route disagreement for {what}: {a} vs {b}")]
    RouteDisagreement { what: String, a: String, b: String },

    #[error("coefficient file line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),

    #[error("unknown form `{0}`")]
    UnknownForm(String),

    #[error("missing coefficients for form `{0}`")]
    MissingCoefficients(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with context layers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
