use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subordinator spec: {0}")]
    Spec(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("path never crosses the level: no jumps above the cutoff and zero drift")]
    NeverCrosses,

    #[error("resource budget exceeded: {0}")]
    Resource(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("unknown {what} `{given}`; did you mean `{suggestion}`?")]
    UnknownName {
        what: &'static str,
        given: String,
        suggestion: String,
    },

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("replica {index}: {source}")]
    Replica {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used in error rows.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Spec(_) => "SpecError",
            Error::Domain(_) => "DomainError",
            Error::Numeric(_) => "NumericError",
            Error::NeverCrosses => "NeverCrossesError",
            Error::Resource(_) => "ResourceError",
            Error::Parameter(_) => "ParameterError",
            Error::Hypothesis(_) => "HypothesisError",
            Error::Range(_) => "RangeError",
            Error::UnknownName { what, .. } => match *what {
                "family" => "UnknownFamilyError",
                _ => "UnknownNameError",
            },
            Error::Parse { .. } => "ParseError",
            Error::Format(_) => "FormatError",
            Error::Replica { source, .. } => source.kind(),
            Error::Io(_) => "IoError",
        }
    }
}
