use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NswError {
    /// Malformed or out-of-range input.
    #[error("input error: {0}")]
    Input(String),

    /// A brute-force routine was asked to run beyond its size cap.
    #[error("unsupported size: {what} is {actual}, cap is {cap}")]
    UnsupportedSize {
        what: &'static str,
        actual: u128,
        cap: u128,
    },

    /// An explicit independence family fails the matroid axioms.
    #[error("matroid axiom violated: {0}")]
    Axiom(String),

    /// Document-level validation failure, located by a JSON pointer.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    /// A fractional solution violates the constraints of its program.
    #[error("infeasible solution: {0}")]
    Infeasible(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, NswError>;

impl NswError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        NswError::Input(msg.into())
    }

    pub(crate) fn size(what: &'static str, actual: u128, cap: u128) -> Self {
        NswError::UnsupportedSize { what, actual, cap }
    }

    /// Prefix the pointer of a schema error (or wrap any other error) with `prefix`.
    pub(crate) fn at(self, prefix: &str) -> Self {
        match self {
            NswError::Schema { path, message } => NswError::Schema {
                path: format!("{prefix}{path}"),
                message,
            },
            NswError::Axiom(m) | NswError::Input(m) => NswError::Schema {
                path: prefix.to_string(),
                message: m,
            },
            other => NswError::Schema {
                path: prefix.to_string(),
                message: other.to_string(),
            },
        }
    }
}

impl From<std::io::Error> for NswError {
    fn from(e: std::io::Error) -> Self {
        NswError::Io(e.to_string())
    }
}
