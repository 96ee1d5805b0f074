use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or unreadable input data.
    #[error("input error: {0}")]
    Input(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A numerical algorithm failed (non-convergence, breakdown, loss of precision).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The call violated a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported geometry: {0}")]
    Unsupported(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Parse { .. } | Error::Io(_) => 2,
            Error::Numerical(_) => 3,
            Error::Precondition(_) | Error::Unsupported(_) => 4,
        }
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Input(format!("json: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_table() {
        assert_eq!(Error::input("x").exit_code(), 2);
        assert_eq!(Error::Parse { line: 3, msg: "x".into() }.exit_code(), 2);
        assert_eq!(Error::numerical("x").exit_code(), 3);
        assert_eq!(Error::precondition("x").exit_code(), 4);
    }
}
