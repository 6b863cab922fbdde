use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of two operands disagree.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{path}: row {row}, column '{column}': {message}")]
    Ingest {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: missing column '{column}'")]
    MissingColumn { path: String, column: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("variant error: {0}")]
    Variant(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("singular sensitive correlation matrix; aliased columns: {}", .0.join(", "))]
    SingularSensitive(Vec<String>),

    #[error("unknown group label '{0}'")]
    UnknownGroup(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty design: {0}")]
    EmptyDesign(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            found,
        }
    }

    /// True for errors caused by how the tool was invoked (schema, variant,
    /// mode, group names or configuration) rather than by the data it was given.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Schema(_)
                | Error::Variant(_)
                | Error::Mode(_)
                | Error::Config(_)
                | Error::UnknownGroup(_)
        )
    }
}
