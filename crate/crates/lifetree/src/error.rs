//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Input table header does not match the declared schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell failed to parse; carries the 1-based data row.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// A value violates a domain invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// An argument is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The regression design matrix is rank deficient.
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// Not enough observations to perform the requested fit or test.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A structure has zero variance in the control cohort.
    #[error("degenerate structure '{0}': zero variance across controls")]
    DegenerateStructure(String),

    /// The sex-effect model cannot be estimated.
    #[error("sex model error: {0}")]
    SexModel(String),

    /// A label or population was not found.
    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable kind tag, used by the CLI error envelope.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Domain(_) => "domain",
            Error::SingularDesign(_) => "singular_design",
            Error::InsufficientData(_) => "insufficient_data",
            Error::DegenerateStructure(_) => "degenerate_structure",
            Error::SexModel(_) => "sex_model",
            Error::Lookup(_) => "lookup",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
