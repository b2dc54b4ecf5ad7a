use crate::model::ValidationReport;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A log or power term was evaluated over a box reaching outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("big-M for row '{row}' is unbounded; give every variable in the row finite bounds")]
    UnboundedBigM { row: String },

    #[error("row '{row}' must be one-sided (split equalities before computing big-M)")]
    NotOneSided { row: String },

    #[error("unknown Boolean '{0}'")]
    UnknownBoolean(String),

    #[error("invalid model:\n{0}")]
    InvalidModel(ValidationReport),

    #[error("variable '{name}' appears under a nonlinear term but has unbounded domain [{lower}, {upper}]")]
    UnboundedVariable { name: String, lower: f64, upper: f64 },

    #[error("degenerate domain [{lower}, {upper}]")]
    DegenerateDomain { lower: f64, upper: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("variable bounds [{var_lower}, {var_upper}] do not match table domain [{lower}, {upper}]")]
    BoundMismatch {
        var_lower: f64,
        var_upper: f64,
        lower: f64,
        upper: f64,
    },

    #[error("internal error: singular normal equations")]
    SingularSystem,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid instance: {field}: {message}")]
    InvalidInstance { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
