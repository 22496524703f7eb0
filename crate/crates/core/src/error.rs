use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is singular")]
    SingularMatrix,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Gram matrix is not symmetric")]
    NotSymmetric,

    #[error("Gram matrix is not positive definite (pivot {index} is {pivot})")]
    NotPositiveDefinite { index: usize, pivot: String },

    #[error("enumeration budget exceeded: {count} vectors against a cap of {cap}")]
    BudgetExceeded { count: u64, cap: u64 },

    #[error("element {index} does not preserve the Gram matrix (g^T G g != G)")]
    NotOrthogonal { index: usize },

    #[error("group closure exceeded the order cap of {cap}")]
    OrderCapExceeded { cap: usize },

    #[error("holonomy matrix {matrix} occurs with translations {first} and {second}")]
    InconsistentTranslation {
        matrix: String,
        first: String,
        second: String,
    },

    #[error("element {index} has determinant {det}, expected +1 or -1")]
    NonInvertible { index: usize, det: String },

    #[error("matrix does not have finite order")]
    NotFiniteOrder,

    #[error("{what}: deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    ToleranceViolation {
        what: String,
        deviation: f64,
        tolerance: f64,
    },

    #[error("spectrum tables have different bounds ({0} vs {1})")]
    BoundMismatch(String, String),

    #[error("spectrum tables have different degrees ({0} vs {1})")]
    DegreeMismatch(usize, usize),

    #[error("K_{p}^{d}({k}) = 0, the singular volume is not recoverable from B_-")]
    KrawtchoukZero { d: usize, p: usize, k: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid codimension k = {k} for dimension d = {d}")]
    InvalidCodim { d: usize, k: usize },

    #[error("invalid form degree p = {p} for dimension d = {d}")]
    InvalidDegree { d: usize, p: usize },

    #[error("expansion validation failed: worst residual {worst_residual:e} ({detail})")]
    ValidationFailed { worst_residual: f64, detail: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),
}

impl Error {
    /// Short machine-readable tag, used in structured error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SingularMatrix => "SingularMatrix",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotSymmetric => "NotSymmetric",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::NotOrthogonal { .. } => "NotOrthogonal",
            Error::OrderCapExceeded { .. } => "OrderCapExceeded",
            Error::InconsistentTranslation { .. } => "InconsistentTranslation",
            Error::NonInvertible { .. } => "NonInvertible",
            Error::NotFiniteOrder => "NotFiniteOrder",
            Error::ToleranceViolation { .. } => "ToleranceViolation",
            Error::BoundMismatch(..) => "BoundMismatch",
            Error::DegreeMismatch(..) => "DegreeMismatch",
            Error::KrawtchoukZero { .. } => "KrawtchoukZero",
            Error::NotApplicable(_) => "NotApplicable",
            Error::InvalidCodim { .. } => "InvalidCodim",
            Error::InvalidDegree { .. } => "InvalidDegree",
            Error::ValidationFailed { .. } => "ValidationFailed",
            Error::Schema(_) => "SchemaError",
            Error::UnknownCatalogEntry(_) => "UnknownCatalogEntry",
        }
    }

    /// Errors caused by the input rather than by the library itself.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::ToleranceViolation { .. } | Error::ValidationFailed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
