use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the crate.
///
/// Numeric failures carry the measured quantity and the tolerance it was
/// checked against so callers can report something actionable.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not symmetric: max|M - M'| = {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive definite: eigenvalue {eigenvalue:.3e} is at or below the rank tolerance {tolerance:.3e}")]
    NotPositiveDefinite { eigenvalue: f64, tolerance: f64 },

    #[error("singular value decomposition did not converge; the input is numerically pathological")]
    ConvergenceFailure,

    #[error("rank {requested} is out of range; at most {maximum} is possible here")]
    RankOutOfRange { requested: usize, maximum: usize },

    #[error("term set is empty")]
    EmptyTermSet,

    #[error("term {term} names response variable {variable}, but only variables 1..={r} exist")]
    TermOutOfRange { term: String, variable: usize, r: usize },

    #[error("duplicate term {term}")]
    DuplicateTerm { term: String },

    #[error("cannot parse term {text:?}: {reason}")]
    InvalidTerm { text: String, reason: String },

    #[error("{name} is rank deficient; dependent columns: {}", columns.join(", "))]
    RankDeficient { name: String, columns: Vec<String> },

    #[error("column {column:?} has zero variance and cannot be standardized")]
    ZeroVariance { column: String },

    #[error("predictor column {column:?} is constant; intercepts are carried by W, so X must not contain one")]
    ConstantPredictor { column: String },

    #[error("non-finite value in column {column:?} at row {row}")]
    NonFinite { column: String, row: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("indicator row {row} does not contain exactly one 1")]
    InvalidIndicator { row: usize },

    #[error("normal equations for the intercept design are singular")]
    SingularNormalEquations,

    #[error("deviance became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("observed category in row {row} has probability below the smallest positive normal number")]
    ProbabilityUnderflow { row: usize },

    #[error("hierarchy violated: Z terms [{}] are missing from W", missing.join(", "))]
    HierarchyViolation { missing: Vec<String> },

    #[error("mask leaves no free entries in dimension {dimension} of {side}")]
    UnidentifiableMask { dimension: usize, side: &'static str },

    #[error("response variable {variable} appears in no W term; there is nothing to contrast")]
    TargetNotInModel { variable: usize },

    #[error("confidence level {level} must lie strictly between 0 and 1")]
    InvalidLevel { level: f64 },

    #[error("{0}")]
    InvalidOptions(String),
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>) -> Self {
        Error::DimensionMismatch { context: context.into() }
    }
}
