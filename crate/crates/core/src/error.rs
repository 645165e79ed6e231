use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments, configuration, or model structure.
    Config,
    /// Malformed or inconsistent input data.
    Data,
    /// A numerical step could not produce a usable estimate.
    Numerical,
}

/// Library error. Index fields are 0-based; messages print them 1-based.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid vote {} at row {}, column {} (expected -1, 0 or 1)", .value, .row + 1, .column + 1)]
    InvalidVote { row: usize, column: usize, value: i64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("label matrix has no rows")]
    EmptyMatrix,

    #[error("need at least 3 sources for the triplet method, found {found} (enable the ratio fallback to go lower)")]
    TooFewSources { found: usize },

    #[error("source {} is not assigned to any task", .source_index + 1)]
    AssignmentMissing { source_index: usize },

    #[error("self edge on {vertex}")]
    SelfEdge { vertex: String },

    #[error("{what} {} out of range (there are {limit})", .index + 1)]
    IndexOutOfRange { what: &'static str, index: usize, limit: usize },

    #[error("sources {} and {} vote on different tasks and cannot share a dependency edge", .first + 1, .second + 1)]
    CrossTaskSourceEdge { first: usize, second: usize },

    #[error("unsupported clique {members}: at most 3 vertices with at most one task when sources are present")]
    UnsupportedClique { members: String },

    #[error("dependency graph is not triangulated; run validate_graph first")]
    NotTriangulated,

    #[error("invalid class prior: {0}")]
    InvalidPrior(String),

    #[error("no observed variable has a conditionally independent triplet and the ratio fallback is disabled")]
    InsufficientIndependence,

    #[error("degenerate triplet (L{}, L{}, L{}): a pairwise moment is below the denominator floor", .i + 1, .j + 1, .k + 1)]
    DegenerateTriplet { i: usize, j: usize, k: usize },

    #[error("source {} has no usable triplet and the ratio fallback is unavailable", .source_index + 1)]
    NoUsableTriplet { source_index: usize },

    #[error("sign anchor cannot reach source {}", .source_index + 1)]
    AnchorUnreachable { source_index: usize },

    #[error("task {} has prior mean {:.4}, too close to zero for the ratio estimate", .task + 1, .mean)]
    PriorNearZero { task: usize, mean: f64 },

    #[error("source {} abstains on {} rows, need {} for conditional estimates", .source_index + 1, .rows, .required)]
    TooFewAbstainRows { source_index: usize, rows: u64, required: u64 },

    #[error("clique of {size} sources is not supported (maximum 2)")]
    UnsupportedCliqueSize { size: usize },

    #[error("numerically unstable solve for {clique}: entries span [{min:.4}, {max:.4}]")]
    NumericalInstability { clique: String, min: f64, max: f64 },

    #[error("zero separator probability with non-zero clique factors")]
    ZeroSeparator,

    #[error("every task configuration has zero likelihood for this vote row")]
    AllZeroLikelihood,

    #[error("{tasks} tasks exceed the exact-enumeration limit of {limit}")]
    TooManyTasks { tasks: usize, limit: usize },

    #[error("class {} never receives a vote", .class + 1)]
    DegenerateClass { class: usize },

    #[error("model has {vars} binary variables, enumeration cap is {limit}")]
    TooLarge { vars: usize, limit: usize },

    #[error("{context}:{line}: {message}")]
    Parse { context: String, line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("in {clique}: {source}")]
    InClique {
        clique: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidVote { .. }
            | Error::ShapeMismatch { .. }
            | Error::EmptyMatrix
            | Error::Parse { .. }
            | Error::DegenerateClass { .. }
            | Error::Io(_) => ErrorKind::Data,
            Error::DegenerateTriplet { .. }
            | Error::NoUsableTriplet { .. }
            | Error::InsufficientIndependence
            | Error::AnchorUnreachable { .. }
            | Error::PriorNearZero { .. }
            | Error::TooFewAbstainRows { .. }
            | Error::NumericalInstability { .. }
            | Error::ZeroSeparator
            | Error::AllZeroLikelihood => ErrorKind::Numerical,
            Error::InClique { source, .. } => source.kind(),
            _ => ErrorKind::Config,
        }
    }

    pub(crate) fn in_clique(self, clique: impl Into<String>) -> Error {
        Error::InClique { clique: clique.into(), source: Box::new(self) }
    }
}
