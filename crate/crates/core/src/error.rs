use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("malformed scheme table: {0}")]
    MalformedTable(String),
    #[error("relation arity {arity} exceeds the configured cap {cap}")]
    ArityCapExceeded { arity: usize, cap: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("scheme mismatch: `{0}` vs `{1}`")]
    SchemeMismatch(String, String),
    #[error("relation `{0}` is registered twice with different definitions")]
    RelationConflict(String),
    #[error("pair ({0},{0}) may only be assigned an identity basic")]
    InconsistentAlphaDiagonal(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` has arity {expected} but scope has {found} variables")]
    ArityMismatch { relation: String, expected: usize, found: usize },
    #[error("scheme `{0}` has no complete decision procedure for basic networks")]
    OracleUnavailable(String),
    #[error("{what} exceeds the exhaustive cap ({value} > {cap})")]
    CapExceeded { what: &'static str, value: usize, cap: usize },
    #[error("instances are over different variable sets")]
    VariableSetMismatch,
    #[error("operation requires scheme `{expected}`, got `{found}`")]
    WrongScheme { expected: &'static str, found: String },
    #[error("target relation `{0}` is not a binary union of basics")]
    NonBinaryTarget(String),
    #[error("no simplification entries for relation `{0}`")]
    MissingRelationFamily(String),
    #[error("not a backdoor: constraint #{constraint} is not simplifiable under alpha {alpha}")]
    NotABackdoor { alpha: String, constraint: usize },
    #[error("radius {radius} is smaller than the maximum source arity {arity}")]
    RadiusTooSmall { radius: usize, arity: usize },
    #[error("definition of `{0}` contains a negation")]
    NegationInDefinition(String),
    #[error("no positive definition supplied for `{0}`")]
    MissingDefinition(String),
    #[error("local instance has {size} variables but the map radius is {radius}")]
    RadiusExceeded { size: usize, radius: usize },
    #[error("not a sidedoor: {0}")]
    NotASidedoor(String),
    #[error("sidedoor radius {door} does not match branching map radius {map}")]
    RadiusMismatch { door: usize, map: usize },
    #[error("R_k requires k >= 2, got {0}")]
    KTooSmall(usize),
    #[error("edge count {0} is not divisible by 3")]
    BadEdgeCount(usize),
    #[error("infeasible generator spec: {0}")]
    SpecInfeasible(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
