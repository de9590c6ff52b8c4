use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HaloError {
    #[error("element is not a unit")]
    NotAUnit,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("operation needs a commutative coefficient ring")]
    NoncommutativeRing,
    #[error("minors of order {0} are unsupported over a noncommutative ring")]
    MinorOrderUnsupported(usize),
    #[error("minor enumeration needs {needed} minors, cap is {cap}")]
    SizeCapExceeded { needed: u128, cap: u128 },
    #[error("no Newton polygon vertex separates the slopes at {0}")]
    NoSeparatingVertex(String),
    #[error("eigenvalue gap violated: {0}")]
    GapViolation(String),
    #[error("index {0} is not a touching vertex")]
    NotTouchingVertex(usize),
    #[error("Hodge sum mismatch: {0}")]
    HodgeSumMismatch(String),
    #[error("window too small: need at least {required}, have {have}")]
    WindowTooSmall { required: usize, have: usize },
    #[error("reduction hypothesis failed: {0}")]
    ReductionHypothesisFailed(String),
    #[error("iteration budget of {0} exceeded")]
    IterationBudgetExceeded(usize),
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("no slope pairing exists: {0}")]
    NoPairing(String),
    #[error("insufficient guard digits: need {need}, have {have}")]
    InsufficientGuardDigits { need: u32, have: u32 },
    #[error("modified basis entry ({m},{n}) has a negative T power")]
    ModifiedBasisOverflow { m: usize, n: usize },
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("tail unstable at coefficient {0}")]
    TailUnstable(usize),
    #[error("grid needs at least two points")]
    GridDegenerate,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, HaloError>;
