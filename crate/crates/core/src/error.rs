use thiserror::Error;

/// Errors raised by the lattice computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("empty tuple")]
    EmptyTuple,

    #[error("tuple length {len} exceeds the sign-pattern cap {cap}")]
    TupleTooLong { len: usize, cap: usize },

    #[error("degenerate tuple: every functional is zero")]
    DegenerateTuple,

    #[error("tuple is not admissible: admissibility {0} > 1")]
    Inadmissible(f64),

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("rewrite budget exceeded: join width reached {width} (budget {budget})")]
    RewriteBudget { width: usize, budget: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("zero operator")]
    ZeroOperator,

    #[error("negative input: {0}")]
    Negative(String),

    #[error("function is not positive: value {value} at {at:?}")]
    NotPositive { value: f64, at: Vec<f64> },

    #[error("linear program infeasible")]
    LpInfeasible,

    #[error("linear program unbounded")]
    LpUnbounded,

    #[error("linear program hit the pivot limit")]
    LpIterationLimit,

    #[error("majorant LP infeasible; violation {violation} at {at:?}")]
    MajorantInfeasible { violation: f64, at: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
