use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("index {index} in `{name}` is out of range 1..={n}")]
    IndexOutOfRange { name: String, index: usize, n: usize },
    #[error("`{0}` is a semimartingale and has no time derivative")]
    NotTimeDifferentiable(String),
    #[error("d() applied to an expression that already contains dt or dB")]
    NestedDifferential,
    #[error("`{0}` has no registered Itô differential")]
    NoDifferential(String),
    #[error("negative powers are only defined for exponential weights")]
    NegativePower,
    #[error("division by zero")]
    DivisionByZero,
    #[error("symbol `{0}` has no assigned value")]
    Unassigned(String),
    #[error("{0}")]
    Definition(String),
}
