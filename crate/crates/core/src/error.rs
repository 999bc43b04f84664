use thiserror::Error;

/// Errors shared by every module of the laboratory.
#[derive(Error, Debug)]
pub enum PpdeError {
    /// Two paths (or a path and a lattice) disagree on step size, spatial
    /// dimension, or horizon where agreement is required.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A requested computation exceeds the configured desk-scale budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// An input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A payoff evaluated to NaN or infinity on a lattice node.
    #[error("non-finite payoff at stop index {index}")]
    NonFinitePayoff { index: usize },

    /// A grafted continuation tree would run past the lattice horizon.
    #[error("horizon overflow: {0}")]
    HorizonOverflow(String),

    /// A search or evaluation set was empty.
    #[error("empty set: {0}")]
    EmptySet(String),

    /// Configuration text failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PpdeError>;
