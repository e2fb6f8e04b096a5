use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    /// The solvers only cover k >= 3, 3 <= q < k + 1 and 0 < theta < 1.
    #[error("solver hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("non-finite field entry {value} at index {index}")]
    NonFiniteField { index: usize, value: f64 },

    #[error("field has {got} components, expected {expected}")]
    Shape { expected: usize, got: usize },

    #[error("spin {spin} at vertex {vertex} is outside 1..={q}")]
    SpinOutOfRange { vertex: usize, spin: usize, q: usize },

    #[error("invalid invariant set {0}")]
    InvalidSet(String),

    #[error("function is not finite at x = {x} (value {value})")]
    NonFinite { x: f64, value: f64 },

    #[error("bisection did not converge within {iters} iterations")]
    Convergence { iters: usize },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("residual {residual:e} exceeds the acceptance bound {bound:e}")]
    ResidualTooLarge { residual: f64, bound: f64 },

    #[error("tree of order {k} and depth {depth} has more than {limit} vertices")]
    TreeTooLarge { k: usize, depth: usize, limit: usize },

    #[error("enumeration of {states}^{sites} boundary configurations exceeds the budget of {budget}")]
    BudgetExceeded { states: usize, sites: usize, budget: u64 },

    #[error("integer overflow while counting measures for q = {q}")]
    CountOverflow { q: usize },
}
