use thiserror::Error;

/// Errors shared by the numeric and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Parameters violate a documented precondition.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A walk exceeded the configured step cap without being absorbed.
    #[error("horizon cap {cap} exceeded{}", run.map(|r| format!(" in run {r}")).unwrap_or_default())]
    HorizonExceeded { cap: u64, run: Option<u64> },

    /// A table or DP request would exceed the configured work budget.
    #[error("work budget exceeded: need about {need} units, budget is {budget}")]
    BudgetExceeded { need: u128, budget: u128 },

    /// An evaluation point lies outside the domain of definition.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
