use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("cannot write {0}")]
    Output(String),
    #[error("additional demonstrations of the same task are required")]
    NeedsMoreDemonstrations,
    #[error("search budget exhausted")]
    BudgetExhausted,
    #[error("problem is unsolvable")]
    Unsolvable,
    #[error(transparent)]
    NonFiniteLoss(domaininfer::estimator::TrainError),
    #[error("plan is invalid: {0}")]
    InvalidPlan(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::InvalidPlan(_) | CliError::Failed(_) | CliError::Output(_) => 1,
            CliError::Input(_) => 2,
            CliError::NeedsMoreDemonstrations => 3,
            CliError::BudgetExhausted => 4,
            CliError::Unsolvable => 5,
            CliError::NonFiniteLoss(_) => 6,
        }
    }
}
