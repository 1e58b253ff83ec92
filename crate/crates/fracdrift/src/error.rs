use fracdrift_core::dual::DualError;
use fracdrift_core::exponents::Rejection;
use fracdrift_core::field::FieldError;
use fracdrift_core::levy::LevyError;
use fracdrift_core::solver::SolverError;
use fracdrift_core::spaces::SpacesError;

/// Harness failures, each mapped to a stable process exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Inadmissible(#[from] Rejection),
    #[error("inadmissible exponents: levy.alpha = {given} but the regime requires alpha = {required}")]
    AlphaMismatch { given: String, required: String },
    #[error("solver aborted: {0}")]
    Solver(#[from] SolverError),
    #[error("dual run failed: {0}")]
    Dual(#[from] DualError),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Spaces(#[from] SpacesError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("{0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// 2: config parse; 3: admissibility; 4: solver abort; 1: anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Inadmissible(_) | HarnessError::AlphaMismatch { .. } => 3,
            HarnessError::Solver(_) | HarnessError::Dual(_) => 4,
            _ => 1,
        }
    }
}
