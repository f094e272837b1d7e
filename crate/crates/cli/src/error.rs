use coordsim::harness::HarnessError;
use coordsim::region::RegionError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
/// Runtime, I/O or verification failure.
pub const EXIT_FAILURE: i32 = 1;
/// Malformed or invalid `--spec` input.
pub const EXIT_SCHEMA: i32 = 2;
/// The binned decoder limit or the encoder search budget stopped the run.
pub const EXIT_ABORT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
    #[error("aborted: {0}")]
    Abort(String),
    #[error("{0} acceptance criteria failed")]
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Abort(_) => EXIT_ABORT,
            CliError::Io(_) | CliError::Runtime(_) | CliError::VerifyFailed(_) => EXIT_FAILURE,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::DecoderLimit(_) | HarnessError::BudgetExceeded { .. } => CliError::Abort(e.to_string()),
            HarnessError::Config(msg) => CliError::Schema(msg),
            HarnessError::Io(err) => CliError::Io(err.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
