//! Process exit codes and the error type that carries them.

use std::fmt;

use goldstein_core::Error as CoreError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitCode {
    Ok = 0,
    Internal = 1,
    Usage = 2,
    BudgetExceeded = 3,
    InfeasibleStart = 4,
    OracleError = 5,
    ModulusError = 6,
    VerifyFailed = 7,
    CertificateCorrupt = 8,
}

impl ExitCode {
    pub const ALL: [ExitCode; 9] = [
        ExitCode::Ok,
        ExitCode::Internal,
        ExitCode::Usage,
        ExitCode::BudgetExceeded,
        ExitCode::InfeasibleStart,
        ExitCode::OracleError,
        ExitCode::ModulusError,
        ExitCode::VerifyFailed,
        ExitCode::CertificateCorrupt,
    ];

    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn describe(self) -> &'static str {
        match self {
            ExitCode::Ok => "success",
            ExitCode::Internal => "internal error",
            ExitCode::Usage => "usage or configuration error",
            ExitCode::BudgetExceeded => "inner or outer budget exceeded",
            ExitCode::InfeasibleStart => "starting point is infeasible",
            ExitCode::OracleError => "an oracle returned a non-finite value",
            ExitCode::ModulusError => "bisection ran out of steps (nonconvexity modulus understated)",
            ExitCode::VerifyFailed => "certificate failed verification",
            ExitCode::CertificateCorrupt => "certificate does not match the oracles or is malformed",
        }
    }
}

impl From<&CoreError> for ExitCode {
    fn from(e: &CoreError) -> Self {
        match e {
            CoreError::Oracle { .. } => ExitCode::OracleError,
            CoreError::Usage(_) => ExitCode::Usage,
            CoreError::InfeasibleStart(_) => ExitCode::InfeasibleStart,
            CoreError::InnerBudgetExceeded { .. } | CoreError::OuterBudgetExceeded { .. } => {
                ExitCode::BudgetExceeded
            }
            CoreError::Modulus { .. } => ExitCode::ModulusError,
            CoreError::Internal(_) => ExitCode::Internal,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ExitCode::Usage, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError { code: ExitCode::from(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(ExitCode::Internal, format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
