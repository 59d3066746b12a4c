use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] hetspec_core::Error),
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    /// 2 for configuration problems, 3 for regime violations, 4 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        use hetspec_core::Error as E;
        match self {
            CliError::ReadConfig { .. } | CliError::Config(_) => 2,
            CliError::Write { .. } => 4,
            CliError::Core(e) => match e {
                E::NonPositiveRate { .. }
                | E::InvalidParameter { .. }
                | E::NonPositiveTemperature(_)
                | E::UnsupportedCombo(_)
                | E::DetuningNotZeroForClosedForm(_)
                | E::AsymmetricGrid
                | E::GridMismatch(..)
                | E::TooFewSamples { .. }
                | E::WindowOutOfRange { .. }
                | E::StepTooLarge { .. } => 2,
                E::RegimeViolation { .. } | E::BackactionTooLarge(_) | E::AntiDamping(_) => 3,
                E::NegativeSpectrum(_)
                | E::DegenerateFit(_)
                | E::NoConvergence { .. }
                | E::UnstableDrift(_)
                | E::MissingOutputTrace => 4,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
