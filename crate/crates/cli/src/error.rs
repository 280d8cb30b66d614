use jargon_core::augmentation::AugmentError;
use jargon_core::corpus::CorpusError;
use jargon_core::evaluation::EvalError;
use jargon_core::metrics::MetricsError;
use jargon_core::report::ReportError;
use jargon_gateway::GatewayError;

/// Top-level failure, classified by what the user has to fix.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("provider error: {0}")]
    Provider(String),
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Provider(_) => 3,
            CliError::Data(_) => 4,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::UnknownFormat(_) => CliError::Config(e.to_string()),
            ReportError::IncompleteGrid(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::InvalidConfig(_) => CliError::Config(e.to_string()),
            GatewayError::Cache(_) => CliError::Data(e.to_string()),
            _ => CliError::Provider(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Dispatch { .. } => CliError::Provider(e.to_string()),
            EvalError::Prompt(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        match e {
            AugmentError::Teacher { .. } => CliError::Provider(e.to_string()),
            AugmentError::InvalidJob(_) | AugmentError::UnknownExemplar(_) | AugmentError::Prompt(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}
