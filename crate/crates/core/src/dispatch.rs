//! Interface between the pipelines and whatever answers prompts.

use crate::prompting::RenderedPrompt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct DispatchError {
    pub message: String,
}

impl DispatchError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

/// Answers a batch of prompts. Results are aligned with the input order and
/// one failing item never aborts the others.
pub trait Completer: Sync {
    fn complete_batch(&self, prompts: &[RenderedPrompt]) -> Vec<Result<String, DispatchError>>;
}

impl<F> Completer for F
where
    F: Fn(&RenderedPrompt) -> Result<String, DispatchError> + Sync,
{
    fn complete_batch(&self, prompts: &[RenderedPrompt]) -> Vec<Result<String, DispatchError>> {
        prompts.iter().map(self).collect()
    }
}
