//! Evaluation and data-augmentation harness for extracting and ranking
//! patient-important medical jargon from clinical notes with language models.
//!
//! The pieces, bottom up:
//! - [`corpus`]: gold notes, the discharge-note pool, stratified folds.
//! - [`prompting`]: general/structured prompts and exemplar blocks.
//! - [`extraction`]: ranked-list parsing, relaxed matching, top-k truncation.
//! - [`metrics`] and [`report`]: P/R/F1/MRR, fold CIs, significance, tables.
//! - [`evaluation`]: the cross-validated grid run for one model.
//! - [`augmentation`]: teacher annotation and instruction-tuning sets.
//!
//! Model access goes through the [`dispatch::Completer`] trait.

pub mod augmentation;
pub mod corpus;
pub mod dispatch;
pub mod evaluation;
pub mod extraction;
pub mod metrics;
pub mod prompting;
pub mod report;

pub use corpus::{ClinicalNote, Corpus, GoldAnnotation, GoldRecord, GoldTerm};
pub use dispatch::{Completer, DispatchError};
pub use extraction::{Extraction, MatchAssignment};
pub use prompting::{PromptSpec, PromptStyle, RenderedPrompt, Shots, TopK};
