//! Cross-validated evaluation of one model over a (style, shots, k) grid.

use serde::{Deserialize, Serialize};

use crate::corpus::{select_fewshot, Corpus, CorpusError, FoldSplit, GoldRecord};
use crate::dispatch::{Completer, DispatchError};
use crate::extraction::{assign_matches, parse_ranked_list, truncate_gold, Extraction};
use crate::metrics::{fold_means, FoldMeans, MetricsError, NoteScore};
use crate::prompting::{render_prompt, PromptError, PromptSpec, PromptStyle, RenderedPrompt, Shots, TopK};
use crate::report::CellReport;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("few-shot exemplar `{note_id}` belongs to evaluation fold {fold}")]
    Leakage { note_id: String, fold: usize },
    #[error("model `{model}`, cell {style}/{shots}/top{k}, note `{note_id}`: {source}")]
    Dispatch {
        model: String,
        style: PromptStyle,
        shots: Shots,
        k: TopK,
        note_id: String,
        #[source]
        source: DispatchError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalGrid {
    pub styles: Vec<PromptStyle>,
    pub shots: Vec<Shots>,
    pub top_k: Vec<TopK>,
}

impl EvalGrid {
    pub fn specs(&self) -> Vec<PromptSpec> {
        let mut out = Vec::new();
        for &style in &self.styles {
            for &shots in &self.shots {
                for &top_k in &self.top_k {
                    out.push(PromptSpec { style, shots, top_k });
                }
            }
        }
        out
    }
}

/// One scored note, as dumped for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteRecord {
    pub model: String,
    pub style: PromptStyle,
    pub shots: Shots,
    pub top_k: TopK,
    pub fold: usize,
    #[serde(flatten)]
    pub score: NoteScore,
    pub parse_warnings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEvaluation {
    pub cells: Vec<CellReport>,
    pub notes: Vec<NoteRecord>,
}

/// Scores one response against a gold record at top-k. Responses with no
/// parseable lines count as empty extractions.
pub fn score_response(response: &str, gold: &GoldRecord, k: TopK) -> (NoteScore, Extraction) {
    let extraction = parse_ranked_list(response)
        .unwrap_or_else(|e| Extraction {
            warnings: e.warnings,
            ..Default::default()
        })
        .with_note_id(gold.note.id.clone());
    let truncated = extraction.truncated(k.get());
    let gold_k = truncate_gold(&gold.annotation, k.get());
    let assign = assign_matches(&truncated, &gold_k);
    (NoteScore::from_assignment(gold.note.id.clone(), &assign), extraction)
}

struct Job<'a> {
    fold: usize,
    spec: PromptSpec,
    record: &'a GoldRecord,
}

/// Exemplar ids for `fold`, checked to lie outside it.
pub fn fold_exemplars(
    corpus: &Corpus,
    split: &FoldSplit,
    fold: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<String>, EvalError> {
    let ids = select_fewshot(corpus, split, fold, n, seed)?;
    if let Some(bad) = ids.iter().find(|id| split.fold_of(id) == Some(fold)) {
        return Err(EvalError::Leakage {
            note_id: bad.clone(),
            fold,
        });
    }
    Ok(ids)
}

pub fn evaluate_model(
    model: &str,
    corpus: &Corpus,
    split: &FoldSplit,
    grid: &EvalGrid,
    sampling_seed: u64,
    completer: &dyn Completer,
) -> Result<ModelEvaluation, EvalError> {
    let specs = grid.specs();
    let mut jobs = Vec::new();
    let mut prompts: Vec<RenderedPrompt> = Vec::new();
    for fold in 0..split.k {
        let members = split.members(corpus, fold);
        for spec in &specs {
            let exemplar_ids = match spec.shots {
                Shots::Zero => Vec::new(),
                Shots::Few(n) => fold_exemplars(corpus, split, fold, n as usize, sampling_seed)?,
            };
            let exemplars: Vec<_> = exemplar_ids
                .iter()
                .map(|id| {
                    let r = corpus.get(id).expect("selected from corpus");
                    (&r.note, &r.annotation)
                })
                .collect();
            for record in &members {
                prompts.push(render_prompt(spec, &record.note, &exemplars)?);
                jobs.push(Job {
                    fold,
                    spec: *spec,
                    record,
                });
            }
        }
    }

    let responses = completer.complete_batch(&prompts);
    debug_assert_eq!(responses.len(), jobs.len());

    let mut notes = Vec::with_capacity(jobs.len());
    for (job, response) in jobs.iter().zip(responses) {
        let text = response.map_err(|source| EvalError::Dispatch {
            model: model.to_string(),
            style: job.spec.style,
            shots: job.spec.shots,
            k: job.spec.top_k,
            note_id: job.record.note.id.clone(),
            source,
        })?;
        let (score, extraction) = score_response(&text, job.record, job.spec.top_k);
        notes.push(NoteRecord {
            model: model.to_string(),
            style: job.spec.style,
            shots: job.spec.shots,
            top_k: job.spec.top_k,
            fold: job.fold,
            score,
            parse_warnings: extraction.warnings.len(),
        });
    }

    let mut cells = Vec::with_capacity(specs.len());
    for spec in &specs {
        let mut folds: Vec<FoldMeans> = Vec::with_capacity(split.k);
        for fold in 0..split.k {
            let scores: Vec<NoteScore> = notes
                .iter()
                .filter(|n| {
                    n.fold == fold && n.style == spec.style && n.shots == spec.shots && n.top_k == spec.top_k
                })
                .map(|n| n.score.clone())
                .collect();
            folds.push(fold_means(&scores)?);
        }
        cells.push(CellReport::from_folds(model, spec.style, spec.shots, spec.top_k, folds)?);
    }
    Ok(ModelEvaluation { cells, notes })
}
