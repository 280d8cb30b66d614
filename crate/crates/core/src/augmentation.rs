//! Teacher-model data augmentation: sample discharge notes, annotate them
//! with the two-exemplar prompt, keep parseable answers, and write
//! instruction-tuning sets plus a LoRA hyperparameter file.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DischargeNote};
use crate::dispatch::{Completer, DispatchError};
use crate::extraction::{parse_ranked_list, Extraction};
use crate::prompting::{
    instruction_text, render_augmentation_prompt, render_ranked_lines, PromptError, PromptStyle, TopK,
    AUGMENTATION_EXEMPLARS,
};

/// Dataset sizes of the augmentation scale sweep.
pub const DEFAULT_SIZES: [usize; 4] = [10, 100, 1_000, 10_000];

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("pool has {available} notes, {requested} requested")]
    PoolTooSmall { requested: usize, available: usize },
    #[error("pool exhausted with {accepted} accepted records, {required} required")]
    PoolExhausted { accepted: usize, required: usize },
    #[error("{0} accepted records, {1} required")]
    InsufficientRecords(usize, usize),
    #[error("invalid augmentation job: {0}")]
    InvalidJob(String),
    #[error("exemplar `{0}` not found in the gold corpus")]
    UnknownExemplar(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("teacher failed on note `{note_id}`: {source}")]
    Teacher {
        note_id: String,
        #[source]
        source: DispatchError,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed training config line {line}: {reason}")]
    BadConfig { line: usize, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AugmentError + '_ {
    move |source| AugmentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationJob {
    pub exemplar_ids: Vec<String>,
    pub sizes: Vec<usize>,
    pub seed: u64,
}

impl AugmentationJob {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.exemplar_ids.len() != AUGMENTATION_EXEMPLARS {
            return Err(AugmentError::InvalidJob(format!(
                "need exactly {AUGMENTATION_EXEMPLARS} exemplars, got {}",
                self.exemplar_ids.len()
            )));
        }
        if self.exemplar_ids[0] == self.exemplar_ids[1] {
            return Err(AugmentError::InvalidJob("exemplars must be distinct".into()));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(AugmentError::InvalidJob("sizes must be non-empty and positive".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AugmentError::InvalidJob("sizes must be strictly ascending".into()));
        }
        Ok(())
    }

    pub fn max_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordStatus {
    Accepted,
    ParseFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedRecord {
    pub source_id: String,
    pub note_text: String,
    pub response: String,
    pub extraction: Extraction,
    pub status: RecordStatus,
}

/// A deterministic shuffle of the pool, cut to `n` notes.
pub fn sample_pool(pool: &[DischargeNote], n: usize, seed: u64) -> Result<Vec<DischargeNote>, AugmentError> {
    if n > pool.len() {
        return Err(AugmentError::PoolTooSmall {
            requested: n,
            available: pool.len(),
        });
    }
    let mut shuffled = pool.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    shuffled.truncate(n);
    Ok(shuffled)
}

/// Queries the teacher until `max(sizes)` records are accepted, drawing
/// replacement notes for unparseable answers. Pool notes whose text equals
/// a gold note are never used.
pub fn generate_records(
    job: &AugmentationJob,
    gold: &Corpus,
    pool: &[DischargeNote],
    teacher: &dyn Completer,
) -> Result<Vec<AugmentedRecord>, AugmentError> {
    job.validate()?;
    let exemplars = job
        .exemplar_ids
        .iter()
        .map(|id| {
            gold.get(id)
                .map(|r| (&r.note, &r.annotation))
                .ok_or_else(|| AugmentError::UnknownExemplar(id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let gold_texts: HashSet<&str> = gold.records.iter().map(|r| r.note.text.trim()).collect();
    let eligible: Vec<DischargeNote> = pool
        .iter()
        .filter(|n| !gold_texts.contains(n.text.trim()))
        .cloned()
        .collect();
    let required = job.max_size();
    if eligible.len() < required {
        return Err(AugmentError::PoolExhausted {
            accepted: 0,
            required,
        });
    }
    let order = sample_pool(&eligible, eligible.len(), job.seed)?;

    let mut records = Vec::new();
    let mut accepted = 0usize;
    let mut cursor = 0usize;
    while accepted < required {
        if cursor >= order.len() {
            return Err(AugmentError::PoolExhausted { accepted, required });
        }
        let take = (required - accepted).min(order.len() - cursor);
        let batch = &order[cursor..cursor + take];
        cursor += take;
        let prompts = batch
            .iter()
            .map(|n| render_augmentation_prompt(&exemplars, n))
            .collect::<Result<Vec<_>, _>>()?;
        for (note, response) in batch.iter().zip(teacher.complete_batch(&prompts)) {
            let response = response.map_err(|source| AugmentError::Teacher {
                note_id: note.id.clone(),
                source,
            })?;
            let (extraction, status) = match parse_ranked_list(&response) {
                Ok(e) => {
                    accepted += 1;
                    (e.with_note_id(note.id.clone()), RecordStatus::Accepted)
                }
                Err(e) => (
                    Extraction {
                        note_id: note.id.clone(),
                        terms: vec![],
                        warnings: e.warnings,
                    },
                    RecordStatus::ParseFailed,
                ),
            };
            records.push(AugmentedRecord {
                source_id: note.id.clone(),
                note_text: note.text.clone(),
                response,
                extraction,
                status,
            });
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

/// Renders parsed terms back to ranked lines in document order.
pub fn render_extraction(e: &Extraction) -> String {
    render_ranked_lines(e.terms.iter().map(|t| (t, t.text.as_str())))
}

/// Zero-shot structured top-10 instruction used as the training prompt.
pub fn training_instruction() -> String {
    instruction_text(PromptStyle::Structured, TopK::new(10).expect("10 is a valid top-k"))
}

pub fn training_example(record: &AugmentedRecord, instruction: &str) -> Option<TrainingExample> {
    (record.status == RecordStatus::Accepted).then(|| TrainingExample {
        instruction: instruction.to_string(),
        input: record.note_text.clone(),
        output: render_extraction(&record.extraction),
    })
}

pub fn training_file_name(size: usize) -> String {
    format!("train_{size}.jsonl")
}

/// Writes `train_{s}.jsonl` for each size; each holds the first `s`
/// accepted records, so smaller sets are prefixes of larger ones.
pub fn emit_training_sets(
    records: &[AugmentedRecord],
    sizes: &[usize],
    dir: &Path,
) -> Result<Vec<PathBuf>, AugmentError> {
    let instruction = training_instruction();
    let examples: Vec<TrainingExample> = records
        .iter()
        .filter_map(|r| training_example(r, &instruction))
        .collect();
    let needed = sizes.iter().copied().max().unwrap_or(0);
    if examples.len() < needed {
        return Err(AugmentError::InsufficientRecords(examples.len(), needed));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let lines: Vec<String> = examples
        .iter()
        .take(needed)
        .map(|e| serde_json::to_string(e).expect("training example serializes"))
        .collect();
    let mut paths = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let path = dir.join(training_file_name(size));
        let mut body = String::new();
        for line in &lines[..size] {
            body.push_str(line);
            body.push('\n');
        }
        fs::write(&path, body).map_err(io_err(&path))?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub lora_rank: u32,
    pub learning_rate: f64,
    pub epochs: u32,
    pub per_device_batch: u32,
    pub grad_accum_steps: u32,
    /// Names of keys that differ from the defaults because of overrides.
    pub overridden: Vec<String>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            lora_rank: 64,
            learning_rate: 3e-4,
            epochs: 100,
            per_device_batch: 1,
            grad_accum_steps: 128,
            overridden: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingOverrides {
    pub lora_rank: Option<u32>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<u32>,
    pub per_device_batch: Option<u32>,
    pub grad_accum_steps: Option<u32>,
}

impl TrainingConfig {
    pub fn with_overrides(o: &TrainingOverrides) -> Self {
        let mut c = TrainingConfig::default();
        let mut mark = |name: &str| c.overridden.push(name.to_string());
        if o.lora_rank.is_some() {
            mark("lora_rank");
        }
        if o.learning_rate.is_some() {
            mark("learning_rate");
        }
        if o.epochs.is_some() {
            mark("epochs");
        }
        if o.per_device_batch.is_some() {
            mark("per_device_batch");
        }
        if o.grad_accum_steps.is_some() {
            mark("grad_accum_steps");
        }
        c.lora_rank = o.lora_rank.unwrap_or(c.lora_rank);
        c.learning_rate = o.learning_rate.unwrap_or(c.learning_rate);
        c.epochs = o.epochs.unwrap_or(c.epochs);
        c.per_device_batch = o.per_device_batch.unwrap_or(c.per_device_batch);
        c.grad_accum_steps = o.grad_accum_steps.unwrap_or(c.grad_accum_steps);
        c
    }

    /// Flat `key = value` text.
    pub fn to_text(&self) -> String {
        format!(
            "lora_rank = {}\nlearning_rate = {:e}\nepochs = {}\nper_device_batch = {}\ngrad_accum_steps = {}\noverridden = {}\n",
            self.lora_rank,
            self.learning_rate,
            self.epochs,
            self.per_device_batch,
            self.grad_accum_steps,
            self.overridden.join(","),
        )
    }

    pub fn from_text(text: &str) -> Result<Self, AugmentError> {
        let mut c = TrainingConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| AugmentError::BadConfig {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let int = || value.parse::<u32>().map_err(|_| bad("expected an integer"));
            match key {
                "lora_rank" => c.lora_rank = int()?,
                "learning_rate" => c.learning_rate = value.parse().map_err(|_| bad("expected a number"))?,
                "epochs" => c.epochs = int()?,
                "per_device_batch" => c.per_device_batch = int()?,
                "grad_accum_steps" => c.grad_accum_steps = int()?,
                "overridden" => {
                    c.overridden = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect()
                }
                _ => return Err(bad("unknown key")),
            }
        }
        Ok(c)
    }
}

pub fn emit_training_config(overrides: &TrainingOverrides, path: &Path) -> Result<TrainingConfig, AugmentError> {
    let cfg = TrainingConfig::with_overrides(overrides);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(cfg.to_text().as_bytes()).map_err(io_err(path))?;
    Ok(cfg)
}

pub fn load_training_config(path: &Path) -> Result<TrainingConfig, AugmentError> {
    TrainingConfig::from_text(&fs::read_to_string(path).map_err(io_err(path))?)
}
