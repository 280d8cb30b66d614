//! Gold-standard corpus and discharge-note pool: loading, validation,
//! stratified fold assignment and few-shot exemplar selection.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("io error reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate note id `{0}`")]
    DuplicateNoteId(String),
    #[error("bad fold count {k} for a corpus of {notes} notes")]
    BadFoldCount { k: usize, notes: usize },
    #[error("few-shot pool has {available} notes outside fold {fold}, {requested} requested")]
    InsufficientPool {
        fold: usize,
        requested: usize,
        available: usize,
    },
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Main diagnosis category of a gold note.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Cancer,
    #[serde(rename = "COPD", alias = "Copd")]
    Copd,
    Diabetes,
    Hypertension,
    #[serde(alias = "Liver Failure")]
    LiverFailure,
    #[serde(alias = "Heart Failure")]
    HeartFailure,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Cancer,
        Category::Copd,
        Category::Diabetes,
        Category::Hypertension,
        Category::LiverFailure,
        Category::HeartFailure,
    ];
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Category::Cancer => "Cancer",
            Category::Copd => "COPD",
            Category::Diabetes => "Diabetes",
            Category::Hypertension => "Hypertension",
            Category::LiverFailure => "LiverFailure",
            Category::HeartFailure => "HeartFailure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClinicalNote {
    pub id: String,
    pub category: Category,
    pub text: String,
}

/// One annotated term. `major` is the condition rank, `minor` the sub-rank
/// of an associated test, medication or procedure (`2.1`, `2.2`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldTerm {
    pub text: String,
    pub major: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minor: Option<u32>,
}

impl GoldTerm {
    pub fn new(text: impl Into<String>, major: u32, minor: Option<u32>) -> Self {
        Self {
            text: text.into(),
            major,
            minor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub note_id: String,
    pub terms: Vec<GoldTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Violation {
    NoTerms,
    EmptyText,
    NonPositiveRank,
    /// Lowest major rank is not 1. Reported, but not a reason to reject.
    RankGapAtTop,
}

impl Violation {
    pub fn is_fatal(self) -> bool {
        !matches!(self, Violation::RankGapAtTop)
    }
}

/// Checks an annotation against the term invariants. Violations are data:
/// the caller decides which ones reject the record.
pub fn validate_annotation(a: &GoldAnnotation) -> Vec<Violation> {
    let mut out = Vec::new();
    if a.terms.is_empty() {
        out.push(Violation::NoTerms);
        return out;
    }
    if a.terms.iter().any(|t| t.text.trim().is_empty()) {
        out.push(Violation::EmptyText);
    }
    if a.terms.iter().any(|t| t.major == 0 || t.minor == Some(0)) {
        out.push(Violation::NonPositiveRank);
    }
    let top = a.terms.iter().map(|t| t.major).filter(|&m| m > 0).min();
    if matches!(top, Some(m) if m > 1) {
        out.push(Violation::RankGapAtTop);
    }
    out
}

/// A gold note paired with its annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldRecord {
    pub note: ClinicalNote,
    pub annotation: GoldAnnotation,
}

#[derive(Serialize, Deserialize)]
struct GoldLine {
    id: String,
    category: Category,
    text: String,
    terms: Vec<GoldTerm>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<GoldRecord>,
    /// Non-fatal validation findings, by note id.
    pub warnings: Vec<(String, Violation)>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&GoldRecord> {
        self.records.iter().find(|r| r.note.id == id)
    }

    pub fn category_counts(&self) -> BTreeMap<Category, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.note.category).or_insert(0) += 1;
        }
        counts
    }

    /// Builds a corpus from in-memory records, applying the same checks as
    /// [`load_gold_corpus`]. Line numbers in errors are 1-based record indices.
    pub fn from_records(records: Vec<GoldRecord>) -> Result<Self, CorpusError> {
        if records.is_empty() {
            return Err(CorpusError::MalformedRecord {
                line: 1,
                reason: "corpus contains no records".into(),
            });
        }
        let mut seen = HashSet::new();
        let mut warnings = Vec::new();
        for (i, r) in records.iter().enumerate() {
            if r.note.id.is_empty() {
                return Err(CorpusError::MalformedRecord {
                    line: i + 1,
                    reason: "empty id".into(),
                });
            }
            if r.note.text.trim().is_empty() {
                return Err(CorpusError::MalformedRecord {
                    line: i + 1,
                    reason: format!("note `{}` has empty text", r.note.id),
                });
            }
            if !seen.insert(r.note.id.clone()) {
                return Err(CorpusError::DuplicateNoteId(r.note.id.clone()));
            }
            for v in validate_annotation(&r.annotation) {
                if v.is_fatal() {
                    return Err(CorpusError::MalformedRecord {
                        line: i + 1,
                        reason: format!("note `{}`: {v:?}", r.note.id),
                    });
                }
                warnings.push((r.note.id.clone(), v));
            }
        }
        Ok(Self { records, warnings })
    }

    /// Serializes to the line-delimited gold format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let line = GoldLine {
                id: r.note.id.clone(),
                category: r.note.category,
                text: r.note.text.clone(),
                terms: r.annotation.terms.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("gold record serializes"));
            out.push('\n');
        }
        out
    }
}

fn read_file(path: &Path) -> Result<String, CorpusError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(CorpusError::MissingFile(path.to_path_buf()))
        }
        Err(source) => Err(CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn records_of(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
}

pub fn parse_gold_corpus(content: &str) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    for (line, raw) in records_of(content) {
        let rec: GoldLine =
            serde_json::from_str(raw).map_err(|e| CorpusError::MalformedRecord {
                line,
                reason: e.to_string(),
            })?;
        records.push(GoldRecord {
            note: ClinicalNote {
                id: rec.id.clone(),
                category: rec.category,
                text: rec.text,
            },
            annotation: GoldAnnotation {
                note_id: rec.id,
                terms: rec.terms,
            },
        });
    }
    Corpus::from_records(records)
}

pub fn load_gold_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    parse_gold_corpus(&read_file(path.as_ref())?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DischargeNote {
    pub id: String,
    pub text: String,
}

pub fn parse_discharge_pool(content: &str) -> Result<Vec<DischargeNote>, CorpusError> {
    let mut seen = HashSet::new();
    let mut notes = Vec::new();
    for (line, raw) in records_of(content) {
        let note: DischargeNote =
            serde_json::from_str(raw).map_err(|e| CorpusError::MalformedRecord {
                line,
                reason: e.to_string(),
            })?;
        if note.id.is_empty() || note.text.trim().is_empty() {
            return Err(CorpusError::MalformedRecord {
                line,
                reason: "empty id or text".into(),
            });
        }
        if !seen.insert(note.id.clone()) {
            return Err(CorpusError::DuplicateNoteId(note.id));
        }
        notes.push(note);
    }
    Ok(notes)
}

pub fn load_discharge_pool(path: impl AsRef<Path>) -> Result<Vec<DischargeNote>, CorpusError> {
    parse_discharge_pool(&read_file(path.as_ref())?)
}

/// Assignment of every corpus note to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub k: usize,
    pub seed: u64,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldSplit {
    pub fn fold_of(&self, note_id: &str) -> Option<usize> {
        self.assignment.get(note_id).copied()
    }

    /// Note ids in `fold`, in corpus order.
    pub fn members<'a>(&self, corpus: &'a Corpus, fold: usize) -> Vec<&'a GoldRecord> {
        corpus
            .records
            .iter()
            .filter(|r| self.fold_of(&r.note.id) == Some(fold))
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold assignment. Notes of each category are shuffled and
/// dealt round-robin, with the dealing position carried over between
/// categories, so per-category and overall fold sizes each differ by at
/// most one.
pub fn make_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldSplit, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    if k < 2 || k > corpus.len() {
        return Err(CorpusError::BadFoldCount {
            k,
            notes: corpus.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    let mut cursor = 0usize;
    for category in Category::ALL {
        let mut ids: Vec<&str> = corpus
            .records
            .iter()
            .filter(|r| r.note.category == category)
            .map(|r| r.note.id.as_str())
            .collect();
        ids.shuffle(&mut rng);
        for id in ids {
            assignment.insert(id.to_string(), cursor % k);
            cursor += 1;
        }
    }
    Ok(FoldSplit {
        k,
        seed,
        assignment,
    })
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Picks `n` exemplar note ids from outside `eval_fold`.
pub fn select_fewshot(
    corpus: &Corpus,
    split: &FoldSplit,
    eval_fold: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<String>, CorpusError> {
    let pool: Vec<&str> = corpus
        .records
        .iter()
        .map(|r| r.note.id.as_str())
        .filter(|id| split.fold_of(id).is_some_and(|f| f != eval_fold))
        .collect();
    if n == 0 || pool.len() < n {
        return Err(CorpusError::InsufficientPool {
            fold: eval_fold,
            requested: n,
            available: pool.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(fold_seed(seed, eval_fold));
    Ok(pool
        .choose_multiple(&mut rng, n)
        .map(|s| s.to_string())
        .collect())
}
