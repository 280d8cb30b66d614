//! Per-note precision, recall, F1 and reciprocal rank; fold aggregation with
//! normal-approximation confidence intervals; paired significance testing.
//!
//! Per-note values are computed from integer counts and averaged as exact
//! rationals, so the only rounding is the final conversion to `f64`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::extraction::MatchAssignment;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

/// p-values below this are reported as `< 1e-12`.
pub const P_VALUE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("cannot average an empty set of scores")]
    EmptySet,
    #[error("need at least 2 fold means, got {0}")]
    TooFewFolds(usize),
    #[error("fold counts differ: {a} vs {b}")]
    FoldMismatch { a: usize, b: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// TP = matched pairs, FP = unmatched extracted, FN = unmatched gold.
pub fn confusion(assign: &MatchAssignment) -> ConfusionCounts {
    ConfusionCounts {
        tp: assign.pairs.len() as u64,
        fp: assign.unmatched_extracted.len() as u64,
        fn_: assign.unmatched_gold.len() as u64,
    }
}

fn ratio(num: u64, den: u64) -> BigRational {
    if den == 0 {
        BigRational::zero()
    } else {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("bounded ratio converts to f64")
}

pub fn precision_exact(c: ConfusionCounts) -> BigRational {
    ratio(c.tp, c.tp + c.fp)
}

pub fn recall_exact(c: ConfusionCounts) -> BigRational {
    ratio(c.tp, c.tp + c.fn_)
}

/// 2PR/(P+R) reduced over counts: 2TP / (2TP + FP + FN), zero when TP is zero.
pub fn f1_exact(c: ConfusionCounts) -> BigRational {
    if c.tp == 0 {
        return BigRational::zero();
    }
    ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_)
}

pub fn precision(c: ConfusionCounts) -> f64 {
    to_f64(&precision_exact(c))
}

pub fn recall(c: ConfusionCounts) -> f64 {
    to_f64(&recall_exact(c))
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn rr_exact(first_match: Option<usize>) -> BigRational {
    match first_match {
        Some(pos) if pos > 0 => ratio(1, pos as u64),
        _ => BigRational::zero(),
    }
}

/// 1 / position of the first matched extracted term; 0 without matches.
pub fn reciprocal_rank(assign: &MatchAssignment) -> f64 {
    to_f64(&rr_exact(assign.first_matched_position()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteScore {
    pub note_id: String,
    pub counts: ConfusionCounts,
    /// Position of the first matched extracted term.
    pub first_match: Option<usize>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub reciprocal_rank: f64,
}

/// Exact per-note values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactScore {
    pub precision: BigRational,
    pub recall: BigRational,
    pub f1: BigRational,
    pub reciprocal_rank: BigRational,
}

impl NoteScore {
    pub fn new(note_id: impl Into<String>, counts: ConfusionCounts, first_match: Option<usize>) -> Self {
        let exact = ExactScore {
            precision: precision_exact(counts),
            recall: recall_exact(counts),
            f1: f1_exact(counts),
            reciprocal_rank: rr_exact(first_match),
        };
        NoteScore {
            note_id: note_id.into(),
            counts,
            first_match,
            precision: to_f64(&exact.precision),
            recall: to_f64(&exact.recall),
            f1: to_f64(&exact.f1),
            reciprocal_rank: to_f64(&exact.reciprocal_rank),
        }
    }

    pub fn from_assignment(note_id: impl Into<String>, assign: &MatchAssignment) -> Self {
        Self::new(note_id, confusion(assign), assign.first_matched_position())
    }

    pub fn exact(&self) -> ExactScore {
        ExactScore {
            precision: precision_exact(self.counts),
            recall: recall_exact(self.counts),
            f1: f1_exact(self.counts),
            reciprocal_rank: rr_exact(self.first_match),
        }
    }
}

fn mean_exact<I: IntoIterator<Item = BigRational>>(values: I) -> Result<BigRational, MetricsError> {
    let mut sum = BigRational::zero();
    let mut n = 0u64;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        return Err(MetricsError::EmptySet);
    }
    Ok(sum / BigRational::from_integer(BigInt::from(n)))
}

pub fn mrr_exact(scores: &[NoteScore]) -> Result<BigRational, MetricsError> {
    mean_exact(scores.iter().map(|s| rr_exact(s.first_match)))
}

/// Mean reciprocal rank over notes.
pub fn mrr(scores: &[NoteScore]) -> Result<f64, MetricsError> {
    mrr_exact(scores).map(|r| to_f64(&r))
}

/// Mean of each metric over the notes of one fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMeans {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mrr: f64,
}

pub fn fold_means(scores: &[NoteScore]) -> Result<FoldMeans, MetricsError> {
    let exact: Vec<ExactScore> = scores.iter().map(NoteScore::exact).collect();
    let mean = |f: fn(&ExactScore) -> &BigRational| -> Result<f64, MetricsError> {
        mean_exact(exact.iter().map(|e| f(e).clone())).map(|r| to_f64(&r))
    };
    Ok(FoldMeans {
        precision: mean(|e| &e.precision)?,
        recall: mean(|e| &e.recall)?,
        f1: mean(|e| &e.f1)?,
        mrr: mean(|e| &e.reciprocal_rank)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub ci_halfwidth: f64,
}

/// Mean of the fold means and the 95% half-width `1.96 * s / sqrt(n)` with
/// the sample standard deviation `s`.
pub fn aggregate_folds(fold_means: &[f64]) -> Result<Summary, MetricsError> {
    let n = fold_means.len();
    if n < 2 {
        return Err(MetricsError::TooFewFolds(n));
    }
    if fold_means.iter().all(|v| *v == fold_means[0]) {
        return Ok(Summary {
            mean: fold_means[0],
            ci_halfwidth: 0.0,
        });
    }
    let nf = n as f64;
    let mean = fold_means.iter().sum::<f64>() / nf;
    let var = fold_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(Summary {
        mean,
        ci_halfwidth: Z_95 * var.sqrt() / nf.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub t: f64,
    pub df: usize,
    pub p_value: f64,
}

impl Significance {
    pub fn p_display(&self) -> String {
        if self.p_value < P_VALUE_FLOOR {
            "< 1e-12".to_string()
        } else {
            format!("{:.6}", self.p_value)
        }
    }
}

/// Two-sided paired t-test over fold-aligned scores.
pub fn compare_runs(a: &[f64], b: &[f64]) -> Result<Significance, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::FoldMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(MetricsError::TooFewFolds(n));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let df = n - 1;
    if var == 0.0 {
        // degenerate: no variation in the differences
        let (t, p_value) = if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        };
        return Ok(Significance { t, df, p_value });
    }
    let t = mean / (var.sqrt() / nf.sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    let p_value = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(Significance { t, df, p_value })
}
