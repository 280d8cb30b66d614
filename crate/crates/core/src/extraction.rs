//! Ranked-list parsing, term normalization, relaxed matching, top-k
//! truncation and one-to-one match assignment.

use std::collections::{BTreeSet, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{GoldAnnotation, GoldTerm};

static STOPWORDS_TXT: &str = include_str!("../data/stopwords.txt");
static SUFFIXES_TXT: &str = include_str!("../data/stem_suffixes.txt");

/// Minimum stem length (in chars) left after a suffix is stripped.
const MIN_STEM_CHARS: usize = 4;

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| data_lines(STOPWORDS_TXT).collect());
/// Checked in file order; the first suffix that leaves a long enough stem wins.
static SUFFIXES: LazyLock<Vec<&'static str>> = LazyLock::new(|| data_lines(SUFFIXES_TXT).collect());

static MAJOR_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(\d+)\.\s+(.+)$").unwrap());
static MINOR_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(\d+)\.(\d+)\s+(.+)$").unwrap());

fn data_lines(s: &'static str) -> impl Iterator<Item = &'static str> {
    s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn stopwords() -> impl Iterator<Item = &'static str> {
    data_lines(STOPWORDS_TXT)
}

pub fn stem_suffixes() -> impl Iterator<Item = &'static str> {
    data_lines(SUFFIXES_TXT)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedTerm {
    pub text: String,
    pub major: u32,
    pub minor: Option<u32>,
    /// 1-based document-order index among the parsed terms.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseWarning {
    /// Line did not match the ranked-list grammar.
    Skipped { line: usize, content: String },
    /// Same normalized text as an earlier term; dropped.
    Duplicate { line: usize, text: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub note_id: String,
    pub terms: Vec<ExtractedTerm>,
    pub warnings: Vec<ParseWarning>,
}

impl Extraction {
    pub fn with_note_id(mut self, id: impl Into<String>) -> Self {
        self.note_id = id.into();
        self
    }

    /// Keeps terms with major rank `<= k` and renumbers positions so they
    /// stay contiguous from 1.
    pub fn truncated(&self, k: u32) -> Extraction {
        let mut terms = truncate_top_k(&self.terms, k);
        for (i, t) in terms.iter_mut().enumerate() {
            t.position = i + 1;
        }
        Extraction {
            note_id: self.note_id.clone(),
            terms,
            warnings: self.warnings.clone(),
        }
    }

    pub fn empty(note_id: impl Into<String>) -> Self {
        Extraction {
            note_id: note_id.into(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no ranked terms recovered ({} lines skipped)", warnings.len())]
pub struct ParseEmpty {
    pub warnings: Vec<ParseWarning>,
}

fn clean_term(raw: &str) -> &str {
    raw.trim().trim_end_matches(|c: char| c == '.' || c.is_whitespace())
}

fn parse_line(line: &str) -> Option<(u32, Option<u32>, &str)> {
    if let Some(c) = MINOR_LINE.captures(line) {
        let major = c[1].parse().ok()?;
        let minor = c[2].parse().ok()?;
        let text = clean_term(c.get(3)?.as_str());
        return (major > 0 && minor > 0 && !text.is_empty()).then_some((major, Some(minor), text));
    }
    let c = MAJOR_LINE.captures(line)?;
    let major = c[1].parse().ok()?;
    let text = clean_term(c.get(2)?.as_str());
    (major > 0 && !text.is_empty()).then_some((major, None, text))
}

/// Parses a model response of `N. term` / `N.M term` lines.
pub fn parse_ranked_list(text: &str) -> Result<Extraction, ParseEmpty> {
    let mut terms = Vec::new();
    let mut warnings = Vec::new();
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let Some((major, minor, term)) = parse_line(line) else {
            warnings.push(ParseWarning::Skipped {
                line: lineno,
                content: line.to_string(),
            });
            continue;
        };
        let mut key = normalize(term).tokens;
        if key.is_empty() {
            // all stopwords/punctuation: dedup on the raw lowercase text instead
            key = vec![term.to_lowercase()];
        }
        if !seen.insert(key) {
            warnings.push(ParseWarning::Duplicate {
                line: lineno,
                text: term.to_string(),
            });
            continue;
        }
        terms.push(ExtractedTerm {
            text: term.to_string(),
            major,
            minor,
            position: terms.len() + 1,
        });
    }
    if terms.is_empty() {
        return Err(ParseEmpty { warnings });
    }
    Ok(Extraction {
        note_id: String::new(),
        terms,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedTerm {
    pub original: String,
    /// Token multiset, in order of appearance.
    pub tokens: Vec<String>,
}

impl NormalizedTerm {
    pub fn token_set(&self) -> BTreeSet<&str> {
        self.tokens.iter().map(String::as_str).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn stem(token: &str) -> String {
    let chars = token.chars().count();
    for suffix in SUFFIXES.iter() {
        if let Some(rest) = token.strip_suffix(suffix) {
            if chars - suffix.chars().count() >= MIN_STEM_CHARS {
                return rest.to_string();
            }
        }
    }
    token.to_string()
}

/// Lowercase, punctuation to spaces, stopword removal, light suffix stemming.
pub fn normalize(text: &str) -> NormalizedTerm {
    let lowered: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let tokens = lowered
        .split_whitespace()
        .filter(|t| !STOPWORDS.contains(t))
        .map(stem)
        .collect();
    NormalizedTerm {
        original: text.to_string(),
        tokens,
    }
}

/// Token-set containment in either direction, or Jaccard similarity >= 0.5.
pub fn relaxed_match(a: &NormalizedTerm, b: &NormalizedTerm) -> bool {
    let (sa, sb) = (a.token_set(), b.token_set());
    if sa.is_empty() || sb.is_empty() {
        return false;
    }
    if sa.is_subset(&sb) || sb.is_subset(&sa) {
        return true;
    }
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    2 * inter >= union
}

pub fn relaxed_match_text(a: &str, b: &str) -> bool {
    relaxed_match(&normalize(a), &normalize(b))
}

/// Anything carrying a hierarchical rank.
pub trait Ranked {
    fn major(&self) -> u32;
    fn minor(&self) -> Option<u32>;
}

impl Ranked for GoldTerm {
    fn major(&self) -> u32 {
        self.major
    }
    fn minor(&self) -> Option<u32> {
        self.minor
    }
}

impl Ranked for ExtractedTerm {
    fn major(&self) -> u32 {
        self.major
    }
    fn minor(&self) -> Option<u32> {
        self.minor
    }
}

/// Keeps terms whose major rank is at most `k`; sub-ranked terms follow
/// their parent rank.
pub fn truncate_top_k<T: Ranked + Clone>(terms: &[T], k: u32) -> Vec<T> {
    terms.iter().filter(|t| t.major() <= k).cloned().collect()
}

pub fn truncate_gold(gold: &GoldAnnotation, k: u32) -> GoldAnnotation {
    GoldAnnotation {
        note_id: gold.note_id.clone(),
        terms: truncate_top_k(&gold.terms, k),
    }
}

/// Sort key for rank order: major, bare term before its sub-ranks, minor.
pub fn rank_key<T: Ranked>(t: &T) -> (u32, u32) {
    (t.major(), t.minor().unwrap_or(0))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchAssignment {
    /// (extracted position, gold term index), in extracted position order.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_extracted: Vec<usize>,
    pub unmatched_gold: Vec<usize>,
}

impl MatchAssignment {
    pub fn first_matched_position(&self) -> Option<usize> {
        self.pairs.iter().map(|&(p, _)| p).min()
    }
}

/// Greedy one-to-one assignment: extracted terms in position order each take
/// the best-ranked (then earliest annotated) unmatched gold term they match.
pub fn assign_matches(extracted: &Extraction, gold: &GoldAnnotation) -> MatchAssignment {
    let mut gold_order: Vec<usize> = (0..gold.terms.len()).collect();
    gold_order.sort_by_key(|&i| (rank_key(&gold.terms[i]), i));
    let gold_norm: Vec<NormalizedTerm> = gold.terms.iter().map(|t| normalize(&t.text)).collect();
    let mut taken = vec![false; gold.terms.len()];

    let mut by_position: Vec<&ExtractedTerm> = extracted.terms.iter().collect();
    by_position.sort_by_key(|t| t.position);

    let mut out = MatchAssignment::default();
    for term in by_position {
        let norm = normalize(&term.text);
        let hit = gold_order
            .iter()
            .copied()
            .find(|&g| !taken[g] && relaxed_match(&norm, &gold_norm[g]));
        match hit {
            Some(g) => {
                taken[g] = true;
                out.pairs.push((term.position, g));
            }
            None => out.unmatched_extracted.push(term.position),
        }
    }
    out.unmatched_gold = (0..gold.terms.len()).filter(|&g| !taken[g]).collect();
    out
}
