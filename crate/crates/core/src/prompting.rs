//! Prompt rendering for the general and structured extraction prompts, the
//! augmentation teacher prompt, and ranked-list blocks for exemplars.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{ClinicalNote, DischargeNote, GoldAnnotation};
use crate::extraction::{rank_key, truncate_gold, Ranked};

pub const STRUCTURED_TEMPLATE: &str = include_str!("../templates/structured.txt");
pub const GENERAL_TEMPLATE: &str = include_str!("../templates/general.txt");
pub const AUGMENTATION_TEMPLATE: &str = include_str!("../templates/augmentation.txt");
/// Sample output skeleton of the structured prompt, majors 1 through 6.
pub const STRUCTURED_SKELETON: &str = include_str!("../templates/structured_skeleton.txt");

pub const CONTEXT_HEADER: &str = "### Context:";
pub const RESPONSE_HEADER: &str = "### Response:";
pub const EXAMPLE_CONTEXT_HEADER: &str = "### Example Context:";
pub const EXAMPLE_RESPONSE_HEADER: &str = "### Example Response:";

/// Number of gold exemplars the augmentation teacher prompt carries.
pub const AUGMENTATION_EXEMPLARS: usize = 2;
pub const AUGMENTATION_TOP_K: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("expected {expected} exemplars, got {got}")]
    ExemplarCountMismatch { expected: usize, got: usize },
    #[error("top-k must be one of 3, 5, 10 (got {0})")]
    BadTopK(u32),
    #[error("few-shot prompts need at least one exemplar")]
    EmptyFewShot,
    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    General,
    Structured,
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptStyle::General => "general",
            PromptStyle::Structured => "structured",
        })
    }
}

impl FromStr for PromptStyle {
    type Err = PromptError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "general" => Ok(PromptStyle::General),
            "structured" | "specific" => Ok(PromptStyle::Structured),
            _ => Err(PromptError::Unknown {
                what: "prompt style",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shots {
    Zero,
    Few(u32),
}

impl Shots {
    pub fn exemplar_count(self) -> usize {
        match self {
            Shots::Zero => 0,
            Shots::Few(n) => n as usize,
        }
    }

    pub fn is_few(self) -> bool {
        matches!(self, Shots::Few(_))
    }
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Zero => f.write_str("zero"),
            Shots::Few(n) => write!(f, "few{n}"),
        }
    }
}

impl FromStr for Shots {
    type Err = PromptError;
    /// Accepts `zero`, `few` (two exemplars) and `fewN`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let unknown = || PromptError::Unknown {
            what: "shots",
            value: s.clone(),
        };
        match s.as_str() {
            "zero" | "zero-shot" => Ok(Shots::Zero),
            "few" | "few-shot" => Ok(Shots::Few(2)),
            other => {
                let n: u32 = other.strip_prefix("few").ok_or_else(unknown)?.parse().map_err(|_| unknown())?;
                if n == 0 {
                    return Err(PromptError::EmptyFewShot);
                }
                Ok(Shots::Few(n))
            }
        }
    }
}

/// A top-k setting restricted to 3, 5 or 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct TopK(u32);

impl TopK {
    pub const ALL: [TopK; 3] = [TopK(3), TopK(5), TopK(10)];

    pub fn new(k: u32) -> Result<Self, PromptError> {
        match k {
            3 | 5 | 10 => Ok(TopK(k)),
            _ => Err(PromptError::BadTopK(k)),
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for TopK {
    type Error = PromptError;
    fn try_from(k: u32) -> Result<Self, Self::Error> {
        TopK::new(k)
    }
}

impl From<TopK> for u32 {
    fn from(k: TopK) -> u32 {
        k.0
    }
}

impl fmt::Display for TopK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptSpec {
    pub style: PromptStyle,
    pub shots: Shots,
    pub top_k: TopK,
}

impl PromptSpec {
    pub fn new(style: PromptStyle, shots: Shots, top_k: u32) -> Result<Self, PromptError> {
        if shots == Shots::Few(0) {
            return Err(PromptError::EmptyFewShot);
        }
        Ok(Self {
            style,
            shots,
            top_k: TopK::new(top_k)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub instruction_text: String,
    pub exemplar_blocks: Vec<String>,
    pub context_text: String,
    pub full_text: String,
}

impl RenderedPrompt {
    fn assemble(instruction_text: String, exemplar_blocks: Vec<String>, context: &str) -> Self {
        let mut full = instruction_text.clone();
        full.push_str("\n\n");
        for block in &exemplar_blocks {
            full.push_str(block);
            full.push_str("\n\n");
        }
        full.push_str(CONTEXT_HEADER);
        full.push_str("\n\n");
        full.push_str(context);
        full.push_str("\n\n");
        full.push_str(RESPONSE_HEADER);
        full.push('\n');
        RenderedPrompt {
            instruction_text,
            exemplar_blocks,
            context_text: context.to_string(),
            full_text: full,
        }
    }
}

fn structured_skeleton(k: u32) -> String {
    STRUCTURED_SKELETON
        .lines()
        .filter(|l| {
            l.split('.')
                .next()
                .and_then(|m| m.trim().parse::<u32>().ok())
                .is_some_and(|m| m <= k)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn general_skeleton(k: u32) -> String {
    (1..=k)
        .flat_map(|i| [format!("{i}. key term"), format!("{i}. key term")])
        .collect::<Vec<_>>()
        .join("\n")
}

fn fill(template: &str, top_k: u32, skeleton: &str) -> String {
    template
        .replace("{top_k}", &top_k.to_string())
        .replace("{skeleton}", skeleton)
        .trim_end()
        .to_string()
}

/// Instruction section (header, task lines and sample skeleton) for a style
/// and top-k.
pub fn instruction_text(style: PromptStyle, top_k: TopK) -> String {
    let k = top_k.get();
    match style {
        PromptStyle::Structured => fill(STRUCTURED_TEMPLATE, k, &structured_skeleton(k)),
        PromptStyle::General => fill(GENERAL_TEMPLATE, k, &general_skeleton(k)),
    }
}

fn rank_label<T: Ranked>(t: &T) -> String {
    match t.minor() {
        Some(minor) => format!("{}.{}", t.major(), minor),
        None => format!("{}.", t.major()),
    }
}

/// Renders terms one per line, in the order given.
pub fn render_ranked_lines<'a, T, I>(terms: I) -> String
where
    T: Ranked + 'a,
    I: IntoIterator<Item = (&'a T, &'a str)>,
{
    terms
        .into_iter()
        .map(|(t, text)| format!("{} {}", rank_label(t), text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Gold terms as a ranked list, sorted by rank with ties kept in annotation
/// order.
pub fn render_gold_block(a: &GoldAnnotation) -> String {
    let mut terms: Vec<_> = a.terms.iter().collect();
    terms.sort_by_key(|t| rank_key(*t));
    render_ranked_lines(terms.into_iter().map(|t| (t, t.text.as_str())))
}

pub fn render_exemplar_block(note_text: &str, gold: &GoldAnnotation) -> String {
    format!(
        "{EXAMPLE_CONTEXT_HEADER}\n\n{note_text}\n\n{EXAMPLE_RESPONSE_HEADER}\n\n{}",
        render_gold_block(gold)
    )
}

/// Renders an extraction prompt. Exemplar annotations are cut at the same
/// top-k as the instruction.
pub fn render_prompt(
    spec: &PromptSpec,
    note: &ClinicalNote,
    exemplars: &[(&ClinicalNote, &GoldAnnotation)],
) -> Result<RenderedPrompt, PromptError> {
    let expected = spec.shots.exemplar_count();
    if exemplars.len() != expected {
        return Err(PromptError::ExemplarCountMismatch {
            expected,
            got: exemplars.len(),
        });
    }
    let k = spec.top_k.get();
    let blocks = exemplars
        .iter()
        .map(|(n, g)| render_exemplar_block(&n.text, &truncate_gold(g, k)))
        .collect();
    Ok(RenderedPrompt::assemble(
        instruction_text(spec.style, spec.top_k),
        blocks,
        &note.text,
    ))
}

pub fn augmentation_instruction() -> String {
    fill(
        AUGMENTATION_TEMPLATE,
        AUGMENTATION_TOP_K,
        &structured_skeleton(AUGMENTATION_TOP_K),
    )
}

/// Teacher prompt for annotating a discharge note with two gold exemplars.
pub fn render_augmentation_prompt(
    exemplars: &[(&ClinicalNote, &GoldAnnotation)],
    note: &DischargeNote,
) -> Result<RenderedPrompt, PromptError> {
    if exemplars.len() != AUGMENTATION_EXEMPLARS {
        return Err(PromptError::ExemplarCountMismatch {
            expected: AUGMENTATION_EXEMPLARS,
            got: exemplars.len(),
        });
    }
    let blocks = exemplars
        .iter()
        .map(|(n, g)| render_exemplar_block(&n.text, &truncate_gold(g, AUGMENTATION_TOP_K)))
        .collect();
    Ok(RenderedPrompt::assemble(augmentation_instruction(), blocks, &note.text))
}
