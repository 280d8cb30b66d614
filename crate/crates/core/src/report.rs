//! Cell and run reports, and their rendering as results tables.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::{aggregate_folds, FoldMeans, MetricsError, Summary};
use crate::prompting::{PromptStyle, Shots, TopK};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("report grid is incomplete: {0}")]
    IncompleteGrid(String),
    #[error("unknown table format `{0}` (expected md or csv)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
    Mrr,
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "precision" | "p" => Ok(Metric::Precision),
            "recall" | "r" => Ok(Metric::Recall),
            "f1" => Ok(Metric::F1),
            "mrr" => Ok(Metric::Mrr),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

impl FoldMeans {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::Mrr => self.mrr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummaries {
    pub precision: Summary,
    pub recall: Summary,
    pub f1: Summary,
    pub mrr: Summary,
}

impl MetricSummaries {
    pub fn get(&self, metric: Metric) -> Summary {
        match metric {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::Mrr => self.mrr,
        }
    }
}

/// Results for one (model, prompt style, shots, k) setting across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub model: String,
    pub style: PromptStyle,
    pub shots: Shots,
    pub top_k: TopK,
    pub folds: Vec<FoldMeans>,
    pub summary: MetricSummaries,
}

impl CellReport {
    pub fn from_folds(
        model: impl Into<String>,
        style: PromptStyle,
        shots: Shots,
        top_k: TopK,
        folds: Vec<FoldMeans>,
    ) -> Result<Self, MetricsError> {
        let agg = |m: Metric| aggregate_folds(&folds.iter().map(|f| f.get(m)).collect::<Vec<_>>());
        let summary = MetricSummaries {
            precision: agg(Metric::Precision)?,
            recall: agg(Metric::Recall)?,
            f1: agg(Metric::F1)?,
            mrr: agg(Metric::Mrr)?,
        };
        Ok(CellReport {
            model: model.into(),
            style,
            shots,
            top_k,
            folds,
            summary,
        })
    }

    pub fn fold_values(&self, metric: Metric) -> Vec<f64> {
        self.folds.iter().map(|f| f.get(metric)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub models: Vec<String>,
    pub styles: Vec<PromptStyle>,
    pub shots: Vec<Shots>,
    pub top_k: Vec<TopK>,
    pub cells: Vec<CellReport>,
    /// File name of the run manifest, relative to the run directory.
    pub manifest: String,
}

impl RunReport {
    pub fn cell(&self, model: &str, style: PromptStyle, shots: Shots, k: TopK) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.style == style && c.shots == shots && c.top_k == k)
    }

    pub fn check_complete(&self) -> Result<(), ReportError> {
        if self.models.is_empty() || self.styles.is_empty() || self.shots.is_empty() || self.top_k.is_empty() {
            return Err(ReportError::IncompleteGrid("empty grid".into()));
        }
        for model in &self.models {
            for &style in &self.styles {
                for &shots in &self.shots {
                    for &k in &self.top_k {
                        if self.cell(model, style, shots, k).is_none() {
                            return Err(ReportError::IncompleteGrid(format!(
                                "missing cell {model}/{style}/{shots}/top{k}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

impl FromStr for TableFormat {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// `Summary`: means only. `WithCi`: means with 95% half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableLayout {
    Summary,
    WithCi,
}

pub fn format_value(v: f64) -> String {
    format!("{v:.3}")
}

pub fn format_with_ci(s: Summary) -> String {
    format!("{} ± {}", format_value(s.mean), format_value(s.ci_halfwidth))
}

fn shots_label(s: Shots) -> &'static str {
    match s {
        Shots::Zero => "Zero-Shot",
        Shots::Few(_) => "Few-Shot",
    }
}

fn shots_key(s: Shots) -> String {
    match s {
        Shots::Zero => "zero".into(),
        Shots::Few(_) => "few".into(),
    }
}

const TABLE_METRICS: [(Metric, &str); 2] = [(Metric::F1, "F1"), (Metric::Mrr, "MRR")];

/// Rows are model x prompt style; columns are shots x top-k x {F1, MRR}.
pub fn render_report_table(
    report: &RunReport,
    format: TableFormat,
    layout: TableLayout,
) -> Result<String, ReportError> {
    report.check_complete()?;
    let mut columns = Vec::new();
    for &shots in &report.shots {
        for &k in &report.top_k {
            for (metric, name) in TABLE_METRICS {
                columns.push((shots, k, metric, name));
            }
        }
    }
    let mut rows: Vec<(String, PromptStyle, Vec<Summary>)> = Vec::new();
    for model in &report.models {
        for &style in &report.styles {
            let values = columns
                .iter()
                .map(|&(shots, k, metric, _)| {
                    report
                        .cell(model, style, shots, k)
                        .expect("grid checked")
                        .summary
                        .get(metric)
                })
                .collect();
            rows.push((model.clone(), style, values));
        }
    }

    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            out.push_str("| Model | Prompt |");
            for (shots, k, _, name) in &columns {
                let _ = write!(out, " {} top{} {} |", shots_label(*shots), k, name);
            }
            out.push_str("\n| --- | --- |");
            for _ in &columns {
                out.push_str(" ---: |");
            }
            out.push('\n');
            for (model, style, values) in &rows {
                let _ = write!(out, "| {model} | {style} |");
                for v in values {
                    let cell = match layout {
                        TableLayout::Summary => format_value(v.mean),
                        TableLayout::WithCi => format_with_ci(*v),
                    };
                    let _ = write!(out, " {cell} |");
                }
                out.push('\n');
            }
        }
        TableFormat::Csv => {
            let mut header = vec!["model".to_string(), "prompt".to_string()];
            for (shots, k, metric, _) in &columns {
                let base = format!("{}_top{}_{}", shots_key(*shots), k, metric_key(*metric));
                if layout == TableLayout::WithCi {
                    header.push(base.clone());
                    header.push(format!("{base}_ci"));
                } else {
                    header.push(base);
                }
            }
            out.push_str(&csv_line(&header));
            for (model, style, values) in &rows {
                let mut fields = vec![model.clone(), style.to_string()];
                for v in values {
                    fields.push(format_value(v.mean));
                    if layout == TableLayout::WithCi {
                        fields.push(format_value(v.ci_halfwidth));
                    }
                }
                out.push_str(&csv_line(&fields));
            }
        }
    }
    Ok(out)
}

fn metric_key(m: Metric) -> &'static str {
    match m {
        Metric::Precision => "precision",
        Metric::Recall => "recall",
        Metric::F1 => "f1",
        Metric::Mrr => "mrr",
    }
}

fn csv_line(fields: &[String]) -> String {
    let quoted: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    let mut line = quoted.join(",");
    line.push('\n');
    line
}
