use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use jargon_core::augmentation::{
    emit_training_config, emit_training_sets, generate_records, AugmentationJob, RecordStatus, TrainingConfig,
};
use jargon_core::corpus::{load_discharge_pool, load_gold_corpus, make_folds};
use jargon_core::evaluation::evaluate_model;
use jargon_core::metrics::{compare_runs, Significance};
use jargon_core::prompting::{PromptStyle, Shots, TopK};
use jargon_core::report::{render_report_table, Metric, RunReport, TableFormat, TableLayout};
use jargon_gateway::{Gateway, ResponseCache};
use serde::Serialize;

use crate::config::{AugmentConfig, EvaluateConfig};
use crate::error::CliError;
use crate::manifest::{digest, digest_file, RunManifest};

pub const REPORT_FILE: &str = "report.json";
pub const SCORES_FILE: &str = "scores.jsonl";
pub const FOLDS_FILE: &str = "folds.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TABLE_MD: &str = "report.md";
pub const TABLE_CI_MD: &str = "report_ci.md";
pub const TABLE_CSV: &str = "report.csv";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const TRAINING_CONFIG_FILE: &str = "lora_config.txt";

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s
}

fn open_cache(path: &Path) -> Result<Arc<ResponseCache>, CliError> {
    Ok(Arc::new(ResponseCache::open(path)?))
}

pub struct EvaluateOutcome {
    pub run_dir: PathBuf,
    pub report: RunReport,
    /// Requests that went out over the network, retries included.
    pub network_calls: u64,
}

pub fn cmd_evaluate(config_path: &Path) -> Result<EvaluateOutcome, CliError> {
    let loaded = EvaluateConfig::load(config_path)?;
    let cfg = &loaded.config;
    let grid = cfg.grid()?;
    let corpus = load_gold_corpus(&cfg.corpus)?;
    for (id, v) in &corpus.warnings {
        tracing::warn!(note = %id, "annotation warning: {v:?}");
    }
    let split = make_folds(&corpus, cfg.folds, cfg.fold_seed)?;
    let cache = open_cache(&cfg.cache)?;

    let mut cells = Vec::new();
    let mut notes = Vec::new();
    let mut network_calls = 0;
    for provider in &cfg.providers {
        let gateway = Gateway::new(provider.clone(), cache.clone())?.with_parallelism(cfg.parallelism);
        tracing::info!(provider = %provider.name, "evaluating");
        let result = evaluate_model(&provider.name, &corpus, &split, &grid, cfg.sampling_seed, &gateway);
        network_calls += gateway.network_calls();
        let eval = result?;
        cells.extend(eval.cells);
        notes.extend(eval.notes);
    }

    let report = RunReport {
        models: cfg.providers.iter().map(|p| p.name.clone()).collect(),
        styles: grid.styles.clone(),
        shots: grid.shots.clone(),
        top_k: grid.top_k.clone(),
        cells,
        manifest: MANIFEST_FILE.into(),
    };
    report.check_complete()?;

    let run_dir = cfg.output_dir.clone();
    create_dir(&run_dir)?;
    write(&run_dir.join(REPORT_FILE), to_json(&report))?;
    write(&run_dir.join(FOLDS_FILE), to_json(&split))?;
    let mut scores = String::new();
    for n in &notes {
        scores.push_str(&serde_json::to_string(n).expect("note record serializes"));
        scores.push('\n');
    }
    write(&run_dir.join(SCORES_FILE), scores)?;
    for (file, format, layout) in [
        (TABLE_MD, TableFormat::Markdown, TableLayout::Summary),
        (TABLE_CI_MD, TableFormat::Markdown, TableLayout::WithCi),
        (TABLE_CSV, TableFormat::Csv, TableLayout::WithCi),
    ] {
        write(&run_dir.join(file), render_report_table(&report, format, layout)?)?;
    }
    let manifest = RunManifest {
        command: "evaluate".into(),
        config_digest: digest(&loaded.raw),
        corpus_digest: digest_file(&cfg.corpus)?,
        pool_digest: None,
        fold_seed: Some(cfg.fold_seed),
        sampling_seed: cfg.sampling_seed,
        providers: cfg.providers.clone(),
        cache_file: cfg.cache.clone(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        artifact_version: env!("CARGO_PKG_VERSION").into(),
    };
    write(&run_dir.join(MANIFEST_FILE), to_json(&manifest))?;
    Ok(EvaluateOutcome {
        run_dir,
        report,
        network_calls,
    })
}

pub struct AugmentOutcome {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub training_config: TrainingConfig,
    pub accepted: usize,
    pub parse_failures: usize,
    pub network_calls: u64,
}

pub fn cmd_augment(config_path: &Path) -> Result<AugmentOutcome, CliError> {
    let loaded = AugmentConfig::load(config_path)?;
    let cfg = &loaded.config;
    let corpus = load_gold_corpus(&cfg.corpus)?;
    let pool = load_discharge_pool(&cfg.pool)?;
    let job = AugmentationJob {
        exemplar_ids: cfg.exemplars.clone(),
        sizes: cfg.sizes.clone(),
        seed: cfg.sampling_seed,
    };
    job.validate()?;
    let cache = open_cache(&cfg.cache)?;
    let teacher = Gateway::new(cfg.teacher.clone(), cache)?.with_parallelism(cfg.parallelism);
    let result = generate_records(&job, &corpus, &pool, &teacher);
    let network_calls = teacher.network_calls();
    let records = result?;

    create_dir(&cfg.output_dir)?;
    let files = emit_training_sets(&records, &job.sizes, &cfg.output_dir)?;
    let training_config = emit_training_config(&cfg.training_overrides, &cfg.output_dir.join(TRAINING_CONFIG_FILE))?;
    let mut audit = String::new();
    for r in &records {
        audit.push_str(&serde_json::to_string(r).expect("record serializes"));
        audit.push('\n');
    }
    write(&cfg.output_dir.join(RECORDS_FILE), audit)?;
    let manifest = RunManifest {
        command: "augment".into(),
        config_digest: digest(&loaded.raw),
        corpus_digest: digest_file(&cfg.corpus)?,
        pool_digest: Some(digest_file(&cfg.pool)?),
        fold_seed: None,
        sampling_seed: cfg.sampling_seed,
        providers: vec![cfg.teacher.clone()],
        cache_file: cfg.cache.clone(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        artifact_version: env!("CARGO_PKG_VERSION").into(),
    };
    write(&cfg.output_dir.join(MANIFEST_FILE), to_json(&manifest))?;
    let accepted = records.iter().filter(|r| r.status == RecordStatus::Accepted).count();
    Ok(AugmentOutcome {
        output_dir: cfg.output_dir.clone(),
        files,
        training_config,
        accepted,
        parse_failures: records.len() - accepted,
        network_calls,
    })
}

pub fn load_run(run_dir: &Path) -> Result<RunReport, CliError> {
    let path = run_dir.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Data(format!("file not found: {}", path.display()))
        } else {
            CliError::Data(format!("cannot read {}: {e}", path.display()))
        }
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn cmd_report(run_dir: &Path, format: &str, with_ci: bool) -> Result<String, CliError> {
    let format: TableFormat = format.parse()?;
    let report = load_run(run_dir)?;
    let layout = if with_ci { TableLayout::WithCi } else { TableLayout::Summary };
    Ok(render_report_table(&report, format, layout)?)
}

/// A (style, shots, k) cell selector such as `structured,few,5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSelector {
    pub style: PromptStyle,
    pub shots: Shots,
    pub top_k: TopK,
}

impl std::str::FromStr for CellSelector {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [style, shots, k] = parts.as_slice() else {
            return Err(CliError::Config(format!("cell `{s}` is not STYLE,SHOTS,K")));
        };
        let bad = |e: jargon_core::prompting::PromptError| CliError::Config(e.to_string());
        let k: u32 = k
            .trim_start_matches("top")
            .parse()
            .map_err(|_| CliError::Config(format!("bad k in cell `{s}`")))?;
        Ok(CellSelector {
            style: style.parse().map_err(bad)?,
            shots: shots.parse().map_err(bad)?,
            top_k: TopK::new(k).map_err(bad)?,
        })
    }
}

fn pick_model(report: &RunReport, wanted: Option<&str>, which: &str) -> Result<String, CliError> {
    match wanted {
        Some(m) if report.models.iter().any(|x| x == m) => Ok(m.to_string()),
        Some(m) => Err(CliError::Data(format!("run {which} has no model `{m}`"))),
        None if report.models.len() == 1 => Ok(report.models[0].clone()),
        None => Err(CliError::Config(format!(
            "run {which} has several models ({}); pass --model",
            report.models.join(", ")
        ))),
    }
}

pub struct Comparison {
    pub metric: Metric,
    pub cell: CellSelector,
    pub model_a: String,
    pub model_b: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub significance: Significance,
}

impl Comparison {
    pub fn line(&self) -> String {
        let metric = match self.metric {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Mrr => "mrr",
        };
        format!(
            "{metric} {}/{}/top{}: {} {:.3} vs {} {:.3}, t = {:.4}, df = {}, p = {}",
            self.cell.style,
            self.cell.shots,
            self.cell.top_k,
            self.model_a,
            self.mean_a,
            self.model_b,
            self.mean_b,
            self.significance.t,
            self.significance.df,
            self.significance.p_display()
        )
    }
}

pub fn cmd_compare(
    run_a: &Path,
    run_b: &Path,
    metric: Metric,
    cell: CellSelector,
    model: Option<&str>,
) -> Result<Comparison, CliError> {
    let a = load_run(run_a)?;
    let b = load_run(run_b)?;
    let model_a = pick_model(&a, model, "A")?;
    let model_b = pick_model(&b, model, "B")?;
    let find = |r: &RunReport, m: &str, which: &str| {
        r.cell(m, cell.style, cell.shots, cell.top_k).cloned().ok_or_else(|| {
            CliError::Data(format!(
                "run {which} has no cell {}/{}/top{} for `{m}`",
                cell.style, cell.shots, cell.top_k
            ))
        })
    };
    let ca = find(&a, &model_a, "A")?;
    let cb = find(&b, &model_b, "B")?;
    let significance = compare_runs(&ca.fold_values(metric), &cb.fold_values(metric))?;
    Ok(Comparison {
        metric,
        cell,
        mean_a: ca.summary.get(metric).mean,
        mean_b: cb.summary.get(metric).mean,
        model_a,
        model_b,
        significance,
    })
}
