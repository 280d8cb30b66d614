//! Run configuration files (TOML). Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use jargon_core::augmentation::TrainingOverrides;
use jargon_core::evaluation::EvalGrid;
use jargon_core::prompting::{PromptStyle, Shots, TopK};
use jargon_gateway::ProviderConfig;
use serde::Deserialize;

use crate::error::CliError;

fn default_folds() -> usize {
    5
}

fn default_parallelism() -> usize {
    4
}

fn default_styles() -> Vec<String> {
    vec!["general".into(), "structured".into()]
}

fn default_shots() -> Vec<String> {
    vec!["zero".into(), "few".into()]
}

fn default_top_k() -> Vec<u32> {
    vec![3, 5, 10]
}

fn default_sizes() -> Vec<usize> {
    jargon_core::augmentation::DEFAULT_SIZES.to_vec()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    pub cache: PathBuf,
    pub fold_seed: u64,
    pub sampling_seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_styles")]
    pub styles: Vec<String>,
    #[serde(default = "default_shots")]
    pub shots: Vec<String>,
    #[serde(default = "default_top_k")]
    pub top_k: Vec<u32>,
    pub providers: Vec<ProviderConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    pub corpus: PathBuf,
    pub pool: PathBuf,
    pub output_dir: PathBuf,
    pub cache: PathBuf,
    pub sampling_seed: u64,
    pub exemplars: Vec<String>,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    pub teacher: ProviderConfig,
    #[serde(default)]
    pub training_overrides: TrainingOverrides,
}

/// A parsed config together with the raw bytes it came from.
pub struct Loaded<T> {
    pub config: T,
    pub raw: Vec<u8>,
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Loaded<T>, CliError> {
    let raw = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let config = toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(Loaded { config, raw })
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn check_providers(providers: &[ProviderConfig]) -> Result<(), CliError> {
    for p in providers {
        p.validate()?;
    }
    let mut names: Vec<&str> = providers.iter().map(|p| p.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Config("provider names must be unique".into()));
    }
    Ok(())
}

impl EvaluateConfig {
    pub fn load(path: &Path) -> Result<Loaded<Self>, CliError> {
        let mut loaded: Loaded<Self> = read_config(path)?;
        let base = base_dir(path);
        let c = &mut loaded.config;
        resolve(&base, &mut c.corpus);
        resolve(&base, &mut c.output_dir);
        resolve(&base, &mut c.cache);
        c.validate()?;
        Ok(loaded)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.providers.is_empty() {
            return Err(CliError::Config("at least one [[providers]] entry is required".into()));
        }
        check_providers(&self.providers)?;
        if self.folds < 2 {
            return Err(CliError::Config("folds must be at least 2".into()));
        }
        if self.parallelism < 1 {
            return Err(CliError::Config("parallelism must be at least 1".into()));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<EvalGrid, CliError> {
        let bad = |e: jargon_core::prompting::PromptError| CliError::Config(e.to_string());
        let styles = self
            .styles
            .iter()
            .map(|s| s.parse::<PromptStyle>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(bad)?;
        let shots = self
            .shots
            .iter()
            .map(|s| s.parse::<Shots>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(bad)?;
        let top_k = self
            .top_k
            .iter()
            .map(|&k| TopK::new(k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(bad)?;
        if styles.is_empty() || shots.is_empty() || top_k.is_empty() {
            return Err(CliError::Config("styles, shots and top_k must be non-empty".into()));
        }
        Ok(EvalGrid { styles, shots, top_k })
    }
}

impl AugmentConfig {
    pub fn load(path: &Path) -> Result<Loaded<Self>, CliError> {
        let mut loaded: Loaded<Self> = read_config(path)?;
        let base = base_dir(path);
        let c = &mut loaded.config;
        resolve(&base, &mut c.corpus);
        resolve(&base, &mut c.pool);
        resolve(&base, &mut c.output_dir);
        resolve(&base, &mut c.cache);
        check_providers(std::slice::from_ref(&c.teacher))?;
        if c.parallelism < 1 {
            return Err(CliError::Config("parallelism must be at least 1".into()));
        }
        Ok(loaded)
    }
}
