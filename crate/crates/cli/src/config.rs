//! Run configuration. A TOML file of flat keys; command-line flags override
//! the file and the file overrides built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable consulted for the seed when neither flag nor file sets one.
pub const SEED_ENV: &str = "AGENDA_SEED";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,

    pub lenient: Option<bool>,
    pub speaker_patterns: Option<PathBuf>,

    pub min_term_count: Option<u64>,
    pub stopwords: Option<PathBuf>,
    pub multiword: Option<PathBuf>,
    pub substitutions: Option<PathBuf>,

    pub model: Option<String>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub iters: Option<usize>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub chains: Option<usize>,

    pub ks: Option<Vec<usize>>,
    pub heldout_fraction: Option<f64>,
    pub top_words: Option<usize>,

    pub scheme: Option<PathBuf>,
    pub governments: Option<PathBuf>,
    pub elections: Option<PathBuf>,

    pub event_iters: Option<usize>,
    pub event_burn_in: Option<usize>,
    pub event_thin: Option<usize>,
    pub event_chains: Option<usize>,
    pub prior_sd_alpha: Option<f64>,
    pub prior_sd_beta: Option<f64>,
    pub prior_sd_mu: Option<f64>,
    pub sigma_upper: Option<f64>,

    pub credibility: Option<f64>,
    pub threshold: Option<f64>,
}

impl FileConfig {
    /// Reads a config file. Relative paths inside it are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: FileConfig = toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.speaker_patterns,
            &mut cfg.stopwords,
            &mut cfg.multiword,
            &mut cfg.substitutions,
            &mut cfg.scheme,
            &mut cfg.governments,
            &mut cfg.elections,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
    }
}

/// First of flag, file value and default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Seed from flag, file, the `AGENDA_SEED` variable, then the built-in default.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(agenda_core::rng::DEFAULT_SEED),
    }
}
