//! Model configuration: the TOML schema the `mcd` binary reads.
//!
//! A config file names the response columns and how they are coded, the
//! category/intercept design terms, the predictor columns with their encoding
//! directives, and optional fitting and bootstrap settings:
//!
//! ```toml
//! mode = "profile"
//!
//! [responses]
//! columns = ["alcohol", "cigarettes", "marijuana"]
//! high = "yes"
//! low = "no"
//!
//! [model]
//! s = 2
//! z = ["1", "2", "3"]
//! w = ["1", "2", "3", "1:2", "1:3", "2:3"]
//!
//! [[predictors]]
//! column = "gender"
//! encoding = "passthrough"
//! ```
//!
//! Everything outside `mode`, `[responses]`, and `[model]` has defaults.
//! `load` only checks what serde can see (types, unknown keys, mode-specific
//! required fields); cross-field validation against the data happens in the
//! ingest step, which is where the column names meet the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mcd::fitter::FitOptions;
use mcd::{Encoding, UpdateScheme};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Several binary response columns; categories are their joint profiles.
    Profile,
    /// One categorical response column; categories are its distinct labels.
    Category,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Responses {
    /// Profile mode: the binary response columns, in variable order.
    pub columns: Option<Vec<String>>,
    /// Profile mode: the label that counts as the high level.
    pub high: Option<String>,
    /// Profile mode: the label that counts as the low level.
    pub low: Option<String>,
    /// Category mode: the single response column.
    pub column: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    /// Rank of the predictor-by-category interaction.
    pub s: usize,
    /// Category design terms (profile mode), e.g. `["1", "2", "1:2"]`.
    pub z: Option<Vec<String>>,
    /// Intercept design terms (profile mode); must contain every `z` term.
    pub w: Option<Vec<String>>,
    /// Category mode: CSV file (no header, K rows) holding Z.
    pub z_matrix: Option<PathBuf>,
    /// Category mode: CSV file (no header, K rows) holding W.
    pub w_matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Predictor {
    pub column: String,
    /// `passthrough` (default), `center`, or `standardize`.
    pub encoding: Option<String>,
    /// Stepwise selection must keep this column.
    #[serde(default)]
    pub forced: bool,
}

impl Predictor {
    pub fn encoding(&self) -> Result<Encoding> {
        match &self.encoding {
            None => Ok(Encoding::Passthrough),
            Some(text) => text
                .parse()
                .with_context(|| format!("predictor {:?}", self.column)),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    /// `joint-gsvd` (default), `alternating`, or `dimension-wise`.
    pub scheme: Option<String>,
}

impl FitSection {
    pub fn to_options(&self) -> Result<FitOptions> {
        let mut opts = FitOptions::default();
        if let Some(m) = self.max_iterations {
            opts.max_iterations = m;
        }
        if let Some(t) = self.tolerance {
            opts.tolerance = t;
        }
        if let Some(s) = &self.scheme {
            opts.scheme = s.parse::<UpdateScheme>().context("[fit] scheme")?;
        }
        Ok(opts)
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSection {
    pub replicates: Option<usize>,
    pub level: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub mode: Mode,
    pub responses: Responses,
    pub model: Model,
    #[serde(default)]
    pub predictors: Vec<Predictor>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub bootstrap: BootstrapSection,
}

impl Config {
    /// Profile mode: the response column names, in variable order.
    pub fn response_columns(&self) -> &[String] {
        self.responses.columns.as_deref().unwrap_or(&[])
    }
}

pub fn load(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let config: Config = toml::from_str(&text)
        .with_context(|| format!("cannot parse config file {}", path.display()))?;
    validate(&config)?;
    Ok(config)
}

fn validate(config: &Config) -> Result<()> {
    match config.mode {
        Mode::Profile => {
            let columns = config.responses.columns.as_deref().unwrap_or(&[]);
            if columns.is_empty() {
                bail!("profile mode needs [responses] columns = [...] with at least one column");
            }
            if config.responses.high.is_none() || config.responses.low.is_none() {
                bail!("profile mode needs [responses] high = \"...\" and low = \"...\"");
            }
            if config.responses.high == config.responses.low {
                bail!("[responses] high and low must be two different labels");
            }
            if config.responses.column.is_some() {
                bail!("[responses] column is for category mode; profile mode uses columns");
            }
            if config.model.z.is_none() || config.model.w.is_none() {
                bail!("profile mode needs [model] z = [...] and w = [...] term lists");
            }
            if config.model.z_matrix.is_some() || config.model.w_matrix.is_some() {
                bail!("[model] z_matrix/w_matrix are for category mode; profile mode uses z/w terms");
            }
        }
        Mode::Category => {
            if config.responses.column.is_none() {
                bail!("category mode needs [responses] column = \"...\"");
            }
            if config.responses.columns.is_some()
                || config.responses.high.is_some()
                || config.responses.low.is_some()
            {
                bail!("[responses] columns/high/low are for profile mode; category mode uses column");
            }
            if config.model.z.is_some() || config.model.w.is_some() {
                bail!("[model] z/w terms are for profile mode; category mode uses z_matrix/w_matrix or the default indicator coding");
            }
            if config.model.z_matrix.is_some() != config.model.w_matrix.is_some() {
                bail!("[model] z_matrix and w_matrix must be given together");
            }
        }
    }

    let mut seen: Vec<&str> = Vec::new();
    for predictor in &config.predictors {
        if seen.contains(&predictor.column.as_str()) {
            bail!("predictor column {:?} is listed twice", predictor.column);
        }
        seen.push(&predictor.column);
        predictor.encoding()?;
    }
    config.fit.to_options()?;
    if let Some(level) = config.bootstrap.level {
        if !(level > 0.0 && level < 1.0) {
            bail!("[bootstrap] level must be strictly between 0 and 1, got {level}");
        }
    }
    Ok(())
}
