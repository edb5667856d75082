//! Run configuration: one TOML file with `[simulate]`, `[model]`, `[prior]`,
//! `[train]` and `[forecast]` sections. Every field has a default; the
//! defaults describe the reference two-series dataset.
//!
//! Relative paths inside a config file are taken relative to the file's own
//! directory. The resolved config written next to every run's outputs has
//! all defaults filled in and all paths made absolute, so feeding it back in
//! reproduces the run.

use std::path::{Path, PathBuf};

use mbsts::simulator::{PredictorLaw, PredictorPool, SimConfig};
use mbsts::statespace::{ModelSpec, SeriesSpec};
use mbsts::trainer::{PriorConfig, TrainOptions};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// File name of the resolved-config echo written by `command`.
pub fn resolved_name(command: &str) -> String {
    format!("{command}.resolved.toml")
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub simulate: SimulateSection,
    pub model: ModelSection,
    pub prior: PriorSection,
    pub train: TrainSection,
    pub forecast: ForecastSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub seed: u64,
    pub n: usize,
    pub component_sd: f64,
    /// Rows of the observation covariance.
    pub obs_cov: Vec<Vec<f64>>,
    /// One row per predictor, one column per series.
    pub coefficients: Vec<Vec<f64>>,
    pub predictors: Vec<PredictorLaw>,
    pub pool: PredictorPool,
}

impl Default for SimulateSection {
    fn default() -> Self {
        let reference = SimConfig::replication();
        SimulateSection {
            seed: 100,
            n: reference.n,
            component_sd: reference.component_sd,
            obs_cov: rows(&reference.obs_cov),
            coefficients: rows(&reference.coefficients),
            predictors: reference.predictors,
            pool: reference.pool,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub series: Vec<SeriesSpec>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { series: ModelSpec::replication().series }
    }
}

/// Spike probabilities: one value for every predictor or one per predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Pii {
    All(f64),
    Each(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    /// Cumulative predictor counts per series; defaults to equal blocks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ki: Option<Vec<usize>>,
    pub pii: Pii,
    /// Whitespace- or comma-separated spike probabilities, `#` comments
    /// allowed. Overrides `pii`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pii_file: Option<PathBuf>,
    /// Slab prior means; empty means all zero.
    pub b: Vec<f64>,
    pub kappa: f64,
    /// Inverse-Wishart degrees of freedom; defaults to `m + 3`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    pub r2: f64,
    pub v: f64,
    pub ss: f64,
    /// Target covariance used to scale the observation-covariance prior;
    /// defaults to the sample covariance of the training targets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_y: Option<Vec<Vec<f64>>>,
}

impl Default for PriorSection {
    fn default() -> Self {
        PriorSection {
            ki: None,
            pii: Pii::All(0.5),
            pii_file: None,
            b: Vec::new(),
            kappa: PriorConfig::DEFAULT_KAPPA,
            v0: None,
            r2: PriorConfig::DEFAULT_R2,
            v: PriorConfig::DEFAULT_V,
            ss: PriorConfig::DEFAULT_SS,
            sigma_y: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub seed: u64,
    pub mc: usize,
    pub burn: usize,
    /// Leading rows used for training; the rest are written out as a holdout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_rows: Option<usize>,
    pub keep_states: bool,
    pub chains: usize,
    /// Inclusion-probability threshold for the summaries.
    pub threshold: f64,
    /// Dataset CSV: `m` target columns followed by the stacked predictors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let opts = TrainOptions::default();
        TrainSection {
            seed: 1,
            mc: opts.mc,
            burn: opts.burn,
            train_rows: None,
            keep_states: true,
            chains: 1,
            threshold: 0.8,
            data: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    pub seed: u64,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<PathBuf>,
    /// Predictors (`K` columns) or a dataset in training layout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub newdata: Option<PathBuf>,
    /// Targets (`m` columns) or a dataset in training layout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
}

impl Default for ForecastSection {
    fn default() -> Self {
        ForecastSection { seed: 1, steps: 5, draws: None, newdata: None, truth: None }
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A config together with the text it was parsed from, for error anchoring.
#[derive(Clone, Debug, Default)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub source: Option<(PathBuf, String)>,
}

impl LoadedConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(LoadedConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| {
            let line = e.span().map(|s| line_of(&text, s.start));
            CliError::Validation(anchor(path, line, e.message()))
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut config.prior.pii_file);
        fix(&mut config.train.data);
        fix(&mut config.forecast.draws);
        fix(&mut config.forecast.newdata);
        fix(&mut config.forecast.truth);
        Ok(LoadedConfig { config, source: Some((path.to_path_buf(), text)) })
    }

    /// Validation error pointing at the first of `keys` found inside
    /// `section`, where `section` is a table header such as `train` or an
    /// array-of-tables entry such as `model.series` with `index`.
    pub fn invalid(&self, section: &str, index: Option<usize>, keys: &[&str], msg: impl AsRef<str>) -> CliError {
        match &self.source {
            Some((path, text)) => {
                let line = locate(text, section, index, keys);
                CliError::Validation(anchor(path, line, msg.as_ref()))
            }
            None => CliError::Validation(msg.as_ref().to_string()),
        }
    }
}

fn anchor(path: &Path, line: Option<usize>, msg: &str) -> String {
    match line {
        Some(l) => format!("{}:{l}: {msg}", path.display()),
        None => format!("{}: {msg}", path.display()),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `key = ...` (any of `keys`) within a section, falling
/// back to the section header. `index` selects among repeated
/// `[[section]]` tables.
fn locate(text: &str, section: &str, index: Option<usize>, keys: &[&str]) -> Option<usize> {
    let single = format!("[{section}]");
    let repeated = format!("[[{section}]]");
    let mut in_section = false;
    let mut header_line = None;
    let mut seen = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with('[') {
            in_section = match index {
                None => line == single,
                Some(want) => {
                    if line == repeated {
                        seen += 1;
                        seen == want + 1
                    } else {
                        false
                    }
                }
            };
            if in_section {
                header_line = Some(i + 1);
            }
            continue;
        }
        if in_section && line.contains('=') {
            let lhs = line.split('=').next().unwrap_or("").trim();
            if keys.contains(&lhs) {
                return Some(i + 1);
            }
        }
    }
    header_line
}

impl RunConfig {
    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec::new(self.model.series.clone())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises to TOML")
    }

    pub fn sim_config(&self) -> Result<SimConfig, String> {
        let s = &self.simulate;
        Ok(SimConfig {
            n: s.n,
            obs_cov: matrix(&s.obs_cov, "obs_cov")?,
            spec: self.model_spec(),
            component_sd: s.component_sd,
            coefficients: matrix(&s.coefficients, "coefficients")?,
            predictors: s.predictors.clone(),
            pool: s.pool,
        })
    }

    /// `ki` as given or equal blocks of `k_total / m` predictors per series.
    pub fn ki(&self, k_total: usize) -> Result<Vec<usize>, String> {
        let m = self.model.series.len();
        if let Some(ki) = &self.prior.ki {
            return Ok(ki.clone());
        }
        if m == 0 || !k_total.is_multiple_of(m) {
            return Err(format!(
                "ki not given and {k_total} predictor columns do not split evenly over {m} series"
            ));
        }
        Ok((1..=m).map(|i| i * k_total / m).collect())
    }

    pub fn v0(&self) -> f64 {
        self.prior.v0.unwrap_or(self.model.series.len() as f64 + 3.0)
    }

    /// Prior for `k_total` predictors with `pii` already expanded.
    pub fn prior_config(&self, ki: Vec<usize>, pii: Vec<f64>) -> Result<PriorConfig, String> {
        let p = &self.prior;
        let sigma_y = p.sigma_y.as_deref().map(|rows| matrix(rows, "sigma_y")).transpose()?;
        Ok(PriorConfig {
            ki,
            pii,
            b: p.b.clone(),
            kappa: p.kappa,
            v0: self.v0(),
            r2: p.r2,
            v: p.v,
            ss: p.ss,
            sigma_y,
        })
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, String> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(format!("{what}: row {} has {} entries, expected {ncols}", bad + 1, rows[bad].len()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Reads spike probabilities from a text file. Errors name the file and line.
pub fn read_pii_file(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for field in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()) {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Validation(format!("{}:{}: '{field}' is not a number", path.display(), i + 1))
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Validation(format!(
                    "{}:{}: pii entry {} = {v} must lie in [0, 1]",
                    path.display(),
                    i + 1,
                    out.len() + 1
                )));
            }
            out.push(v);
        }
    }
    Ok(out)
}
