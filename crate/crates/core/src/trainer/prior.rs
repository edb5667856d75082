use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spike-and-slab and variance priors.
///
/// * spike: `γ_j ~ Bernoulli(pii_j)` independently,
/// * slab: `β_γ | γ ~ N(b_γ, ((κ/n) X_γᵀ X_γ)⁻¹)`,
/// * `Σ_ε ~ IW(v0, (v0 - m - 1)(1 - R²) Σ_y)`,
/// * each component variance `~ IG(v/2, ss/2)` (shape, scale).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    /// Cumulative predictor counts per series, e.g. `[8, 16]`.
    pub ki: Vec<usize>,
    pub pii: Vec<f64>,
    /// Prior coefficient means; all zero when empty.
    #[serde(default)]
    pub b: Vec<f64>,
    pub kappa: f64,
    pub v0: f64,
    pub r2: f64,
    pub v: f64,
    pub ss: f64,
    /// Replaces the sample covariance of the targets in the IW scale.
    #[serde(default)]
    pub sigma_y: Option<DMatrix<f64>>,
}

impl PriorConfig {
    pub const DEFAULT_KAPPA: f64 = 0.01;
    pub const DEFAULT_R2: f64 = 0.8;
    pub const DEFAULT_V: f64 = 0.01;
    pub const DEFAULT_SS: f64 = 0.01;

    /// Defaults for everything except the predictor layout, inclusion
    /// probabilities and IW degrees of freedom.
    pub fn new(ki: Vec<usize>, pii: Vec<f64>, v0: f64) -> Self {
        PriorConfig {
            ki,
            pii,
            b: Vec::new(),
            kappa: Self::DEFAULT_KAPPA,
            v0,
            r2: Self::DEFAULT_R2,
            v: Self::DEFAULT_V,
            ss: Self::DEFAULT_SS,
            sigma_y: None,
        }
    }

    /// Same inclusion probability for every stacked predictor.
    pub fn uniform(ki: Vec<usize>, pii: f64, v0: f64) -> Self {
        let k = ki.last().copied().unwrap_or(0);
        PriorConfig::new(ki, vec![pii; k], v0)
    }

    pub fn n_predictors(&self) -> usize {
        self.ki.last().copied().unwrap_or(0)
    }

    /// Prior mean for predictor `j`.
    pub fn b_at(&self, j: usize) -> f64 {
        self.b.get(j).copied().unwrap_or(0.0)
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.ki.len() != m {
            return Err(Error::validation(format!(
                "ki has {} entries but there are {m} target series",
                self.ki.len()
            )));
        }
        let mut prev = 0;
        for (i, &k) in self.ki.iter().enumerate() {
            if k <= prev {
                return Err(Error::validation(format!(
                    "ki must be strictly increasing (entry {} = {k})",
                    i + 1
                )));
            }
            prev = k;
        }
        let k = self.n_predictors();
        if self.pii.len() != k {
            return Err(Error::validation(format!("pii has {} entries, expected {k}", self.pii.len())));
        }
        if let Some((j, p)) = self.pii.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(Error::validation(format!("pii entry {} = {p} must lie in [0, 1]", j + 1)));
        }
        if !self.b.is_empty() && self.b.len() != k {
            return Err(Error::validation(format!("b has {} entries, expected {k}", self.b.len())));
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("b must be finite"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::validation(format!("kappa = {} must be positive", self.kappa)));
        }
        if !(self.v0 > m as f64 + 1.0) || !self.v0.is_finite() {
            return Err(Error::validation(format!(
                "v0 = {} must exceed m + 1 = {}",
                self.v0,
                m + 1
            )));
        }
        if !(self.r2 > 0.0 && self.r2 < 1.0) {
            return Err(Error::validation(format!("R2 = {} must lie in (0, 1)", self.r2)));
        }
        if !(self.v > 0.0 && self.v.is_finite()) || !(self.ss > 0.0 && self.ss.is_finite()) {
            return Err(Error::validation("v and ss must be positive"));
        }
        if let Some(s) = &self.sigma_y {
            if s.shape() != (m, m) {
                return Err(Error::validation(format!("sigma_y must be {m}x{m}")));
            }
            if (s - s.transpose()).amax() > 1e-12 * s.amax().max(1.0) || s.clone().cholesky().is_none() {
                return Err(Error::validation("sigma_y must be symmetric positive definite"));
            }
        }
        Ok(())
    }
}
