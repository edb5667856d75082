//! Synthetic datasets with known ground truth.
//!
//! Each component follows its recursion directly (not through the state-space
//! matrices): the trend and slope start at zero, the seasonal emits pure noise
//! for its first `S - 1` points, the cycle pair starts at zero, the regression
//! is `X_i β_i` per series and the noise is `N_m(0, Σ_ε)`. The target is their
//! exact sum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_psd, is_spd};
use crate::statespace::ModelSpec;
use crate::stochastics::{draw_poisson, MvnSampler, RngStream};

/// Marginal law of one iid predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase", deny_unknown_fields)]
pub enum PredictorLaw {
    Normal { mean: f64, sd: f64 },
    Poisson { rate: f64 },
}

impl PredictorLaw {
    pub fn mean(&self) -> f64 {
        match self {
            PredictorLaw::Normal { mean, .. } => *mean,
            PredictorLaw::Poisson { rate } => *rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            PredictorLaw::Normal { sd, .. } => sd * sd,
            PredictorLaw::Poisson { rate } => *rate,
        }
    }

    fn validate(&self, j: usize) -> Result<()> {
        match self {
            PredictorLaw::Normal { mean, sd } if !mean.is_finite() || !(sd.is_finite() && *sd >= 0.0) => {
                Err(Error::validation(format!("predictor {}: normal needs finite mean and sd >= 0", j + 1)))
            }
            PredictorLaw::Poisson { rate } if !(rate.is_finite() && *rate > 0.0) => {
                Err(Error::validation(format!("predictor {}: poisson rate must be > 0", j + 1)))
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut RngStream) -> Result<f64> {
        match self {
            PredictorLaw::Normal { mean, sd } => Ok(rng.normal(*mean, *sd)),
            PredictorLaw::Poisson { rate } => Ok(draw_poisson(*rate, rng)? as f64),
        }
    }
}

/// Whether all series regress on one shared draw of the predictor pool
/// (written out once per series) or on independent draws.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorPool {
    #[default]
    Shared,
    Distinct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub obs_cov: DMatrix<f64>,
    pub spec: ModelSpec,
    /// Disturbance standard deviation used by every structural component.
    pub component_sd: f64,
    /// `k × m` coefficient matrix; column `i` holds series `i`'s coefficients.
    pub coefficients: DMatrix<f64>,
    pub predictors: Vec<PredictorLaw>,
    pub pool: PredictorPool,
}

impl SimConfig {
    /// The reference two-series dataset: 505 rows, eight predictors shared by
    /// both series, every component disturbance with sd 0.5.
    pub fn replication() -> Self {
        #[rustfmt::skip]
        let coefficients = DMatrix::from_row_slice(8, 2, &[
            2.0, -1.5,
            0.0,  4.0,
            2.5,  0.0,
            0.0,  2.5,
            1.5, -1.0,
           -2.0,  0.0,
            0.0, -3.0,
            3.5,  0.5,
        ]);
        SimConfig {
            n: 505,
            obs_cov: DMatrix::from_row_slice(2, 2, &[1.1, 0.7, 0.7, 0.9]),
            spec: ModelSpec::replication(),
            component_sd: 0.5,
            coefficients,
            predictors: vec![
                PredictorLaw::Normal { mean: 5.0, sd: 25.0 },
                PredictorLaw::Poisson { rate: 10.0 },
                PredictorLaw::Poisson { rate: 5.0 },
                PredictorLaw::Normal { mean: -2.0, sd: 5.0 },
                PredictorLaw::Normal { mean: -5.0, sd: 25.0 },
                PredictorLaw::Poisson { rate: 15.0 },
                PredictorLaw::Poisson { rate: 20.0 },
                PredictorLaw::Normal { mean: 0.0, sd: 100.0 },
            ],
            pool: PredictorPool::Shared,
        }
    }

    pub fn m(&self) -> usize {
        self.spec.m()
    }

    pub fn k(&self) -> usize {
        self.predictors.len()
    }

    /// Cumulative predictor counts per series for the stacked design.
    pub fn ki(&self) -> Vec<usize> {
        (1..=self.m()).map(|i| i * self.k()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let m = self.m();
        if self.n == 0 {
            return Err(Error::validation("n must be at least 1"));
        }
        if self.obs_cov.shape() != (m, m) {
            return Err(Error::validation(format!("obs_cov must be {m}x{m}")));
        }
        check_psd(&self.obs_cov, "obs_cov")?;
        if !is_spd(&self.obs_cov) {
            return Err(Error::validation("obs_cov must be positive definite"));
        }
        if !(self.component_sd.is_finite() && self.component_sd >= 0.0) {
            return Err(Error::validation("component_sd must be finite and >= 0"));
        }
        if self.coefficients.shape() != (self.k(), m) {
            return Err(Error::validation(format!(
                "coefficients must be {}x{m} (predictors x series), got {:?}",
                self.k(),
                self.coefficients.shape()
            )));
        }
        if self.coefficients.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("coefficients must be finite"));
        }
        for (j, law) in self.predictors.iter().enumerate() {
            law.validate(j)?;
        }
        Ok(())
    }
}

/// Generated component paths, each `n × m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTruth {
    pub trend: DMatrix<f64>,
    pub slope: DMatrix<f64>,
    pub seasonal: DMatrix<f64>,
    pub cycle: DMatrix<f64>,
    pub cycle_star: DMatrix<f64>,
    pub regression: DMatrix<f64>,
    pub error: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    /// `n × m` targets.
    pub y: DMatrix<f64>,
    /// `n × (m·k)` stacked predictors; series `i` uses columns `i·k..(i+1)·k`.
    pub x: DMatrix<f64>,
    pub truth: SimTruth,
    pub config: SimConfig,
}

impl SimOutput {
    pub fn ki(&self) -> Vec<usize> {
        self.config.ki()
    }

    /// Predictor block of series `i`, `n × k`.
    pub fn predictors_for(&self, i: usize) -> DMatrix<f64> {
        let k = self.config.k();
        self.x.columns(i * k, k).into_owned()
    }
}

pub fn simulate_dataset(cfg: &SimConfig, rng: &mut RngStream) -> Result<SimOutput> {
    cfg.validate()?;
    let (n, m, k) = (cfg.n, cfg.m(), cfg.k());
    let sd = cfg.component_sd;

    let mut trend = DMatrix::zeros(n, m);
    let mut slope = DMatrix::zeros(n, m);
    for (j, s) in cfg.spec.series.iter().enumerate() {
        if !s.trend {
            continue;
        }
        for i in 1..n {
            trend[(i, j)] = trend[(i - 1, j)] + slope[(i - 1, j)] + rng.normal(0.0, sd);
            if s.has_slope() {
                let d = s.long_run_slope;
                slope[(i, j)] = d + s.learning_rate * (slope[(i - 1, j)] - d) + rng.normal(0.0, sd);
            }
        }
    }

    let mut seasonal = DMatrix::zeros(n, m);
    for (j, s) in cfg.spec.series.iter().enumerate() {
        if !s.has_seasonal() {
            continue;
        }
        let period = s.seasons;
        for i in 0..n {
            // warm-up: the first S - 1 points are pure noise
            if i + 1 < period {
                seasonal[(i, j)] = rng.normal(0.0, sd);
            } else {
                let past: f64 = (i + 1 - period..i).map(|l| seasonal[(l, j)]).sum();
                seasonal[(i, j)] = -past + rng.normal(0.0, sd);
            }
        }
    }

    let mut cycle = DMatrix::zeros(n, m);
    let mut cycle_star = DMatrix::zeros(n, m);
    for (j, s) in cfg.spec.series.iter().enumerate() {
        if !s.has_cycle() {
            continue;
        }
        let (sin, cos) = s.frequency.sin_cos();
        let d = s.damping;
        for i in 1..n {
            let (w, ws) = (cycle[(i - 1, j)], cycle_star[(i - 1, j)]);
            cycle[(i, j)] = d * cos * w + d * sin * ws + rng.normal(0.0, sd);
            cycle_star[(i, j)] = -d * sin * w + d * cos * ws + rng.normal(0.0, sd);
        }
    }

    let draw_pool = |rng: &mut RngStream| -> Result<DMatrix<f64>> {
        let mut pool = DMatrix::zeros(n, k);
        for (j, law) in cfg.predictors.iter().enumerate() {
            for t in 0..n {
                pool[(t, j)] = law.draw(rng)?;
            }
        }
        Ok(pool)
    };
    let mut x = DMatrix::zeros(n, m * k);
    match cfg.pool {
        PredictorPool::Shared => {
            let pool = draw_pool(rng)?;
            for i in 0..m {
                x.columns_mut(i * k, k).copy_from(&pool);
            }
        }
        PredictorPool::Distinct => {
            for i in 0..m {
                let pool = draw_pool(rng)?;
                x.columns_mut(i * k, k).copy_from(&pool);
            }
        }
    }

    let mut regression = DMatrix::zeros(n, m);
    for i in 0..m {
        for t in 0..n {
            let mut acc = 0.0;
            for j in 0..k {
                acc += x[(t, i * k + j)] * cfg.coefficients[(j, i)];
            }
            regression[(t, i)] = acc;
        }
    }

    let noise = MvnSampler::new(DVector::zeros(m), &cfg.obs_cov)?;
    let mut error = DMatrix::zeros(n, m);
    for t in 0..n {
        error.set_row(t, &noise.sample(rng).transpose());
    }

    let y = &trend + &seasonal + &cycle + &regression + &error;
    Ok(SimOutput {
        y,
        x,
        truth: SimTruth { trend, slope, seasonal, cycle, cycle_star, regression, error },
        config: cfg.clone(),
    })
}

/// Implied seasonal disturbances `τ_{t+1} + Σ_{k=0}^{S-2} τ_{t-k}` for every
/// `t` with a full window (`t = S-2, …, len-2`).
pub fn seasonal_recursion_check(path: &[f64], seasons: usize) -> Result<Vec<f64>> {
    if seasons < 2 {
        return Err(Error::validation(format!("seasons must be >= 2 (got {seasons})")));
    }
    if path.len() <= seasons {
        return Err(Error::validation(format!(
            "path of length {} is too short for {seasons} seasons",
            path.len()
        )));
    }
    Ok((seasons - 2..path.len() - 1)
        .map(|t| path[t + 1] + path[t + 2 - seasons..=t].iter().sum::<f64>())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replication_shape() {
        let cfg = SimConfig::replication();
        let out = simulate_dataset(&cfg, &mut RngStream::new(100, 0)).unwrap();
        assert_eq!(out.y.shape(), (505, 2));
        assert_eq!(out.x.shape(), (505, 16));
        assert_eq!(out.ki(), vec![8, 16]);
        assert_eq!(out.x.columns(0, 8), out.x.columns(8, 8));
        // series 2 has no seasonal, series 1 has no cycle
        assert!(out.truth.seasonal.column(1).iter().all(|v| *v == 0.0));
        assert!(out.truth.cycle.column(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn additivity_is_exact() {
        let out = simulate_dataset(&SimConfig::replication(), &mut RngStream::new(1, 0)).unwrap();
        let t = &out.truth;
        for r in 0..out.y.nrows() {
            for c in 0..2 {
                let sum = t.trend[(r, c)] + t.seasonal[(r, c)] + t.cycle[(r, c)] + t.regression[(r, c)] + t.error[(r, c)];
                assert_eq!(sum, out.y[(r, c)]);
            }
        }
    }

    #[test]
    fn one_row_dataset() {
        let mut cfg = SimConfig::replication();
        cfg.n = 1;
        let out = simulate_dataset(&cfg, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(out.y.nrows(), 1);
        assert_eq!(out.truth.trend[(0, 0)], 0.0);
    }

    #[test]
    fn seasonal_check_hand_values() {
        let path = [1.0, -1.0, 2.0, -2.0, 3.0];
        let res = seasonal_recursion_check(&path, 2).unwrap();
        assert_eq!(res, vec![0.0, 1.0, 0.0, 1.0]);
        assert!(seasonal_recursion_check(&path, 1).is_err());
        assert!(seasonal_recursion_check(&path[..2], 2).is_err());
    }

    #[test]
    fn noiseless_seasonal_residuals_vanish() {
        let path: Vec<f64> = (0..40).map(|t| [3.0, -1.0, -0.5, -1.5][t % 4]).collect();
        let res = seasonal_recursion_check(&path, 4).unwrap();
        assert!(res.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn simulated_seasonal_follows_its_recursion() {
        let mut cfg = SimConfig::replication();
        cfg.component_sd = 0.0;
        let out = simulate_dataset(&cfg, &mut RngStream::new(7, 0)).unwrap();
        let path: Vec<f64> = out.truth.seasonal.column(0).iter().copied().collect();
        // zero disturbances: the warm-up is zero too, so the path is identically zero
        assert!(path.iter().all(|v| *v == 0.0));

        let out = simulate_dataset(&SimConfig::replication(), &mut RngStream::new(7, 0)).unwrap();
        let path: Vec<f64> = out.truth.seasonal.column(0).iter().copied().collect();
        let res = seasonal_recursion_check(&path, 12).unwrap();
        // from the first full window on, every residual is exactly one disturbance
        let tail = &res[1..];
        let sd = (tail.iter().map(|r| r * r).sum::<f64>() / tail.len() as f64).sqrt();
        assert!((sd - 0.5).abs() < 0.05, "residual sd {sd}");
        // and any 12 consecutive values sum to a single disturbance, not a growing pattern
        let window: f64 = path[400..412].iter().sum();
        assert!(window.abs() < 3.0, "window sum {window}");
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = SimConfig::replication();
        cfg.coefficients = DMatrix::zeros(7, 2);
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::replication();
        cfg.obs_cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::replication();
        cfg.spec.series[1].frequency = 4.0;
        assert!(cfg.validate().is_err());
    }
}
