use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Component switches and fixed hyperparameters for one target series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    /// Include the local level (`mu`).
    #[serde(alias = "mu", default)]
    pub trend: bool,
    /// Slope learning rate ρ in [0, 1]; zero means no slope state.
    #[serde(alias = "rho", default)]
    pub learning_rate: f64,
    /// Long-run slope D that the slope reverts to.
    #[serde(alias = "D", default)]
    pub long_run_slope: f64,
    /// Number of seasons S; zero disables the seasonal.
    #[serde(alias = "S", default)]
    pub seasons: usize,
    /// Cycle damping ϱ in [0, 1); zero disables the cycle.
    #[serde(alias = "vrho", default)]
    pub damping: f64,
    /// Cycle frequency λ in (0, π), used when damping > 0.
    #[serde(alias = "lambda", default)]
    pub frequency: f64,
}

impl SeriesSpec {
    /// A series with no structural components (regression and noise only).
    pub fn empty() -> Self {
        SeriesSpec {
            trend: false,
            learning_rate: 0.0,
            long_run_slope: 0.0,
            seasons: 0,
            damping: 0.0,
            frequency: 0.0,
        }
    }

    pub fn has_slope(&self) -> bool {
        self.learning_rate != 0.0
    }

    pub fn has_seasonal(&self) -> bool {
        self.seasons != 0
    }

    pub fn has_cycle(&self) -> bool {
        self.damping != 0.0
    }

    pub fn n_states(&self) -> usize {
        self.trend as usize
            + self.has_slope() as usize
            + self.seasons.saturating_sub(1)
            + 2 * self.has_cycle() as usize
    }

    pub fn n_errors(&self) -> usize {
        self.trend as usize
            + self.has_slope() as usize
            + self.has_seasonal() as usize
            + 2 * self.has_cycle() as usize
    }

    fn validate(&self, i: usize) -> Result<()> {
        let who = format!("series {}", i + 1);
        let rho = self.learning_rate;
        if !rho.is_finite() || !(0.0..=1.0).contains(&rho) {
            return Err(Error::validation(format!(
                "{who}: learning_rate (rho) = {rho} must lie in [0, 1]"
            )));
        }
        if rho != 0.0 && !self.trend {
            return Err(Error::validation(format!(
                "{who}: learning_rate (rho) = {rho} requires trend (mu) to be enabled"
            )));
        }
        if !self.long_run_slope.is_finite() {
            return Err(Error::validation(format!("{who}: long_run_slope (D) must be finite")));
        }
        if self.seasons == 1 {
            return Err(Error::validation(format!(
                "{who}: seasons (S) = 1 is invalid; use 0 for none or at least 2"
            )));
        }
        let vrho = self.damping;
        if !vrho.is_finite() || !(0.0..1.0).contains(&vrho) {
            return Err(Error::validation(format!(
                "{who}: damping (vrho) = {vrho} must lie in [0, 1)"
            )));
        }
        if vrho > 0.0 {
            let lam = self.frequency;
            if !lam.is_finite() || lam <= 0.0 || lam >= PI {
                return Err(Error::validation(format!(
                    "{who}: frequency (lambda) = {lam} must lie in (0, pi) when damping > 0"
                )));
            }
        }
        Ok(())
    }
}

/// Per-series component configuration for all `m` target series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub series: Vec<SeriesSpec>,
}

/// A component signal that enters the observation equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Trend,
    Seasonal,
    Cycle,
}

impl Component {
    pub fn name(&self) -> &'static str {
        match self {
            Component::Trend => "trend",
            Component::Seasonal => "seasonal",
            Component::Cycle => "cycle",
        }
    }
}

/// State and disturbance indices owned by one series.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeriesBlock {
    pub level: Option<usize>,
    pub slope: Option<usize>,
    pub seasonal: Option<Range<usize>>,
    /// First state of the cycle pair; the starred state follows.
    pub cycle: Option<usize>,
    pub level_error: Option<usize>,
    pub slope_error: Option<usize>,
    pub seasonal_error: Option<usize>,
    /// First disturbance of the cycle pair.
    pub cycle_error: Option<usize>,
}

/// Series-major layout: level, slope, seasonal dummies, cycle, cycle-star.
#[derive(Clone, Debug, PartialEq)]
pub struct StateLayout {
    pub blocks: Vec<SeriesBlock>,
    pub n_states: usize,
    pub n_errors: usize,
}

impl StateLayout {
    /// Observed component signals in storage order: for each series, trend,
    /// seasonal, cycle (those present). Each entry is `(series, component, state)`.
    pub fn signals(&self) -> Vec<(usize, Component, usize)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            if let Some(s) = b.level {
                out.push((i, Component::Trend, s));
            }
            if let Some(r) = &b.seasonal {
                out.push((i, Component::Seasonal, r.start));
            }
            if let Some(s) = b.cycle {
                out.push((i, Component::Cycle, s));
            }
        }
        out
    }
}

impl ModelSpec {
    pub fn new(series: Vec<SeriesSpec>) -> Self {
        ModelSpec { series }
    }

    /// `m` series with no structural components.
    pub fn regression_only(m: usize) -> Self {
        ModelSpec { series: vec![SeriesSpec::empty(); m] }
    }

    /// The two-series configuration of the reference simulated dataset.
    pub fn replication() -> Self {
        ModelSpec {
            series: vec![
                SeriesSpec {
                    trend: true,
                    learning_rate: 0.6,
                    long_run_slope: 1.0,
                    seasons: 12,
                    damping: 0.0,
                    frequency: 0.0,
                },
                SeriesSpec {
                    trend: true,
                    learning_rate: 0.8,
                    long_run_slope: 0.5,
                    seasons: 0,
                    damping: 0.99,
                    frequency: PI / 50.0,
                },
            ],
        }
    }

    pub fn m(&self) -> usize {
        self.series.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.series.is_empty() {
            return Err(Error::validation("model must contain at least one series"));
        }
        for (i, s) in self.series.iter().enumerate() {
            s.validate(i)?;
        }
        Ok(())
    }

    /// Total number of latent states `p`.
    pub fn n_states(&self) -> usize {
        self.series.iter().map(SeriesSpec::n_states).sum()
    }

    /// Number of error-bearing states `r`.
    pub fn n_errors(&self) -> usize {
        self.series.iter().map(SeriesSpec::n_errors).sum()
    }

    pub fn layout(&self) -> StateLayout {
        let mut blocks = Vec::with_capacity(self.series.len());
        let mut s = 0;
        let mut e = 0;
        for spec in &self.series {
            let mut b = SeriesBlock::default();
            if spec.trend {
                b.level = Some(s);
                b.level_error = Some(e);
                s += 1;
                e += 1;
            }
            if spec.has_slope() {
                b.slope = Some(s);
                b.slope_error = Some(e);
                s += 1;
                e += 1;
            }
            if spec.has_seasonal() {
                let len = spec.seasons - 1;
                b.seasonal = Some(s..s + len);
                b.seasonal_error = Some(e);
                s += len;
                e += 1;
            }
            if spec.has_cycle() {
                b.cycle = Some(s);
                b.cycle_error = Some(e);
                s += 2;
                e += 2;
            }
            blocks.push(b);
        }
        StateLayout { blocks, n_states: s, n_errors: e }
    }
}
