//! Summaries of posterior draws: inclusion probabilities, conditional
//! coefficient estimates, component decompositions, forecast error metrics
//! and static plots.

mod svg;

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::statespace::{Component, ModelSpec};
use crate::trainer::{fitted, McmcDraws};

pub use svg::{inclusion_svg, series_svg};

/// Per-predictor inclusion summary.
#[derive(Clone, Debug, PartialEq)]
pub struct InclusionEntry {
    pub name: String,
    /// 1-based target series the predictor belongs to.
    pub series: usize,
    /// Number of retained draws with the predictor included.
    pub count: usize,
    pub probability: f64,
    /// Sign of the posterior mean over active draws (`0` if never active or exactly zero).
    pub sign: i8,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InclusionReport {
    pub threshold: f64,
    pub n_keep: usize,
    pub entries: Vec<InclusionEntry>,
}

impl InclusionReport {
    /// 1-based stacked indices of the selected predictors.
    pub fn selected_indices(&self) -> Vec<usize> {
        self.entries.iter().enumerate().filter(|(_, e)| e.selected).map(|(j, _)| j + 1).collect()
    }
}

/// Conditional-on-inclusion posterior summaries of the selected coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterEstimate {
    /// 1-based stacked indices, ascending.
    pub index: Vec<usize>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Posterior-mean path of one component of one series.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentPath {
    /// 0-based series index.
    pub series: usize,
    pub component: Component,
    pub values: Vec<f64>,
}

/// Elementwise forecast errors.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMetrics {
    pub absolute: DMatrix<f64>,
    /// `|pred - truth| / |truth|`; non-finite where the truth is zero.
    pub ratio: DMatrix<f64>,
    /// `(row, column)` cells whose ratio is non-finite.
    pub flagged: Vec<(usize, usize)>,
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::validation(format!("threshold {threshold} must lie in [0, 1]")));
    }
    Ok(())
}

fn series_of(ki: &[usize], j: usize) -> usize {
    ki.iter().position(|&end| j < end).unwrap_or(ki.len().saturating_sub(1))
}

/// Mean and standard deviation (`n - 1` denominator, 0 for one value) of
/// `β_j` over the draws where `γ_j = 1`.
fn active_moments(draws: &McmcDraws, j: usize) -> (usize, f64, f64) {
    let vals: Vec<f64> = (0..draws.n_keep())
        .filter(|&d| draws.ind[(j, d)])
        .map(|d| draws.beta_hat[(j, d)])
        .collect();
    let n = vals.len();
    if n == 0 {
        return (0, 0.0, 0.0);
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (n, mean, sd)
}

/// Inclusion probabilities with dominant signs. `names` must have one entry
/// per predictor or be empty, in which case names are `x1, x2, ...`.
pub fn inclusion_probabilities(
    draws: &McmcDraws,
    threshold: f64,
    names: &[String],
) -> Result<InclusionReport> {
    check_threshold(threshold)?;
    let k = draws.k();
    if !names.is_empty() && names.len() != k {
        return Err(Error::validation(format!("{} names given for {k} predictors", names.len())));
    }
    let n_keep = draws.n_keep();
    let entries = (0..k)
        .map(|j| {
            let (count, mean, _) = active_moments(draws, j);
            let probability = if n_keep == 0 { 0.0 } else { count as f64 / n_keep as f64 };
            let sign = if mean > 0.0 {
                1
            } else if mean < 0.0 {
                -1
            } else {
                0
            };
            InclusionEntry {
                name: names.get(j).cloned().unwrap_or_else(|| format!("x{}", j + 1)),
                series: series_of(draws.ki(), j) + 1,
                count,
                probability,
                sign,
                selected: n_keep > 0 && probability >= threshold,
            }
        })
        .collect();
    Ok(InclusionReport { threshold, n_keep, entries })
}

/// Posterior mean and sd over active draws for predictors whose inclusion
/// probability reaches `threshold`.
pub fn parameter_estimates(draws: &McmcDraws, threshold: f64) -> Result<ParameterEstimate> {
    let report = inclusion_probabilities(draws, threshold, &[])?;
    let mut est = ParameterEstimate::default();
    for j in report.selected_indices() {
        let (_, mean, sd) = active_moments(draws, j - 1);
        est.index.push(j);
        est.mean.push(mean);
        est.sd.push(sd);
    }
    Ok(est)
}

/// Posterior-mean component paths, one per (series, component) present in
/// `spec`. Empty when the draws carry no state signals.
pub fn component_decomposition(draws: &McmcDraws, spec: &ModelSpec) -> Result<Vec<ComponentPath>> {
    if *spec != draws.spec {
        return Err(Error::validation("model spec differs from the one used in training"));
    }
    let signals = draws.signals();
    let Some(states) = draws.states.as_ref() else {
        return Ok(Vec::new());
    };
    if states.is_empty() || signals.is_empty() {
        return Ok(Vec::new());
    }
    let n = draws.ntrain;
    Ok(signals
        .iter()
        .enumerate()
        .map(|(s, (series, component, _))| {
            let mut values = vec![0.0; n];
            for draw in states {
                for (t, v) in values.iter_mut().enumerate() {
                    *v += draw[(t, s)];
                }
            }
            values.iter_mut().for_each(|v| *v /= states.len() as f64);
            ComponentPath { series: *series, component: *component, values }
        })
        .collect())
}

/// Split of the training targets for one retained draw.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawDecomposition {
    /// Summed trend, seasonal and cycle signals per series, `n × m`.
    pub structural: DMatrix<f64>,
    /// `X_i β_i` per series, `n × m`.
    pub regression: DMatrix<f64>,
    /// Remaining noise, `n × m`.
    pub residual: DMatrix<f64>,
}

/// Structural signals, regression fit and residual for draw `d`.
pub fn draw_decomposition(draws: &McmcDraws, d: usize) -> Result<DrawDecomposition> {
    if d >= draws.n_keep() {
        return Err(Error::validation(format!("draw index {d} out of range")));
    }
    let (n, m) = (draws.ntrain, draws.mtrain);
    let mut structural = DMatrix::zeros(n, m);
    let signals = draws.signals();
    if !signals.is_empty() {
        let states = draws
            .states
            .as_ref()
            .ok_or_else(|| Error::validation("draws were stored without state signals"))?;
        for (s, (series, _, _)) in signals.iter().enumerate() {
            for t in 0..n {
                structural[(t, *series)] += states[d][(t, s)];
            }
        }
    }
    let regression = fitted(&draws.x_train, draws.ki(), &draws.beta(d));
    let residual = &draws.y_train - &structural - &regression;
    Ok(DrawDecomposition { structural, regression, residual })
}

/// Absolute errors and error ratios of `pred` against `truth`.
pub fn error_metrics(pred: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<ErrorMetrics> {
    if pred.shape() != truth.shape() {
        return Err(Error::validation(format!(
            "prediction is {:?} but truth is {:?}",
            pred.shape(),
            truth.shape()
        )));
    }
    let absolute = (pred - truth).abs();
    let ratio = DMatrix::from_fn(pred.nrows(), pred.ncols(), |i, j| {
        absolute[(i, j)] / truth[(i, j)].abs()
    });
    let flagged = (0..pred.nrows())
        .flat_map(|i| (0..pred.ncols()).map(move |j| (i, j)))
        .filter(|&(i, j)| !ratio[(i, j)].is_finite())
        .collect();
    Ok(ErrorMetrics { absolute, ratio, flagged })
}

/// Writes one inclusion bar chart per series and, when given, one line plot
/// per series of the targets with their component paths. Each SVG gets a
/// CSV of the plotted data next to it. Returns the written paths.
pub fn emit_plots(
    report: &InclusionReport,
    components: &[ComponentPath],
    targets: Option<&DMatrix<f64>>,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if report.entries.is_empty() && components.is_empty() && targets.is_none() {
        return Ok(written);
    }
    std::fs::create_dir_all(dir)?;
    let n_series = report.entries.iter().map(|e| e.series).max().unwrap_or(0);
    for series in 1..=n_series {
        let entries: Vec<&InclusionEntry> = report.entries.iter().filter(|e| e.series == series).collect();
        let svg_path = dir.join(format!("inclusion_series{series}.svg"));
        std::fs::write(&svg_path, inclusion_svg(&entries, report.threshold, series))?;
        let csv_path = dir.join(format!("inclusion_series{series}.csv"));
        let mut csv = String::from("name,probability,sign\n");
        for e in &entries {
            csv.push_str(&format!("{},{:.16e},{}\n", e.name, e.probability, e.sign));
        }
        std::fs::write(&csv_path, csv)?;
        written.push(svg_path);
        written.push(csv_path);
    }

    let m = targets
        .map(|y| y.ncols())
        .unwrap_or(0)
        .max(components.iter().map(|c| c.series + 1).max().unwrap_or(0));
    for series in 0..m {
        let mut lines: Vec<(String, Vec<f64>)> = Vec::new();
        if let Some(y) = targets {
            lines.push(("target".into(), y.column(series).iter().copied().collect()));
        }
        for c in components.iter().filter(|c| c.series == series) {
            lines.push((c.component.name().to_string(), c.values.clone()));
        }
        if lines.is_empty() {
            continue;
        }
        let svg_path = dir.join(format!("components_series{}.svg", series + 1));
        std::fs::write(&svg_path, series_svg(&lines, series + 1))?;
        let csv_path = dir.join(format!("components_series{}.csv", series + 1));
        let len = lines.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        let mut csv = String::from("t");
        for (name, _) in &lines {
            csv.push(',');
            csv.push_str(name);
        }
        csv.push('\n');
        for t in 0..len {
            csv.push_str(&(t + 1).to_string());
            for (_, v) in &lines {
                csv.push(',');
                if let Some(x) = v.get(t) {
                    csv.push_str(&format!("{x:.16e}"));
                }
            }
            csv.push('\n');
        }
        std::fs::write(&csv_path, csv)?;
        written.push(svg_path);
        written.push(csv_path);
    }
    Ok(written)
}
