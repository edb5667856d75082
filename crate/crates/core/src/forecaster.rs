//! Posterior predictive simulation.
//!
//! Every retained draw is propagated forward from its own final state with
//! its own variances, coefficients and observation covariance. Multi-step
//! forecasts chain the state recursion; observations are never re-filtered.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{finite_matrix, psd_factor};
use crate::statespace::StateSpaceSystem;
use crate::stochastics::RngStream;
use crate::trainer::{fitted, McmcDraws};

/// Predictive draws and their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastResult {
    /// One `steps × m` matrix per retained MCMC draw.
    pub pred_distribution: Vec<DMatrix<f64>>,
    /// Cell-wise average of `pred_distribution`, `steps × m`.
    pub pred_mean: DMatrix<f64>,
}

impl ForecastResult {
    pub fn steps(&self) -> usize {
        self.pred_mean.nrows()
    }

    /// Predictive draws for `(step, series)` across MCMC draws.
    pub fn cell(&self, step: usize, series: usize) -> Vec<f64> {
        self.pred_distribution.iter().map(|d| d[(step, series)]).collect()
    }
}

fn check_template(draws: &McmcDraws, sys: &StateSpaceSystem) -> Result<()> {
    let layout = draws.spec.layout();
    if sys.n_states() != layout.n_states
        || sys.n_errors() != layout.n_errors
        || sys.n_series() != draws.mtrain
    {
        return Err(Error::validation(format!(
            "system template has (p, r, m) = ({}, {}, {}) but the draws need ({}, {}, {})",
            sys.n_states(),
            sys.n_errors(),
            sys.n_series(),
            layout.n_states,
            layout.n_errors,
            draws.mtrain
        )));
    }
    Ok(())
}

fn check_newdata(draws: &McmcDraws, newdata: &DMatrix<f64>, rows: usize) -> Result<()> {
    if newdata.ncols() != draws.k() {
        return Err(Error::validation(format!(
            "new predictors have {} columns but the model uses {}",
            newdata.ncols(),
            draws.k()
        )));
    }
    if newdata.nrows() < rows {
        return Err(Error::validation(format!(
            "{rows} forecast steps need at least {rows} rows of new predictors, got {}",
            newdata.nrows()
        )));
    }
    if !finite_matrix(newdata) {
        return Err(Error::validation("new predictors contain non-finite values"));
    }
    Ok(())
}

/// Simulates `steps` observations ahead for every retained draw.
///
/// `newdata` holds at least `steps` rows laid out like the training
/// predictors. With `steps = 0` nothing is drawn from `rng`.
pub fn forecast(
    draws: &McmcDraws,
    sys: &StateSpaceSystem,
    newdata: &DMatrix<f64>,
    steps: usize,
    rng: &mut RngStream,
) -> Result<ForecastResult> {
    check_template(draws, sys)?;
    check_newdata(draws, newdata, steps)?;
    let m = draws.mtrain;
    let n_keep = draws.n_keep();
    if n_keep == 0 {
        return Err(Error::validation("no retained draws to forecast from"));
    }
    if steps == 0 {
        return Ok(ForecastResult {
            pred_distribution: vec![DMatrix::zeros(0, m); n_keep],
            pred_mean: DMatrix::zeros(0, m),
        });
    }

    let x = newdata.rows(0, steps).into_owned();
    let mut pred_distribution = Vec::with_capacity(n_keep);
    for d in 0..n_keep {
        let q_factor = psd_factor(
            &DMatrix::from_diagonal(&DVector::from_vec(draws.component_variances(d))),
            "component variances",
        )?;
        let r_q = &sys.r * q_factor;
        let h_factor = psd_factor(&draws.ob_sig2[d], "observation covariance")?;
        let regression = fitted(&x, draws.ki(), &draws.beta(d));

        let mut alpha = draws.final_states.column(d).into_owned();
        let mut out = DMatrix::zeros(steps, m);
        for s in 0..steps {
            let eta = rng.standard_normal_vector(sys.n_errors());
            alpha = &sys.c + &sys.t * &alpha + &r_q * eta;
            let eps = &h_factor * rng.standard_normal_vector(m);
            let y = &sys.z * &alpha + eps;
            for i in 0..m {
                out[(s, i)] = y[i] + regression[(s, i)];
            }
        }
        pred_distribution.push(out);
    }

    let mut pred_mean = DMatrix::zeros(steps, m);
    for d in &pred_distribution {
        pred_mean += d;
    }
    pred_mean /= n_keep as f64;
    Ok(ForecastResult { pred_distribution, pred_mean })
}

/// Analytic one-step-ahead predictive mean and covariance for draw `d`:
/// mean `Z(c + T α_n) + x β`, covariance `Z R Q Rᵀ Zᵀ + Σ_ε`.
pub fn one_step_predictive_moments(
    draws: &McmcDraws,
    d: usize,
    sys: &StateSpaceSystem,
    newdata_row: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_template(draws, sys)?;
    if d >= draws.n_keep() {
        return Err(Error::validation(format!(
            "draw index {d} out of range (n_keep = {})",
            draws.n_keep()
        )));
    }
    let row = DMatrix::from_row_slice(1, newdata_row.len(), newdata_row.as_slice());
    check_newdata(draws, &row, 1)?;
    let regression = fitted(&row, draws.ki(), &draws.beta(d));
    let alpha = draws.final_states.column(d);
    let mean = &sys.z * (&sys.c + &sys.t * alpha) + regression.row(0).transpose();
    let q = DMatrix::from_diagonal(&DVector::from_vec(draws.component_variances(d)));
    let zr = &sys.z * &sys.r;
    let cov = &zr * q * zr.transpose() + &draws.ob_sig2[d];
    Ok((mean, cov))
}
