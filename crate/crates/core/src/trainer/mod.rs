//! Gibbs sampler for the full model.
//!
//! One iteration draws, in order:
//!
//! 1. the state path from the simulation smoother given `β`, `Σ_ε` and the
//!    component variances, then forms `Y* = Y - Z α`;
//! 2. the component variances from their inverse-gamma conditionals;
//! 3. the inclusion indicators by an SSVS sweep with `β` integrated out;
//! 4. the active coefficients from their Gaussian conditional;
//! 5. `Σ_ε` from its inverse-Wishart conditional.

mod prior;
mod regression;
mod variances;

use nalgebra::{DMatrix, DVector};

pub use prior::PriorConfig;
pub use regression::{
    beta_posterior, draw_beta, draw_sigma_eps, fitted, iw_prior_scale, log_marginal_likelihood,
    log_posterior_gamma, sample_covariance, ssvs_sweep, Design, RegressionState, SweepOrder,
};
pub use variances::draw_component_variances;

use crate::error::{Error, Result};
use crate::linalg::finite_matrix;
use crate::statespace::{simulation_smoother, Component, ModelSpec, StateSpaceSystem};
use crate::stochastics::RngStream;

/// Starting value for every component variance.
pub const INITIAL_COMPONENT_VARIANCE: f64 = 0.01;

/// Sampler length and bookkeeping options.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    /// Total iterations, burn-in included.
    pub mc: usize,
    /// Leading iterations that are discarded.
    pub burn: usize,
    /// Keep the per-draw component signals (trend, seasonal, cycle paths).
    pub keep_states: bool,
    pub sweep_order: SweepOrder,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { mc: 500, burn: 50, keep_states: true, sweep_order: SweepOrder::Random }
    }
}

impl TrainOptions {
    pub fn n_keep(&self) -> usize {
        self.mc.saturating_sub(self.burn)
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn >= self.mc {
            return Err(Error::validation(format!(
                "burn-in ({}) must be smaller than the number of iterations ({})",
                self.burn, self.mc
            )));
        }
        Ok(())
    }
}

/// Retained posterior draws. Column `d` of every matrix is draw `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct McmcDraws {
    pub spec: ModelSpec,
    pub prior: PriorConfig,
    pub ntrain: usize,
    pub mtrain: usize,
    /// Training predictors, `ntrain × K`.
    pub x_train: DMatrix<f64>,
    /// Training targets, `ntrain × m`.
    pub y_train: DMatrix<f64>,
    /// Inclusion indicators, `K × n_keep`.
    pub ind: DMatrix<bool>,
    /// Coefficients (zero when excluded), `K × n_keep`.
    pub beta_hat: DMatrix<f64>,
    /// Observation covariance per draw.
    pub ob_sig2: Vec<DMatrix<f64>>,
    /// Component variances in layout order, `r × n_keep`.
    pub st_sig2: DMatrix<f64>,
    /// Per draw, an `ntrain × n_signals` matrix of the trend, seasonal and
    /// cycle contributions in [`McmcDraws::signals`] order.
    pub states: Option<Vec<DMatrix<f64>>>,
    /// State vector at the last training time, `p × n_keep`.
    pub final_states: DMatrix<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl McmcDraws {
    pub fn n_keep(&self) -> usize {
        self.beta_hat.ncols()
    }

    pub fn k(&self) -> usize {
        self.beta_hat.nrows()
    }

    pub fn ki(&self) -> &[usize] {
        &self.prior.ki
    }

    /// `(series, component, state index)` for each stored signal column.
    pub fn signals(&self) -> Vec<(usize, Component, usize)> {
        self.spec.layout().signals()
    }

    /// Coefficients of draw `d`.
    pub fn beta(&self, d: usize) -> DVector<f64> {
        self.beta_hat.column(d).into_owned()
    }

    /// Component variances of draw `d`.
    pub fn component_variances(&self, d: usize) -> Vec<f64> {
        self.st_sig2.column(d).iter().copied().collect()
    }

    /// System matrices with the variances of draw `d`.
    pub fn system(&self, d: usize) -> Result<StateSpaceSystem> {
        let mut sys = StateSpaceSystem::with_defaults(&self.spec)?;
        sys.set_state_variances(&self.component_variances(d))?;
        sys.set_obs_cov(&self.ob_sig2[d])?;
        Ok(sys)
    }
}

/// One draw of the state path (`n × p`) given everything else.
pub fn draw_states(
    sys: &StateSpaceSystem,
    y: &DMatrix<f64>,
    regression_fit: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    if sys.n_states() == 0 {
        return Ok(DMatrix::zeros(y.nrows(), 0));
    }
    simulation_smoother(sys, y, Some(regression_fit), rng)
}

/// Runs the sampler on training targets `y` (`n × m`) and predictors `x`
/// (`n × K`, columns grouped by series as given by `prior.ki`).
pub fn train(
    y: &DMatrix<f64>,
    x: &DMatrix<f64>,
    spec: &ModelSpec,
    prior: &PriorConfig,
    opts: &TrainOptions,
    rng: &mut RngStream,
) -> Result<McmcDraws> {
    spec.validate()?;
    opts.validate()?;
    let m = spec.m();
    let n = y.nrows();
    if y.ncols() != m {
        return Err(Error::validation(format!(
            "targets have {} columns but the model has {m} series",
            y.ncols()
        )));
    }
    if x.nrows() != n {
        return Err(Error::validation(format!(
            "predictors have {} rows but targets have {n}",
            x.nrows()
        )));
    }
    if !finite_matrix(y) {
        return Err(Error::validation("targets contain non-finite values"));
    }
    prior.validate(m)?;
    let design = Design::new(x.clone(), &prior.ki)?;
    let sigma_y = match &prior.sigma_y {
        Some(s) => s.clone(),
        None => sample_covariance(y)?,
    };
    let v0_scale = iw_prior_scale(prior, &sigma_y);

    let layout = spec.layout();
    let signals = layout.signals();
    let k = design.k();
    let n_keep = opts.n_keep();

    let mut sys = StateSpaceSystem::with_defaults(spec)?;
    let mut theta = vec![INITIAL_COMPONENT_VARIANCE; layout.n_errors];
    let mut sigma_eps = sigma_y.clone();
    sys.set_state_variances(&theta)?;
    sys.set_obs_cov(&sigma_eps)?;
    let mut reg = RegressionState {
        gamma: prior.pii.iter().map(|&p| p > 0.0).collect(),
        beta: DVector::zeros(k),
        ystar: y.clone(),
    };

    let mut ind = DMatrix::from_element(k, n_keep, false);
    let mut beta_hat = DMatrix::zeros(k, n_keep);
    let mut ob_sig2 = Vec::with_capacity(n_keep);
    let mut st_sig2 = DMatrix::zeros(layout.n_errors, n_keep);
    let mut states_out = opts.keep_states.then(|| Vec::with_capacity(n_keep));
    let mut final_states = DMatrix::zeros(layout.n_states, n_keep);
    let zt = sys.z.transpose();

    for iter in 0..opts.mc {
        let reg_fit = design.fitted(&reg.beta);
        let states = draw_states(&sys, y, &reg_fit, rng)?;
        reg.ystar = y - &states * &zt;

        if layout.n_errors > 0 {
            theta = draw_component_variances(&states, spec, &layout, prior.v, prior.ss, rng)?;
        }
        ssvs_sweep(&design, &mut reg, &sigma_eps, prior, &opts.sweep_order, rng)?;
        draw_beta(&design, &mut reg, &sigma_eps, prior, rng)?;
        sigma_eps = draw_sigma_eps(&design, &reg, prior, &v0_scale, rng)?;

        sys.set_state_variances(&theta)?;
        sys.set_obs_cov(&sigma_eps)
            .map_err(|e| Error::numeric(format!("iteration {iter}: {e}")))?;

        if iter >= opts.burn {
            let d = iter - opts.burn;
            for j in 0..k {
                ind[(j, d)] = reg.gamma[j];
                beta_hat[(j, d)] = reg.beta[j];
            }
            ob_sig2.push(sigma_eps.clone());
            for (e, v) in theta.iter().enumerate() {
                st_sig2[(e, d)] = *v;
            }
            if let Some(out) = states_out.as_mut() {
                out.push(DMatrix::from_fn(n, signals.len(), |t, s| states[(t, signals[s].2)]));
            }
            if layout.n_states > 0 {
                final_states.set_column(d, &states.row(n - 1).transpose());
            }
        }
    }

    Ok(McmcDraws {
        spec: spec.clone(),
        prior: prior.clone(),
        ntrain: n,
        mtrain: m,
        x_train: x.clone(),
        y_train: y.clone(),
        ind,
        beta_hat,
        ob_sig2,
        st_sig2,
        states: states_out,
        final_states,
        seed: rng.seed(),
        stream: rng.stream(),
    })
}
