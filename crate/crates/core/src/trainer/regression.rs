//! Regression block of the sampler: SSVS indicator sweeps, coefficient draws
//! and the observation-covariance draw.
//!
//! The stacked model is `vec(Y*) = X β + vec(E)` with block-diagonal `X`
//! (series `i` owns columns `ki[i-1]..ki[i]`) and `vec(E) ~ N(0, Σ_ε ⊗ I_n)`.
//! The stacked design is never formed; every product is assembled from the
//! `K × K` Gram matrix `XᵀX` and the `K × m` cross products `XᵀY*`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use super::prior::PriorConfig;
use crate::error::{Error, Result};
use crate::linalg::{finite_matrix, SymInverse};
use crate::stochastics::{draw_inverse_wishart, RngStream};

/// Predictor matrix with its per-series block structure.
#[derive(Clone, Debug)]
pub struct Design {
    x: DMatrix<f64>,
    ki: Vec<usize>,
    series: Vec<usize>,
    gram: DMatrix<f64>,
}

impl Design {
    /// `x` is `n × K`; `ki` gives cumulative column counts per series.
    pub fn new(x: DMatrix<f64>, ki: &[usize]) -> Result<Self> {
        let k = ki.last().copied().unwrap_or(0);
        if x.ncols() != k {
            return Err(Error::validation(format!(
                "predictor matrix has {} columns but ki implies {k}",
                x.ncols()
            )));
        }
        if !finite_matrix(&x) {
            return Err(Error::validation("predictors contain non-finite values"));
        }
        let mut series = Vec::with_capacity(k);
        let mut start = 0;
        for (i, &end) in ki.iter().enumerate() {
            if end < start {
                return Err(Error::validation("ki must be non-decreasing"));
            }
            series.extend(std::iter::repeat_n(i, end - start));
            start = end;
        }
        let gram = x.transpose() * &x;
        Ok(Design { x, ki: ki.to_vec(), series, gram })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn m(&self) -> usize {
        self.ki.len()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn ki(&self) -> &[usize] {
        &self.ki
    }

    pub fn series_of(&self, j: usize) -> usize {
        self.series[j]
    }

    /// `n × m` matrix whose column `i` is `X_i β_i`.
    pub fn fitted(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        fitted(&self.x, &self.ki, beta)
    }
}

/// `n × m` regression fit for predictors `x` laid out by `ki`.
pub fn fitted(x: &DMatrix<f64>, ki: &[usize], beta: &DVector<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n, ki.len());
    let mut start = 0;
    for (i, &end) in ki.iter().enumerate() {
        for j in start..end {
            let b = beta[j];
            if b != 0.0 {
                let mut col = out.column_mut(i);
                col.axpy(b, &x.column(j), 1.0);
            }
        }
        start = end;
    }
    out
}

/// Current regression-side state of the chain.
#[derive(Clone, Debug)]
pub struct RegressionState {
    pub gamma: Vec<bool>,
    pub beta: DVector<f64>,
    /// Targets with the drawn structural components removed, `n × m`.
    pub ystar: DMatrix<f64>,
}

/// Order in which an SSVS sweep visits the indicators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SweepOrder {
    /// A fresh uniform permutation every sweep.
    #[default]
    Random,
    /// The given permutation of `0..K` every sweep.
    Fixed(Vec<usize>),
}

/// Quantities shared by every marginal-likelihood evaluation at fixed
/// `(Y*, Σ_ε)`.
struct Conditional<'a> {
    design: &'a Design,
    prior: &'a PriorConfig,
    cross: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    kappa_n: f64,
}

/// Posterior precision, right-hand side and prior precision on an active set.
struct ActiveSystem {
    precision: DMatrix<f64>,
    rhs: DVector<f64>,
    prior_precision: DMatrix<f64>,
    b: DVector<f64>,
}

impl<'a> Conditional<'a> {
    fn new(
        design: &'a Design,
        ystar: &DMatrix<f64>,
        sigma_eps: &DMatrix<f64>,
        prior: &'a PriorConfig,
    ) -> Result<Self> {
        if ystar.shape() != (design.n(), design.m()) {
            return Err(Error::validation(format!(
                "adjusted targets are {:?}, expected {:?}",
                ystar.shape(),
                (design.n(), design.m())
            )));
        }
        let sigma_inv = sigma_eps
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numeric("observation covariance is not positive definite"))?
            .inverse();
        Ok(Conditional {
            design,
            prior,
            cross: design.x.transpose() * ystar,
            sigma_inv,
            kappa_n: prior.kappa / design.n() as f64,
        })
    }

    fn system(&self, active: &[usize]) -> ActiveSystem {
        let d = active.len();
        let m = self.design.m();
        let series = &self.design.series;
        let gram = &self.design.gram;
        let mut precision = DMatrix::zeros(d, d);
        let mut prior_precision = DMatrix::zeros(d, d);
        let mut rhs = DVector::zeros(d);
        let b = DVector::from_fn(d, |a, _| self.prior.b_at(active[a]));
        for (a, &ja) in active.iter().enumerate() {
            let sa = series[ja];
            for (c, &jc) in active.iter().enumerate() {
                let sc = series[jc];
                let g = gram[(ja, jc)];
                precision[(a, c)] = self.sigma_inv[(sa, sc)] * g;
                if sa == sc {
                    prior_precision[(a, c)] = self.kappa_n * g;
                }
            }
            rhs[a] = (0..m).map(|i| self.sigma_inv[(sa, i)] * self.cross[(ja, i)]).sum();
        }
        precision += &prior_precision;
        rhs += &prior_precision * &b;
        ActiveSystem { precision, rhs, prior_precision, b }
    }

    /// `log p(Y* | γ, Σ_ε)` with β integrated out, up to a γ-independent constant.
    fn log_marginal(&self, gamma: &[bool]) -> f64 {
        let active: Vec<usize> = (0..gamma.len()).filter(|&j| gamma[j]).collect();
        if active.is_empty() {
            return 0.0;
        }
        let sys = self.system(&active);
        let Some(prior_ch) = sys.prior_precision.clone().cholesky() else {
            return f64::NEG_INFINITY;
        };
        let Some(post_ch) = sys.precision.clone().cholesky() else {
            return f64::NEG_INFINITY;
        };
        let logdet = |l: DMatrix<f64>| 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let ld_prior = logdet(prior_ch.l());
        let ld_post = logdet(post_ch.l());
        let mean = post_ch.solve(&sys.rhs);
        let prior_quad = sys.b.dot(&(&sys.prior_precision * &sys.b));
        0.5 * (ld_prior - ld_post) - 0.5 * prior_quad + 0.5 * sys.rhs.dot(&mean)
    }
}

fn log_prior(gamma: &[bool], pii: &[f64]) -> f64 {
    gamma
        .iter()
        .zip(pii)
        .map(|(&g, &p)| if g { p.ln() } else { (1.0 - p).ln() })
        .sum()
}

/// `log p(Y* | γ, Σ_ε)` up to an additive constant that does not depend on γ.
/// Returns `-∞` when `X_γᵀ X_γ` is singular.
pub fn log_marginal_likelihood(
    design: &Design,
    ystar: &DMatrix<f64>,
    sigma_eps: &DMatrix<f64>,
    prior: &PriorConfig,
    gamma: &[bool],
) -> Result<f64> {
    Ok(Conditional::new(design, ystar, sigma_eps, prior)?.log_marginal(gamma))
}

/// One SSVS sweep: each indicator is redrawn from `p(γ_j | γ_{-j}, Y*, Σ_ε)`.
/// Indicators with `pii ∈ {0, 1}` are pinned.
pub fn ssvs_sweep(
    design: &Design,
    state: &mut RegressionState,
    sigma_eps: &DMatrix<f64>,
    prior: &PriorConfig,
    order: &SweepOrder,
    rng: &mut RngStream,
) -> Result<()> {
    let k = design.k();
    let cond = Conditional::new(design, &state.ystar, sigma_eps, prior)?;
    let visit: Vec<usize> = match order {
        SweepOrder::Random => {
            let mut v: Vec<usize> = (0..k).collect();
            v.shuffle(rng);
            v
        }
        SweepOrder::Fixed(v) => {
            if v.len() != k || v.iter().any(|&j| j >= k) {
                return Err(Error::validation("fixed sweep order must be a permutation of 0..K"));
            }
            v.clone()
        }
    };

    let gamma = &mut state.gamma;
    // pinned indicators are settled first so that every free candidate is
    // scored against them
    for (g, &pi) in gamma.iter_mut().zip(&prior.pii) {
        if pi <= 0.0 || pi >= 1.0 {
            *g = pi >= 1.0;
        }
    }
    let mut current = cond.log_marginal(gamma);
    for j in visit {
        let pi = prior.pii[j];
        if pi <= 0.0 || pi >= 1.0 {
            continue;
        }
        let was = gamma[j];
        gamma[j] = !was;
        let flipped = cond.log_marginal(gamma);
        let (l_in, l_out) = if was { (current, flipped) } else { (flipped, current) };
        let log_odds = (l_in + pi.ln()) - (l_out + (1.0 - pi).ln());
        let p_in = if log_odds == f64::NEG_INFINITY {
            0.0
        } else if log_odds.is_nan() {
            // both candidates impossible; keep the exclusion
            0.0
        } else {
            1.0 / (1.0 + (-log_odds).exp())
        };
        let u = rng.uniform();
        gamma[j] = u < p_in;
        current = if gamma[j] { l_in } else { l_out };
    }
    Ok(())
}

/// Unnormalised log posterior of γ (marginal likelihood plus spike prior).
pub fn log_posterior_gamma(
    design: &Design,
    ystar: &DMatrix<f64>,
    sigma_eps: &DMatrix<f64>,
    prior: &PriorConfig,
    gamma: &[bool],
) -> Result<f64> {
    Ok(log_marginal_likelihood(design, ystar, sigma_eps, prior, gamma)? + log_prior(gamma, &prior.pii))
}

/// Posterior mean and precision of `β_γ` at fixed `(γ, Σ_ε, Y*)`, indexed by
/// the active predictors in ascending order.
pub fn beta_posterior(
    design: &Design,
    state: &RegressionState,
    sigma_eps: &DMatrix<f64>,
    prior: &PriorConfig,
) -> Result<(Vec<usize>, DVector<f64>, DMatrix<f64>)> {
    let cond = Conditional::new(design, &state.ystar, sigma_eps, prior)?;
    let active: Vec<usize> = (0..design.k()).filter(|&j| state.gamma[j]).collect();
    let sys = cond.system(&active);
    let ch = sys.precision.clone().cholesky().ok_or_else(|| singular(&state.gamma))?;
    Ok((active, ch.solve(&sys.rhs), sys.precision))
}

fn singular(gamma: &[bool]) -> Error {
    let on: Vec<String> = gamma
        .iter()
        .enumerate()
        .filter(|(_, g)| **g)
        .map(|(j, _)| (j + 1).to_string())
        .collect();
    Error::numeric(format!("posterior precision singular for gamma = {{{}}}", on.join(",")))
}

/// Draws `β_γ ~ N(μ_post, V_post)` and zeroes the excluded coefficients.
pub fn draw_beta(
    design: &Design,
    state: &mut RegressionState,
    sigma_eps: &DMatrix<f64>,
    prior: &PriorConfig,
    rng: &mut RngStream,
) -> Result<()> {
    let cond = Conditional::new(design, &state.ystar, sigma_eps, prior)?;
    let active: Vec<usize> = (0..design.k()).filter(|&j| state.gamma[j]).collect();
    let mut beta = DVector::zeros(design.k());
    if !active.is_empty() {
        let sys = cond.system(&active);
        let ch = sys.precision.clone().cholesky().ok_or_else(|| singular(&state.gamma))?;
        let mean = ch.solve(&sys.rhs);
        // precision = L Lᵀ, so L⁻ᵀ z has covariance precision⁻¹
        let z = rng.standard_normal_vector(active.len());
        let dev = ch
            .l_dirty()
            .tr_solve_lower_triangular(&z)
            .ok_or_else(|| singular(&state.gamma))?;
        for (a, &j) in active.iter().enumerate() {
            beta[j] = mean[a] + dev[a];
        }
    }
    state.beta = beta;
    Ok(())
}

/// IW prior scale `(v0 - m - 1)(1 - R²) Σ_y`.
pub fn iw_prior_scale(prior: &PriorConfig, sigma_y: &DMatrix<f64>) -> DMatrix<f64> {
    let m = sigma_y.nrows() as f64;
    sigma_y * ((prior.v0 - m - 1.0) * (1.0 - prior.r2))
}

/// Draws `Σ_ε ~ IW(v0 + n, V0 + EᵀE)` with `E = Y* - X β`.
pub fn draw_sigma_eps(
    design: &Design,
    state: &RegressionState,
    prior: &PriorConfig,
    prior_scale: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    let resid = &state.ystar - design.fitted(&state.beta);
    let scale = prior_scale + resid.transpose() * &resid;
    draw_inverse_wishart(prior.v0 + design.n() as f64, &scale, rng)
}

/// Unbiased sample covariance of the rows of `y`.
pub fn sample_covariance(y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = y.nrows();
    if n < 2 {
        return Err(Error::validation("sample covariance needs at least two rows"));
    }
    let mean = y.row_mean();
    let mut centered = y.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = centered.transpose() * centered / (n as f64 - 1.0);
    if SymInverse::new(&cov).logdet.is_none() {
        return Err(Error::validation("target sample covariance is singular"));
    }
    Ok(cov)
}
