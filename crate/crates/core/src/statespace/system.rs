use nalgebra::{DMatrix, DVector};

use super::spec::{ModelSpec, StateLayout};
use crate::error::{Error, Result};
use crate::linalg::check_psd;

/// Starting value for every state-disturbance variance.
pub const DEFAULT_STATE_VARIANCE: f64 = 0.01;
/// Starting value for every observation-noise variance.
pub const DEFAULT_OBS_VARIANCE: f64 = 0.1;

/// Time-invariant system matrices of the stacked structural model.
#[derive(Clone, Debug)]
pub struct StateSpaceSystem {
    /// Observation matrix, `m × p`.
    pub z: DMatrix<f64>,
    /// Transition matrix, `p × p`.
    pub t: DMatrix<f64>,
    /// Selection matrix, `p × r`.
    pub r: DMatrix<f64>,
    /// State-disturbance covariance, `r × r`.
    pub q: DMatrix<f64>,
    /// Observation-noise covariance, `m × m`.
    pub h: DMatrix<f64>,
    /// State intercept, `p`.
    pub c: DVector<f64>,
    pub a1: DVector<f64>,
    pub p1: DMatrix<f64>,
    /// Diffuse-initialisation indicator, `p × p`.
    pub p1inf: DMatrix<f64>,
    pub layout: StateLayout,
}

impl StateSpaceSystem {
    /// System with the default starting variances (`Q = 0.01 I`, `H = 0.1 I`).
    pub fn with_defaults(spec: &ModelSpec) -> Result<Self> {
        let r = spec.n_errors();
        let m = spec.m();
        build_state_space(
            spec,
            &vec![DEFAULT_STATE_VARIANCE; r],
            &(DMatrix::identity(m, m) * DEFAULT_OBS_VARIANCE),
        )
    }

    pub fn n_states(&self) -> usize {
        self.t.nrows()
    }

    pub fn n_errors(&self) -> usize {
        self.r.ncols()
    }

    pub fn n_series(&self) -> usize {
        self.z.nrows()
    }

    /// Replaces `Q` with `diag(variances)`.
    pub fn set_state_variances(&mut self, variances: &[f64]) -> Result<()> {
        check_variances(variances, self.n_errors())?;
        self.q = DMatrix::from_diagonal(&DVector::from_column_slice(variances));
        Ok(())
    }

    pub fn set_obs_cov(&mut self, obs_cov: &DMatrix<f64>) -> Result<()> {
        let m = self.n_series();
        if obs_cov.nrows() != m || obs_cov.ncols() != m {
            return Err(Error::validation(format!("observation covariance must be {m}x{m}")));
        }
        check_psd(obs_cov, "observation covariance")?;
        self.h = obs_cov.clone();
        Ok(())
    }

    /// Number of diffuse initial states.
    pub fn n_diffuse(&self) -> usize {
        self.p1inf.diagonal().iter().filter(|v| **v != 0.0).count()
    }
}

fn check_variances(variances: &[f64], r: usize) -> Result<()> {
    if variances.len() != r {
        return Err(Error::validation(format!(
            "expected {r} state variances, got {}",
            variances.len()
        )));
    }
    if let Some((j, v)) = variances.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::validation(format!("state variance {j} = {v} must be finite and >= 0")));
    }
    Ok(())
}

/// Assembles the stacked system for `spec`.
///
/// `state_variances` holds one variance per error-bearing state in layout
/// order (series-major; level, slope, seasonal, cycle, cycle-star). The two
/// cycle entries of a series are normally equal.
pub fn build_state_space(
    spec: &ModelSpec,
    state_variances: &[f64],
    obs_cov: &DMatrix<f64>,
) -> Result<StateSpaceSystem> {
    spec.validate()?;
    let layout = spec.layout();
    let (p, r, m) = (layout.n_states, layout.n_errors, spec.m());
    check_variances(state_variances, r)?;
    if obs_cov.nrows() != m || obs_cov.ncols() != m {
        return Err(Error::validation(format!("observation covariance must be {m}x{m}")));
    }
    check_psd(obs_cov, "observation covariance")?;

    let mut z = DMatrix::zeros(m, p);
    let mut t = DMatrix::zeros(p, p);
    let mut sel = DMatrix::zeros(p, r);
    let mut c = DVector::zeros(p);

    for (i, (s, b)) in spec.series.iter().zip(&layout.blocks).enumerate() {
        if let (Some(lv), Some(e)) = (b.level, b.level_error) {
            z[(i, lv)] = 1.0;
            t[(lv, lv)] = 1.0;
            if let Some(sl) = b.slope {
                t[(lv, sl)] = 1.0;
            }
            sel[(lv, e)] = 1.0;
        }
        if let (Some(sl), Some(e)) = (b.slope, b.slope_error) {
            let rho = s.learning_rate;
            t[(sl, sl)] = rho;
            c[sl] = s.long_run_slope * (1.0 - rho);
            sel[(sl, e)] = 1.0;
        }
        if let (Some(range), Some(e)) = (b.seasonal.clone(), b.seasonal_error) {
            let lead = range.start;
            z[(i, lead)] = 1.0;
            for j in range.clone() {
                t[(lead, j)] = -1.0;
            }
            for j in (lead + 1)..range.end {
                t[(j, j - 1)] = 1.0;
            }
            sel[(lead, e)] = 1.0;
        }
        if let (Some(cy), Some(e)) = (b.cycle, b.cycle_error) {
            let (sin, cos) = s.frequency.sin_cos();
            let d = s.damping;
            z[(i, cy)] = 1.0;
            t[(cy, cy)] = d * cos;
            t[(cy, cy + 1)] = d * sin;
            t[(cy + 1, cy)] = -d * sin;
            t[(cy + 1, cy + 1)] = d * cos;
            sel[(cy, e)] = 1.0;
            sel[(cy + 1, e + 1)] = 1.0;
        }
    }

    Ok(StateSpaceSystem {
        z,
        t,
        r: sel,
        q: DMatrix::from_diagonal(&DVector::from_column_slice(state_variances)),
        h: obs_cov.clone(),
        c,
        a1: DVector::zeros(p),
        p1: DMatrix::zeros(p, p),
        p1inf: DMatrix::identity(p, p),
        layout,
    })
}
