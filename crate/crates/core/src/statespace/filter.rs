use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::system::StateSpaceSystem;
use crate::error::{Error, Result};
use crate::linalg::{finite_matrix, psd_factor, symmetrize, SymInverse};
use crate::stochastics::RngStream;

/// Variance added along diffuse directions (`P1 + κ·P1inf`).
pub const DIFFUSE_VARIANCE: f64 = 1e7;

/// Output of [`kalman_filter`]. Index `t` refers to the `t`-th observation.
#[derive(Clone, Debug)]
pub struct FilterResult {
    /// Gaussian log-likelihood of `y - offset`, skipping the first `d`
    /// observations where `d` is the number of diffuse states. `None` signals a
    /// degenerate likelihood: some innovation covariance was singular.
    pub loglik: Option<f64>,
    /// `E[α_t | y_1..y_{t-1}]`.
    pub predicted_means: Vec<DVector<f64>>,
    pub predicted_covs: Vec<DMatrix<f64>>,
    /// `E[α_t | y_1..y_t]`.
    pub filtered_means: Vec<DVector<f64>>,
    pub filtered_covs: Vec<DMatrix<f64>>,
    pub innovations: Vec<DVector<f64>>,
    pub innovation_covs: Vec<DMatrix<f64>>,
    /// `F_t⁻¹`, or its pseudo-inverse when singular.
    inverse_innovation_covs: Vec<DMatrix<f64>>,
    /// `K_t = T P_t Zᵀ F_t⁻¹`.
    gains: Vec<DMatrix<f64>>,
}

impl FilterResult {
    pub fn len(&self) -> usize {
        self.innovations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.innovations.is_empty()
    }
}

/// Smoothed state moments `E[α_t | y_1..y_n]` and `Var[α_t | y_1..y_n]`.
#[derive(Clone, Debug)]
pub struct SmootherResult {
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
}

/// Validates inputs and returns `(y - offset)ᵀ` as an `m × n` matrix.
fn observations(
    sys: &StateSpaceSystem,
    y: &DMatrix<f64>,
    offset: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    let m = sys.n_series();
    if y.nrows() == 0 {
        return Err(Error::validation("at least one observation is required"));
    }
    if y.ncols() != m {
        return Err(Error::validation(format!(
            "observations have {} columns but the system has {m} series",
            y.ncols()
        )));
    }
    if !finite_matrix(y) {
        return Err(Error::validation("observations contain non-finite values"));
    }
    let mut data = y.transpose();
    if let Some(off) = offset {
        if off.shape() != y.shape() {
            return Err(Error::validation(format!(
                "offset is {:?} but observations are {:?}",
                off.shape(),
                y.shape()
            )));
        }
        if !finite_matrix(off) {
            return Err(Error::validation("offset contains non-finite values"));
        }
        data -= off.transpose();
    }
    for (name, mat) in [("Z", &sys.z), ("T", &sys.t), ("R", &sys.r), ("Q", &sys.q), ("H", &sys.h), ("P1", &sys.p1)] {
        if !finite_matrix(mat) {
            return Err(Error::validation(format!("system matrix {name} has non-finite entries")));
        }
    }
    Ok(data)
}

/// Core recursion on `data` (`m × n`). With `zero_mean` the intercept and
/// initial mean are dropped, which is what the simulation smoother needs.
fn run_filter(sys: &StateSpaceSystem, data: &DMatrix<f64>, zero_mean: bool) -> FilterResult {
    let n = data.ncols();
    let m = sys.n_series();
    let p = sys.n_states();
    let z = &sys.z;
    let zt = z.transpose();
    let tt = sys.t.transpose();
    let rqr = &sys.r * &sys.q * sys.r.transpose();
    let skip = sys.n_diffuse();

    let mut a = if zero_mean { DVector::zeros(p) } else { sys.a1.clone() };
    let mut pcov = &sys.p1 + &sys.p1inf * DIFFUSE_VARIANCE;
    symmetrize(&mut pcov);

    let mut out = FilterResult {
        loglik: None,
        predicted_means: Vec::with_capacity(n),
        predicted_covs: Vec::with_capacity(n),
        filtered_means: Vec::with_capacity(n),
        filtered_covs: Vec::with_capacity(n),
        innovations: Vec::with_capacity(n),
        innovation_covs: Vec::with_capacity(n),
        inverse_innovation_covs: Vec::with_capacity(n),
        gains: Vec::with_capacity(n),
    };
    let mut loglik = 0.0;
    let mut degenerate = false;
    let ln2pi = (2.0 * PI).ln();

    for t in 0..n {
        let v = data.column(t) - z * &a;
        let pzt = &pcov * &zt;
        let mut f = z * &pzt + &sys.h;
        symmetrize(&mut f);
        let inv = SymInverse::new(&f);
        let gain_f = &pzt * &inv.inv;

        let af = &a + &gain_f * &v;
        let mut pf = &pcov - &gain_f * pzt.transpose();
        symmetrize(&mut pf);

        match inv.logdet {
            Some(ld) => {
                if t >= skip {
                    let quad = v.dot(&(&inv.inv * &v));
                    loglik += -0.5 * (m as f64 * ln2pi + ld + quad);
                }
            }
            None => degenerate = true,
        }

        let k = &sys.t * &gain_f;
        let mut a_next = &sys.t * &af;
        if !zero_mean {
            a_next += &sys.c;
        }
        let mut p_next = &sys.t * &pf * &tt + &rqr;
        symmetrize(&mut p_next);

        out.predicted_means.push(a);
        out.predicted_covs.push(pcov);
        out.filtered_means.push(af);
        out.filtered_covs.push(pf);
        out.innovations.push(v);
        out.innovation_covs.push(f);
        out.inverse_innovation_covs.push(inv.inv);
        out.gains.push(k);

        a = a_next;
        pcov = p_next;
    }
    out.loglik = if degenerate { None } else { Some(loglik) };
    out
}

/// Kalman filter for `y - offset` (rows are time points).
///
/// Diffuse states use the large-variance approximation `P1 + 1e7·P1inf`; the
/// log-likelihood omits the first `d` observations where `d` is the number of
/// diffuse states.
pub fn kalman_filter(
    sys: &StateSpaceSystem,
    y: &DMatrix<f64>,
    offset: Option<&DMatrix<f64>>,
) -> Result<FilterResult> {
    let data = observations(sys, y, offset)?;
    Ok(run_filter(sys, &data, false))
}

/// Backward state-smoothing recursion. Returns means and, if requested, covariances.
fn backward(sys: &StateSpaceSystem, f: &FilterResult, with_covs: bool) -> SmootherResult {
    let n = f.len();
    let p = sys.n_states();
    let z = &sys.z;
    let zt = z.transpose();
    let mut r = DVector::zeros(p);
    let mut nmat = DMatrix::zeros(p, p);
    let mut means = vec![DVector::zeros(p); n];
    let mut covs = if with_covs { vec![DMatrix::zeros(p, p); n] } else { Vec::new() };

    for t in (0..n).rev() {
        let finv = &f.inverse_innovation_covs[t];
        let l = &sys.t - &f.gains[t] * z;
        let lt = l.transpose();
        r = &zt * (finv * &f.innovations[t]) + &lt * &r;
        let pt = &f.predicted_covs[t];
        means[t] = &f.predicted_means[t] + pt * &r;
        if with_covs {
            nmat = &zt * finv * z + &lt * &nmat * &l;
            symmetrize(&mut nmat);
            let mut v = pt - pt * &nmat * pt;
            symmetrize(&mut v);
            covs[t] = v;
        }
    }
    SmootherResult { means, covs }
}

/// Fixed-interval smoother for `y - offset`.
pub fn smooth(
    sys: &StateSpaceSystem,
    y: &DMatrix<f64>,
    offset: Option<&DMatrix<f64>>,
) -> Result<SmootherResult> {
    let data = observations(sys, y, offset)?;
    let f = run_filter(sys, &data, false);
    Ok(backward(sys, &f, true))
}

/// One draw from `p(α | y - offset)` by mean correction: simulate `(α⁺, y⁺)`
/// from the model, then return `α⁺ + E[α | y] - E[α | y⁺]`. The difference
/// of smoothed means is obtained in a single zero-mean pass over `y - y⁺`.
///
/// The unconditional draw starts from `a1 + chol(P1)·z`; diffuse directions
/// carry no mean information and are left at `a1`.
///
/// Returns an `n × p` matrix of states (rows are time points).
pub fn simulation_smoother(
    sys: &StateSpaceSystem,
    y: &DMatrix<f64>,
    offset: Option<&DMatrix<f64>>,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    let mut data = observations(sys, y, offset)?;
    let n = data.ncols();
    let p = sys.n_states();
    let m = sys.n_series();

    let p1_factor = psd_factor(&sys.p1, "P1")?;
    let q_factor = psd_factor(&sys.q, "Q")?;
    let h_factor = psd_factor(&sys.h, "H")?;
    let r_q = &sys.r * &q_factor;

    let mut sim_states = DMatrix::zeros(p, n);
    let mut alpha = &sys.a1 + &p1_factor * rng.standard_normal_vector(p);
    for t in 0..n {
        let eps = &h_factor * rng.standard_normal_vector(m);
        let y_plus = &sys.z * &alpha + eps;
        let mut col = data.column_mut(t);
        col -= y_plus;
        sim_states.set_column(t, &alpha);
        if t + 1 < n {
            let eta = &r_q * rng.standard_normal_vector(q_factor.ncols());
            alpha = &sys.c + &sys.t * &alpha + eta;
        }
    }

    let f = run_filter(sys, &data, true);
    let sm = backward(sys, &f, false);
    for (t, mean) in sm.means.iter().enumerate() {
        let mut col = sim_states.column_mut(t);
        col += mean;
    }
    Ok(sim_states.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{build_state_space, ModelSpec, SeriesSpec};

    fn local_level(q: f64, h: f64, p1: f64, diffuse: bool) -> StateSpaceSystem {
        let spec = ModelSpec::new(vec![SeriesSpec { trend: true, ..SeriesSpec::empty() }]);
        let mut sys = build_state_space(&spec, &[q], &DMatrix::from_element(1, 1, h)).unwrap();
        sys.p1 = DMatrix::from_element(1, 1, p1);
        if !diffuse {
            sys.p1inf = DMatrix::zeros(1, 1);
        }
        sys
    }

    #[test]
    fn single_step_smoother_equals_filter() {
        let sys = local_level(0.5, 1.0, 2.0, false);
        let y = DMatrix::from_element(1, 1, 1.3);
        let f = kalman_filter(&sys, &y, None).unwrap();
        let s = smooth(&sys, &y, None).unwrap();
        assert!((f.filtered_means[0][0] - s.means[0][0]).abs() < 1e-14);
        assert!((f.filtered_covs[0][(0, 0)] - s.covs[0][(0, 0)]).abs() < 1e-14);
    }

    #[test]
    fn noiseless_system_is_degenerate() {
        let mut sys = local_level(0.0, 0.0, 0.0, false);
        sys.a1 = DVector::from_element(1, 2.5);
        let y = DMatrix::from_element(4, 1, 2.5);
        let f = kalman_filter(&sys, &y, None).unwrap();
        assert!(f.loglik.is_none());
        for a in &f.filtered_means {
            assert_eq!(a[0], 2.5);
        }
    }

    #[test]
    fn noiseless_simulation_smoother_is_deterministic_trajectory() {
        let spec = ModelSpec::new(vec![SeriesSpec {
            trend: true,
            learning_rate: 0.5,
            long_run_slope: 0.0,
            seasons: 0,
            damping: 0.9,
            frequency: 0.4,
        }]);
        let mut sys = build_state_space(&spec, &[0.0; 4], &DMatrix::from_element(1, 1, 0.3)).unwrap();
        sys.p1inf = DMatrix::zeros(4, 4);
        sys.a1 = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
        let y = DMatrix::from_fn(6, 1, |t, _| t as f64);
        let mut rng = RngStream::new(3, 0);
        let draw = simulation_smoother(&sys, &y, None, &mut rng).unwrap();
        let mut a = sys.a1.clone();
        for t in 0..6 {
            for j in 0..4 {
                assert_eq!(draw[(t, j)], a[j]);
            }
            a = &sys.t * a;
        }
    }

    #[test]
    fn rejects_bad_input() {
        let sys = local_level(0.5, 1.0, 2.0, false);
        let mut y = DMatrix::from_element(3, 1, 1.0);
        y[(1, 0)] = f64::NAN;
        assert!(matches!(kalman_filter(&sys, &y, None), Err(Error::Validation(_))));
        let y = DMatrix::from_element(3, 2, 1.0);
        assert!(kalman_filter(&sys, &y, None).is_err());
        let y = DMatrix::<f64>::zeros(0, 1);
        assert!(kalman_filter(&sys, &y, None).is_err());
    }

    #[test]
    fn smoothed_mean_at_last_step_equals_filtered() {
        let sys = StateSpaceSystem::with_defaults(&ModelSpec::replication()).unwrap();
        let y = DMatrix::from_fn(40, 2, |t, j| ((t * (j + 2)) as f64).sin() * 3.0 + t as f64);
        let f = kalman_filter(&sys, &y, None).unwrap();
        let s = smooth(&sys, &y, None).unwrap();
        let diff = (&f.filtered_means[39] - &s.means[39]).abs().max();
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn empty_state_filter_is_iid_gaussian() {
        let spec = ModelSpec::regression_only(1);
        let sys = build_state_space(&spec, &[], &DMatrix::from_element(1, 1, 2.0)).unwrap();
        let y = DMatrix::from_column_slice(3, 1, &[0.5, -1.0, 2.0]);
        let f = kalman_filter(&sys, &y, None).unwrap();
        let expected: f64 = y
            .iter()
            .map(|v| -0.5 * ((2.0 * PI * 2.0).ln() + v * v / 2.0))
            .sum();
        assert!((f.loglik.unwrap() - expected).abs() < 1e-12);
        let mut rng = RngStream::new(1, 0);
        let draw = simulation_smoother(&sys, &y, None, &mut rng).unwrap();
        assert_eq!(draw.shape(), (3, 0));
    }
}
