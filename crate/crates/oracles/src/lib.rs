//! Reference computations for tests.
//!
//! Everything here is deliberately brute force: dense joint covariances,
//! explicit Kronecker products and full model enumeration. None of it shares
//! code with the library under test.

use nalgebra::{DMatrix, DVector};

pub use statrs;

/// Plain description of a time-invariant linear-Gaussian system
/// `α_{t+1} = c + T α_t + R η_t`, `y_t = Z α_t + ε_t`, `α_1 ~ N(a1, P1)`.
#[derive(Clone, Debug)]
pub struct LinearGaussian {
    pub z: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a1: DVector<f64>,
    pub p1: DMatrix<f64>,
}

/// Joint mean and covariance of `(α_1, …, α_n, y_1, …, y_n)` stacked in that order.
pub fn joint_moments(sys: &LinearGaussian, n: usize) -> (DVector<f64>, DMatrix<f64>) {
    let p = sys.t.nrows();
    let m = sys.z.nrows();
    let dim = n * (p + m);
    let mut mean = DVector::zeros(dim);
    let mut cov = DMatrix::zeros(dim, dim);

    // State means and auto-covariances: Cov(α_s, α_t) = T^{t-s} Var(α_s) for t >= s.
    let mut means = Vec::with_capacity(n);
    let mut vars = Vec::with_capacity(n);
    let mut a = sys.a1.clone();
    let mut v = sys.p1.clone();
    let rqr = &sys.r * &sys.q * sys.r.transpose();
    for _ in 0..n {
        means.push(a.clone());
        vars.push(v.clone());
        a = &sys.c + &sys.t * &a;
        v = &sys.t * &v * sys.t.transpose() + &rqr;
    }
    let mut state_cov = vec![vec![DMatrix::zeros(p, p); n]; n];
    for s in 0..n {
        let mut block = vars[s].clone();
        for t in s..n {
            state_cov[t][s] = block.clone();
            state_cov[s][t] = block.transpose();
            block = &sys.t * block;
        }
    }
    for t in 0..n {
        mean.rows_mut(t * p, p).copy_from(&means[t]);
        mean.rows_mut(n * p + t * m, m).copy_from(&(&sys.z * &means[t]));
    }
    for s in 0..n {
        for t in 0..n {
            let sc = &state_cov[s][t];
            cov.view_mut((s * p, t * p), (p, p)).copy_from(sc);
            // Cov(α_s, y_t) = Cov(α_s, α_t) Zᵀ
            let ay = sc * sys.z.transpose();
            cov.view_mut((s * p, n * p + t * m), (p, m)).copy_from(&ay);
            cov.view_mut((n * p + t * m, s * p), (m, p)).copy_from(&ay.transpose());
            let mut yy = &sys.z * sc * sys.z.transpose();
            if s == t {
                yy += &sys.h;
            }
            cov.view_mut((n * p + s * m, n * p + t * m), (m, m)).copy_from(&yy);
        }
    }
    (mean, cov)
}

/// Conditional moments of `x[target]` given `x[observed] = values` for `x ~ N(mean, cov)`.
pub fn condition(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    target: &[usize],
    observed: &[usize],
    values: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let sel = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| cov[(rows[i], cols[j])])
    };
    let s_tt = sel(target, target);
    let s_to = sel(target, observed);
    let s_oo = sel(observed, observed);
    let mu_t = DVector::from_fn(target.len(), |i, _| mean[target[i]]);
    let mu_o = DVector::from_fn(observed.len(), |i, _| mean[observed[i]]);
    if observed.is_empty() {
        return (mu_t, s_tt);
    }
    let inv = s_oo.clone().cholesky().expect("observed block SPD").inverse();
    let gain = &s_to * &inv;
    let m = &mu_t + &gain * (values - mu_o);
    let c = &s_tt - &gain * s_to.transpose();
    (m, c)
}

/// Log density of `N(mean, cov)` at `x`, by explicit Cholesky.
pub fn mvn_logpdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let k = x.len() as f64;
    let ch = cov.clone().cholesky().expect("covariance SPD");
    let d = x - mean;
    let sol = ch.solve(&d);
    let logdet: f64 = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (k * (2.0 * std::f64::consts::PI).ln() + logdet + d.dot(&sol))
}

/// Filtering, smoothing and log-likelihood by conditioning the joint Gaussian.
pub struct ConditioningOracle {
    pub predicted: Vec<(DVector<f64>, DMatrix<f64>)>,
    pub filtered: Vec<(DVector<f64>, DMatrix<f64>)>,
    pub smoothed: Vec<(DVector<f64>, DMatrix<f64>)>,
    pub loglik: f64,
}

/// `y` is `n × m` (rows are time points).
pub fn condition_on_observations(sys: &LinearGaussian, y: &DMatrix<f64>) -> ConditioningOracle {
    let n = y.nrows();
    let p = sys.t.nrows();
    let m = sys.z.nrows();
    let (mean, cov) = joint_moments(sys, n);
    let obs_idx = |upto: usize| -> Vec<usize> { (0..upto * m).map(|i| n * p + i).collect() };
    let obs_vals = |upto: usize| -> DVector<f64> {
        DVector::from_fn(upto * m, |i, _| y[(i / m, i % m)])
    };
    let state_idx = |t: usize| -> Vec<usize> { (t * p..(t + 1) * p).collect() };

    let mut predicted = Vec::with_capacity(n);
    let mut filtered = Vec::with_capacity(n);
    let mut smoothed = Vec::with_capacity(n);
    for t in 0..n {
        predicted.push(condition(&mean, &cov, &state_idx(t), &obs_idx(t), &obs_vals(t)));
        filtered.push(condition(&mean, &cov, &state_idx(t), &obs_idx(t + 1), &obs_vals(t + 1)));
        smoothed.push(condition(&mean, &cov, &state_idx(t), &obs_idx(n), &obs_vals(n)));
    }
    let all = obs_idx(n);
    let y_mean = DVector::from_fn(all.len(), |i, _| mean[all[i]]);
    let y_cov = DMatrix::from_fn(all.len(), all.len(), |i, j| cov[(all[i], all[j])]);
    let loglik = mvn_logpdf(&obs_vals(n), &y_mean, &y_cov);
    ConditioningOracle { predicted, filtered, smoothed, loglik }
}

/// Dense stacked regression `vec(Y) = X_γ β_γ + vec(E)`, `vec(E) ~ N(0, Σ ⊗ I_n)`,
/// with block-diagonal `X` whose series-`i` block holds columns `ki[i-1]..ki[i]`.
pub struct StackedRegression<'a> {
    pub x: &'a DMatrix<f64>,
    pub ki: &'a [usize],
    pub y: &'a DMatrix<f64>,
    pub sigma: &'a DMatrix<f64>,
    pub kappa: f64,
    pub b: &'a DVector<f64>,
}

impl StackedRegression<'_> {
    fn series_of(&self, j: usize) -> usize {
        self.ki.iter().position(|&k| j < k).expect("index within ki")
    }

    /// Explicit `nm × |γ|` design.
    pub fn design(&self, gamma: &[bool]) -> DMatrix<f64> {
        let n = self.x.nrows();
        let m = self.y.ncols();
        let cols: Vec<usize> = (0..gamma.len()).filter(|&j| gamma[j]).collect();
        let mut d = DMatrix::zeros(n * m, cols.len());
        for (c, &j) in cols.iter().enumerate() {
            let s = self.series_of(j);
            for t in 0..n {
                d[(s * n + t, c)] = self.x[(t, j)];
            }
        }
        d
    }

    fn vec_y(&self) -> DVector<f64> {
        let n = self.y.nrows();
        let m = self.y.ncols();
        DVector::from_fn(n * m, |i, _| self.y[(i % n, i / n)])
    }

    fn noise_cov(&self) -> DMatrix<f64> {
        let n = self.y.nrows();
        self.sigma.kronecker(&DMatrix::identity(n, n))
    }

    fn active_b(&self, gamma: &[bool]) -> DVector<f64> {
        let v: Vec<f64> = (0..gamma.len()).filter(|&j| gamma[j]).map(|j| self.b[j]).collect();
        DVector::from_vec(v)
    }

    /// `log p(vec Y | γ, Σ)` with `β_γ ~ N(b_γ, ((κ/n) X_γᵀX_γ)⁻¹)` integrated out,
    /// evaluated as a dense `nm`-variate normal density. `None` when the prior
    /// precision is singular.
    pub fn log_marginal(&self, gamma: &[bool]) -> Option<f64> {
        let n = self.y.nrows() as f64;
        let xg = self.design(gamma);
        let mut cov = self.noise_cov();
        let mut mean = DVector::zeros(cov.nrows());
        if xg.ncols() > 0 {
            let prior_prec = (xg.transpose() * &xg) * (self.kappa / n);
            let prior_cov = prior_prec.cholesky()?.inverse();
            cov += &xg * prior_cov * xg.transpose();
            mean = &xg * self.active_b(gamma);
        }
        Some(mvn_logpdf(&self.vec_y(), &mean, &cov))
    }

    /// Posterior mean and covariance of `β_γ` by explicit GLS with Kronecker weights.
    pub fn beta_posterior(&self, gamma: &[bool]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.y.nrows() as f64;
        let xg = self.design(gamma);
        let w = self.noise_cov().cholesky().unwrap().inverse();
        let prior_prec = (xg.transpose() * &xg) * (self.kappa / n);
        let prec = xg.transpose() * &w * &xg + &prior_prec;
        let cov = prec.cholesky().unwrap().inverse();
        let rhs = xg.transpose() * &w * self.vec_y() + &prior_prec * self.active_b(gamma);
        (&cov * rhs, cov)
    }
}

/// Exact posterior inclusion probabilities by enumerating all `2^K` models.
pub fn enumerate_inclusion(reg: &StackedRegression<'_>, pii: &[f64]) -> Vec<f64> {
    let k = pii.len();
    let mut logs = Vec::with_capacity(1 << k);
    let mut models = Vec::with_capacity(1 << k);
    for mask in 0u32..(1u32 << k) {
        let gamma: Vec<bool> = (0..k).map(|j| mask & (1 << j) != 0).collect();
        let mut lp = 0.0;
        let mut possible = true;
        for j in 0..k {
            let pr = if gamma[j] { pii[j] } else { 1.0 - pii[j] };
            if pr == 0.0 {
                possible = false;
            }
            lp += pr.ln();
        }
        let lm = if possible { reg.log_marginal(&gamma) } else { None };
        logs.push(lm.map(|v| v + lp).unwrap_or(f64::NEG_INFINITY));
        models.push(gamma);
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    (0..k)
        .map(|j| {
            models
                .iter()
                .zip(&weights)
                .filter(|(g, _)| g[j])
                .map(|(_, w)| w)
                .sum::<f64>()
                / total
        })
        .collect()
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Sample mean and unbiased covariance of row vectors.
pub fn sample_moments(rows: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = rows.len() as f64;
    let k = rows[0].len();
    let mut mean = DVector::zeros(k);
    for r in rows {
        mean += r;
    }
    mean /= n;
    let mut cov = DMatrix::zeros(k, k);
    for r in rows {
        let d = r - &mean;
        cov += &d * d.transpose();
    }
    cov /= n - 1.0;
    (mean, cov)
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}
