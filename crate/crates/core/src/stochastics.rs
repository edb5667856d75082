//! Seedable samplers for every distribution the model uses.
//!
//! All randomness flows through [`RngStream`], a ChaCha20 generator keyed by a
//! 64-bit seed and a stream id. Independent chains use distinct stream ids of
//! the same seed.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Open01, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{check_psd, psd_factor, symmetrize};

/// Name of the generator, recorded in every persisted output.
pub const RNG_ALGORITHM: &str = "chacha20 (rand_chacha, seed_from_u64 + set_stream)";

/// A deterministic random stream identified by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh stream sharing this seed with a different id.
    pub fn fork(&self, stream: u64) -> Self {
        RngStream::new(self.seed, stream)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub(crate) fn standard_normal_vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.standard_normal())
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Multivariate normal sampler with a cached square-root factor.
#[derive(Clone, Debug)]
pub struct MvnSampler {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
}

impl MvnSampler {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() {
            return Err(Error::validation(format!(
                "covariance is {}x{} but mean has length {}",
                cov.nrows(),
                cov.ncols(),
                mean.len()
            )));
        }
        let factor = psd_factor(cov, "covariance")?;
        Ok(MvnSampler { mean, factor })
    }

    pub fn zero_mean(cov: &DMatrix<f64>) -> Result<Self> {
        MvnSampler::new(DVector::zeros(cov.nrows()), cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample(&self, rng: &mut RngStream) -> DVector<f64> {
        let z = rng.standard_normal_vector(self.mean.len());
        &self.mean + &self.factor * z
    }
}

/// One draw from `N(mean, cov)`; `cov` may be semidefinite.
pub fn draw_mvnormal(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    Ok(MvnSampler::new(mean.clone(), cov)?.sample(rng))
}

/// Natural log of a Gamma(shape, 1) draw, computed without underflow for
/// shapes far below one.
fn ln_standard_gamma(shape: f64, rng: &mut RngStream) -> f64 {
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("shape checked").sample(&mut rng.rng);
        g.ln()
    } else {
        // G(a) = G(a + 1) · U^{1/a}
        let g: f64 = Gamma::new(shape + 1.0, 1.0).expect("shape checked").sample(&mut rng.rng);
        let u = rng.uniform();
        g.ln() + u.ln() / shape
    }
}

/// Inverse-gamma draw with density ∝ x^{-shape-1} exp(-scale/x), i.e. the
/// reciprocal of a Gamma(shape, rate = scale) draw.
///
/// Extremely heavy tails (tiny shape) can exceed the f64 range; such draws are
/// clamped to `f64::MAX`.
pub fn draw_inverse_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::validation(format!(
            "inverse-gamma needs positive finite shape and scale (got {shape}, {scale})"
        )));
    }
    let ln_x = scale.ln() - ln_standard_gamma(shape, rng);
    Ok(ln_x.exp().min(f64::MAX))
}

/// Inverse-Wishart draw `IW(df, scale)` (mean `scale / (df - m - 1)`) via the
/// Bartlett decomposition of the matching Wishart on `scale⁻¹`.
pub fn draw_inverse_wishart(
    df: f64,
    scale: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    check_psd(scale, "inverse-Wishart scale")?;
    let m = scale.nrows();
    if m == 0 {
        return Err(Error::validation("inverse-Wishart scale must be non-empty"));
    }
    if !(df > (m as f64) - 1.0) || !df.is_finite() {
        return Err(Error::validation(format!(
            "inverse-Wishart degrees of freedom {df} must exceed m - 1 = {}",
            m - 1
        )));
    }
    let scale_chol = scale
        .clone()
        .cholesky()
        .ok_or_else(|| Error::validation("inverse-Wishart scale must be positive definite"))?;
    let precision = scale_chol.inverse();
    let l = precision
        .cholesky()
        .ok_or_else(|| Error::numeric("inverse-Wishart: scale inverse lost definiteness"))?
        .l();

    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        // chi-square with df - i degrees of freedom is 2·Gamma((df - i)/2)
        let half = 0.5 * (df - i as f64);
        let chi2 = 2.0 * ln_standard_gamma(half, rng).exp();
        a[(i, i)] = chi2.sqrt();
        for j in 0..i {
            a[(i, j)] = rng.standard_normal();
        }
    }
    // W = B Bᵀ with B = L A lower triangular, so W⁻¹ = B⁻ᵀ B⁻¹.
    let b = &l * &a;
    let b_inv = b
        .solve_lower_triangular(&DMatrix::identity(m, m))
        .ok_or_else(|| Error::numeric("inverse-Wishart: singular Bartlett factor"))?;
    let mut draw = b_inv.transpose() * b_inv;
    symmetrize(&mut draw);
    Ok(draw)
}

pub fn draw_poisson(rate: f64, rng: &mut RngStream) -> Result<u64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::validation(format!("Poisson rate must be positive (got {rate})")));
    }
    let d = Poisson::new(rate).map_err(|e| Error::validation(format!("Poisson: {e}")))?;
    let x: f64 = d.sample(&mut rng.rng);
    Ok(x as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_repeat() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        for _ in 0..100 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
    }

    #[test]
    fn streams_are_uncorrelated() {
        let mut a = RngStream::new(11, 0);
        let mut b = RngStream::new(11, 1);
        let n = 100_000;
        let (mut sab, mut saa, mut sbb, mut sa, mut sb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = a.standard_normal();
            let y = b.standard_normal();
            sa += x;
            sb += y;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let nf = n as f64;
        let cov = sab / nf - sa * sb / nf / nf;
        let r = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
        assert!(r.abs() < 0.02, "r = {r}");
    }

    #[test]
    fn degenerate_covariance_returns_mean() {
        let mut rng = RngStream::new(1, 0);
        let mean = DVector::from_vec(vec![3.0, -1.0]);
        for _ in 0..10 {
            let d = draw_mvnormal(&mean, &DMatrix::zeros(2, 2), &mut rng).unwrap();
            assert_eq!(d, mean);
        }
    }

    #[test]
    fn mvnormal_rejects_bad_covariances() {
        let mut rng = RngStream::new(1, 0);
        let mean = DVector::zeros(2);
        let nonsym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(draw_mvnormal(&mean, &nonsym, &mut rng), Err(Error::Validation(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!(matches!(draw_mvnormal(&mean, &indef, &mut rng), Err(Error::Validation(_))));
    }

    #[test]
    fn parameter_errors() {
        let mut rng = RngStream::new(1, 0);
        assert!(draw_inverse_gamma(0.0, 1.0, &mut rng).is_err());
        assert!(draw_inverse_gamma(1.0, -1.0, &mut rng).is_err());
        assert!(draw_poisson(0.0, &mut rng).is_err());
        assert!(draw_inverse_wishart(0.5, &DMatrix::identity(2, 2), &mut rng).is_err());
    }

    #[test]
    fn tiny_shape_inverse_gamma_is_positive_and_finite() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..10_000 {
            let x = draw_inverse_gamma(0.005, 0.005, &mut rng).unwrap();
            assert!(x > 0.0 && x.is_finite());
        }
    }

    #[test]
    fn vanishing_scale_sends_draws_to_zero() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..1000 {
            let x = draw_inverse_gamma(2.0, 1e-12, &mut rng).unwrap();
            assert!(x < 1e-9);
        }
    }

    #[test]
    fn vanishing_poisson_rate_gives_zeros() {
        let mut rng = RngStream::new(5, 0);
        let zeros = (0..10_000).filter(|_| draw_poisson(1e-9, &mut rng).unwrap() == 0).count();
        assert_eq!(zeros, 10_000);
    }
}
