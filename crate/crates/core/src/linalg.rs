use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn scale_of(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

/// Checks symmetry and semidefiniteness with tolerances relative to the
/// largest absolute entry (floored at 1).
pub(crate) fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::validation(format!("{what} must be square")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation(format!("{what} has non-finite entries")));
    }
    let tol = 1e-10 * scale_of(m);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::validation(format!(
                    "{what} is not symmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Returns `L` with `L Lᵀ = m` for a symmetric positive-semidefinite `m`.
///
/// Cholesky is tried first; on failure the eigendecomposition is used with
/// eigenvalues in `[-1e-10·s, 0)` clamped to zero, where `s` is the largest
/// absolute entry. Anything more negative is rejected.
pub(crate) fn psd_factor(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    check_psd(m, what)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.l());
    }
    let tol = 1e-10 * scale_of(m);
    let mut sym = m.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::validation(format!(
            "{what} is indefinite (minimum eigenvalue {min:e})"
        )));
    }
    let mut f = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    Ok(f)
}

/// Inverse (or pseudo-inverse) of a symmetric positive-semidefinite matrix
/// together with its log-determinant when the matrix is positive definite.
pub(crate) struct SymInverse {
    pub inv: DMatrix<f64>,
    pub logdet: Option<f64>,
}

impl SymInverse {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        if n == 0 {
            return SymInverse { inv: DMatrix::zeros(0, 0), logdet: Some(0.0) };
        }
        if let Some(ch) = m.clone().cholesky() {
            let logdet = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let mut inv = ch.inverse();
            symmetrize(&mut inv);
            return SymInverse { inv, logdet: Some(logdet) };
        }
        let mut sym = m.clone();
        symmetrize(&mut sym);
        let eig = SymmetricEigen::new(sym);
        let top = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let cut = top.max(1e-300) * 1e-12;
        let mut inv = DMatrix::zeros(n, n);
        for (j, lam) in eig.eigenvalues.iter().enumerate() {
            if *lam > cut {
                let v = eig.eigenvectors.column(j);
                inv += (v * v.transpose()) / *lam;
            }
        }
        SymInverse { inv, logdet: None }
    }
}

pub(crate) fn is_spd(m: &DMatrix<f64>) -> bool {
    m.clone().cholesky().is_some()
}

pub(crate) fn finite_matrix(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
