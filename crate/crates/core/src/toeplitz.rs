//! Symmetric Toeplitz covariance matrices.
//!
//! Likelihoods and sequential sampling go through the Durbin-Levinson
//! recursion, an `O(n^2)` factorisation of the inverse that never stores the
//! dense matrix. Dense Cholesky is used where the matrix is needed anyway.
//! Both factorisations retry with diagonal jitter before giving up.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{OupError, Result};

/// Diagonal jitter ladder, as multiples of the diagonal entry.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzMatrix {
    first_row: Vec<f64>,
}

/// Result of running the innovations recursion over a data vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Innovations {
    /// `log det` of the matrix.
    pub log_det: f64,
    /// `x^T M^{-1} x`.
    pub quad_form: f64,
    /// Jitter that was added to the diagonal.
    pub jitter: f64,
}

impl ToeplitzMatrix {
    pub fn new(first_row: Vec<f64>) -> Self {
        assert!(!first_row.is_empty(), "Toeplitz matrix needs at least one entry");
        Self { first_row }
    }

    pub fn dim(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.first_row[i.abs_diff(j)]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Dense Cholesky factor, escalating diagonal jitter on failure.
    pub fn cholesky(&self) -> Result<(Cholesky<f64, Dyn>, f64)> {
        let dense = self.to_dense();
        let scale = self.first_row[0].abs();
        for &level in &JITTER_LADDER {
            let jitter = level * scale;
            let mut m = dense.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
            if let Some(c) = m.cholesky() {
                return Ok((c, jitter));
            }
        }
        Err(OupError::NotPositiveDefinite { dim: self.dim() })
    }

    /// Log-determinant and quadratic form of `x` via Durbin-Levinson.
    pub fn innovations(&self, x: &[f64]) -> Result<Innovations> {
        assert_eq!(x.len(), self.dim(), "data length must match the matrix dimension");
        let scale = self.first_row[0].abs();
        for &level in &JITTER_LADDER {
            let jitter = level * scale;
            let mut log_det = 0.0;
            let mut quad_form = 0.0;
            let ok = durbin_levinson(&self.first_row, jitter, |k, coeffs, v| {
                let pred: f64 = coeffs.iter().enumerate().map(|(j, a)| a * x[k - 1 - j]).sum();
                let e = x[k] - pred;
                log_det += v.ln();
                quad_form += e * e / v;
            });
            if ok {
                return Ok(Innovations { log_det, quad_form, jitter });
            }
        }
        Err(OupError::NotPositiveDefinite { dim: self.dim() })
    }

    /// Maps i.i.d. standard normals `z` to a centred Gaussian vector with this
    /// covariance, one coordinate at a time.
    pub fn correlate_sequential(&self, z: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(z.len(), self.dim(), "noise length must match the matrix dimension");
        let scale = self.first_row[0].abs();
        for &level in &JITTER_LADDER {
            let jitter = level * scale;
            let mut out = vec![0.0; z.len()];
            let ok = durbin_levinson(&self.first_row, jitter, |k, coeffs, v| {
                let pred: f64 = coeffs.iter().enumerate().map(|(j, a)| a * out[k - 1 - j]).sum();
                out[k] = pred + v.sqrt() * z[k];
            });
            if ok {
                return Ok(out);
            }
        }
        Err(OupError::NotPositiveDefinite { dim: self.dim() })
    }

    /// Cheap positive-definiteness check.
    pub fn is_positive_definite(&self) -> bool {
        durbin_levinson(&self.first_row, 0.0, |_, _, _| {})
    }
}

/// Runs the recursion, calling `step(k, a, v)` with the order-`k` one-step
/// predictor coefficients `a` (for lags `1..=k`) and prediction variance `v`.
/// Returns false if the matrix is not numerically positive definite.
fn durbin_levinson(r: &[f64], jitter: f64, mut step: impl FnMut(usize, &[f64], f64)) -> bool {
    let n = r.len();
    let r0 = r[0] + jitter;
    if !(r0 > 0.0) || !r0.is_finite() {
        return false;
    }
    let mut a: Vec<f64> = Vec::with_capacity(n);
    let mut prev = Vec::with_capacity(n);
    let mut v = r0;
    step(0, &a, v);
    for k in 1..n {
        let acc: f64 = a.iter().enumerate().map(|(j, aj)| aj * r[k - 1 - j]).sum();
        let refl = (r[k] - acc) / v;
        if !refl.is_finite() || refl.abs() >= 1.0 {
            return false;
        }
        prev.clear();
        prev.extend_from_slice(&a);
        for j in 0..a.len() {
            a[j] = prev[j] - refl * prev[prev.len() - 1 - j];
        }
        a.push(refl);
        v *= 1.0 - refl * refl;
        if !(v > 0.0) {
            return false;
        }
        step(k, &a, v);
    }
    true
}
