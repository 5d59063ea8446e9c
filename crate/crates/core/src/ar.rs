//! AR(p) reference models and the OU(2) versus AR(2) correlation gap.
//!
//! An OU(1) sampled every `tau` is exactly AR(1). For order two this breaks
//! down: matching the first two autocorrelations of an OU(2) with an AR(2)
//! leaves a mismatch at lag three. [`lemma_gap`] measures it.

use rayon::prelude::*;

use crate::error::{OupError, Result};
use crate::estimate::empirical_autocovariance;
use crate::poly::monic_roots;
use crate::series::TimeSeriesSample;

/// `x_t = sum_j coeffs[j] x_{t-1-j} + e_t` with `Var e_t = noise_var`.
#[derive(Debug, Clone, PartialEq)]
pub struct ARModel {
    pub coeffs: Vec<f64>,
    pub noise_var: f64,
}

impl ARModel {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Largest modulus of the companion-matrix eigenvalues.
    pub fn spectral_radius(&self) -> f64 {
        let p = self.coeffs.len();
        // z^p - a_1 z^(p-1) - ... - a_p
        let lower: Vec<f64> = (0..p).map(|k| -self.coeffs[p - 1 - k]).collect();
        monic_roots(&lower).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_stationary(&self) -> bool {
        self.spectral_radius() < 1.0
    }

    /// Autocorrelations at lags `1..=n`, given the first `p` of them.
    pub fn extend_autocorrelations(&self, initial: &[f64], n: usize) -> Vec<f64> {
        let p = self.order();
        assert_eq!(initial.len(), p, "need the first p autocorrelations");
        // rho(-k) = rho(k), rho(0) = 1
        let mut rho = vec![1.0];
        rho.extend_from_slice(initial);
        while rho.len() <= n {
            let k = rho.len();
            let next = self.coeffs.iter().enumerate().map(|(j, a)| a * rho[k - 1 - j]).sum();
            rho.push(next);
        }
        rho[1..=n].to_vec()
    }
}

/// Solves the Yule-Walker equations for `rho(1..=p)` by Levinson recursion.
/// Returns the coefficients and the ratio `noise_var / gamma(0)`.
fn levinson_yule_walker(rho: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut a: Vec<f64> = Vec::with_capacity(rho.len());
    let mut v = 1.0;
    for k in 0..rho.len() {
        let acc: f64 = a.iter().enumerate().map(|(j, aj)| aj * rho[k - 1 - j]).sum();
        let refl = (rho[k] - acc) / v;
        if !refl.is_finite() || refl.abs() >= 1.0 {
            return Err(OupError::SingularSystem);
        }
        let prev = a.clone();
        for j in 0..a.len() {
            a[j] = prev[j] - refl * prev[prev.len() - 1 - j];
        }
        a.push(refl);
        v *= 1.0 - refl * refl;
    }
    Ok((a, v))
}

/// AR(p) fit from the empirical autocorrelations (divisor `n`).
pub fn yule_walker_fit(x: &TimeSeriesSample, p: usize) -> Result<ARModel> {
    if p == 0 || p >= x.len() {
        return Err(OupError::InvalidArgument(format!("AR order must be in 1..{}, got {p}", x.len())));
    }
    let g = empirical_autocovariance(x, p);
    if !(g[0] > 0.0) {
        return Err(OupError::SingularSystem);
    }
    let rho: Vec<f64> = g[1..].iter().map(|v| v / g[0]).collect();
    let (coeffs, ratio) = levinson_yule_walker(&rho)?;
    Ok(ARModel { coeffs, noise_var: g[0] * ratio })
}

/// AR(2) with the given first two autocorrelations.
pub fn ar2_from_correlations(r1: f64, r2: f64) -> Result<ARModel> {
    check_ar2_region(r1, r2)?;
    let d = 1.0 - r1 * r1;
    let a1 = r1 * (1.0 - r2) / d;
    let a2 = (r2 - r1 * r1) / d;
    Ok(ARModel { coeffs: vec![a1, a2], noise_var: 1.0 - a1 * r1 - a2 * r2 })
}

fn check_ar2_region(r1: f64, r2: f64) -> Result<()> {
    let ok = r1.abs() < 1.0 && 2.0 * r1 * r1 - 1.0 <= r2 && r2 <= 1.0;
    if ok {
        Ok(())
    } else {
        Err(OupError::AdmissibilityViolation { r1, r2 })
    }
}

fn r3_formula(r1: f64, r2: f64) -> f64 {
    r1 / (1.0 - r1 * r1) * (2.0 * r2 - r1 * r1 - r2 * r2)
}

/// Lag-3 autocorrelation of the AR(2) with lag-1 and lag-2 autocorrelations `r1`, `r2`.
pub fn ar2_r3(r1: f64, r2: f64) -> Result<f64> {
    check_ar2_region(r1, r2)?;
    Ok(r3_formula(r1, r2))
}

/// Gap between the two branches below which the repeated-root series is used.
const REPEATED_SWITCH: f64 = 1e-6;

/// Lag-`h` autocorrelation of a real OU(2) with rates `lambda1`, `lambda2`
/// sampled every `tau`:
/// `(l2 e^{-l2 h tau} - l1 e^{-l1 h tau}) / (l2 - l1)`.
///
/// Near `lambda1 = lambda2` it is evaluated as a divided difference of
/// `g(l) = l e^{-l s}` by its Taylor series about the midpoint, whose leading
/// term is the repeated-root value `(1 - l s) e^{-l s}`.
pub fn ou2_rho(lambda1: f64, lambda2: f64, h: usize, tau: f64) -> f64 {
    let s = h as f64 * tau;
    let delta = lambda2 - lambda1;
    if delta.abs() < REPEATED_SWITCH {
        let m = 0.5 * (lambda1 + lambda2);
        let e = (-m * s).exp();
        let g1 = e * (1.0 - m * s);
        let g3 = e * (3.0 * s * s - m * s * s * s);
        return g1 + g3 * delta * delta / 24.0;
    }
    (lambda2 * (-lambda2 * s).exp() - lambda1 * (-lambda1 * s).exp()) / delta
}

/// `r3 - rho3` for the OU(2) with real rates `lambda1`, `lambda2` at unit
/// spacing, where `r3` is the lag-3 correlation of the AR(2) matching the
/// first two OU(2) correlations.
pub fn lemma_gap(lambda1: f64, lambda2: f64) -> f64 {
    let r1 = ou2_rho(lambda1, lambda2, 1, 1.0);
    let r2 = ou2_rho(lambda1, lambda2, 2, 1.0);
    r3_formula(r1, r2) - ou2_rho(lambda1, lambda2, 3, 1.0)
}

/// `(lambda1, lambda2, gap)` over the grid `step, 2 step, ..., <= max`, both axes.
pub fn gap_grid(max: f64, step: f64) -> Vec<(f64, f64, f64)> {
    let count = (max / step + 1e-9).floor() as usize;
    let axis: Vec<f64> = (1..=count).map(|i| i as f64 * step).collect();
    axis.par_iter().flat_map_iter(|&l1| axis.iter().map(move |&l2| (l1, l2, lemma_gap(l1, l2)))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r3_special_cases() {
        assert_eq!(ar2_r3(0.0, 0.4).unwrap(), 0.0);
        let r1: f64 = 0.6;
        assert!((ar2_r3(r1, r1 * r1).unwrap() - r1.powi(3)).abs() < 1e-15);
        assert!(ar2_r3(0.9, 0.0).is_err());
        assert!(ar2_r3(1.0, 1.0).is_err());
    }

    #[test]
    fn rho_at_lag_zero_is_one() {
        for (a, b) in [(0.3, 1.2), (0.84, 0.84), (2.0, 0.1)] {
            assert!((ou2_rho(a, b, 0, 1.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn repeated_root_branch_is_continuous() {
        for h in 1..6 {
            let a = ou2_rho(0.84 - 0.495e-6, 0.84 + 0.495e-6, h, 1.0);
            let b = ou2_rho(0.84 - 0.505e-6, 0.84 + 0.505e-6, h, 1.0);
            assert!((a - b).abs() < 1e-9, "h={h}: {a} vs {b}");
        }
    }

    #[test]
    fn ar2_from_correlations_reproduces_r3() {
        let (r1, r2) = (0.5, 0.1);
        let m = ar2_from_correlations(r1, r2).unwrap();
        let rho = m.extend_autocorrelations(&[r1, r2], 3);
        assert!((rho[2] - ar2_r3(r1, r2).unwrap()).abs() < 1e-15);
        assert!(m.is_stationary());
    }
}
