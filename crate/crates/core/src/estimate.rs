//! Parameter estimation: Gaussian maximum likelihood (on increments or on
//! centred levels) and matching correlations.
//!
//! The covariance is linear in `sigma^2`, so for fixed `phi` the likelihood
//! is maximised in closed form by `sigma^2 = Q / m` (with `Q` the quadratic
//! form under unit noise and `m` the data length). The optimisers therefore
//! search over `phi` alone. Inadmissible `phi` (a rate with non-positive real
//! part) scores as infinitely bad.

use rand::Rng;
use rayon::prelude::*;

use crate::covariance::{diff_row, CovarianceModel};
use crate::error::{OupError, Result};
use crate::optim::{nelder_mead_restarts, NelderMeadOptions};
use crate::params::{phi_from_kappa, KappaVector, PhiVector};
use crate::series::TimeSeriesSample;
use crate::simulate::rng_for;
use crate::toeplitz::ToeplitzMatrix;

use num_complex::Complex64;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    MleDiff,
    MleCentered,
    Mce,
}

impl FitMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FitMethod::MleDiff => "mle-diff",
            FitMethod::MleCentered => "mle-centered",
            FitMethod::Mce => "mce",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodVariant {
    /// Likelihood of the first differences; the mean cancels.
    Diff,
    /// Likelihood of the mean-removed levels.
    Centered,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Fitted `phi`, `sigma^2` and mean.
    pub model: PhiVector,
    pub method: FitMethod,
    /// Log-likelihood at the optimum (MLE) or the matching distance (MCE).
    pub objective: f64,
    /// Correlation horizon used by MCE; zero for MLE.
    pub horizon: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn kappa(&self) -> KappaVector {
        self.model.kappa().expect("fit results are admissible")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Random starting points for matching correlations.
    pub starts: usize,
    pub seed: u64,
    pub simplex: NelderMeadOptions,
    /// Extra simplex restarts from the best point.
    pub restarts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { starts: 20, seed: 0x5eed, simplex: NelderMeadOptions::default(), restarts: 2 }
    }
}

/// `gamma_e(h) = (1/n) sum_{i} x_i x_{i+h}` for `h = 0..=maxlag`, after the
/// sample's mean policy has been applied.
pub fn empirical_autocovariance(x: &TimeSeriesSample, maxlag: usize) -> Vec<f64> {
    assert!(maxlag < x.len(), "maxlag must be smaller than the series length");
    let v = x.centered_values();
    let n = v.len() as f64;
    (0..=maxlag).map(|h| v.iter().zip(&v[h..]).map(|(a, b)| a * b).sum::<f64>() / n).collect()
}

/// `rho_e(h) = gamma_e(h) / gamma_e(0)` for `h = 1..=maxlag`.
pub fn empirical_autocorrelation(x: &TimeSeriesSample, maxlag: usize) -> Vec<f64> {
    let g = empirical_autocovariance(x, maxlag);
    g[1..].iter().map(|v| v / g[0]).collect()
}

fn gaussian_loglik(m: &ToeplitzMatrix, data: &[f64], sigma2: f64) -> f64 {
    match m.innovations(data) {
        Ok(inn) => {
            let n = data.len() as f64;
            -0.5 * n * LN_2PI - 0.5 * (inn.log_det + n * sigma2.ln()) - 0.5 * inn.quad_form / sigma2
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Unit-noise covariance matrix and data vector for a likelihood variant.
fn likelihood_parts(
    x: &TimeSeriesSample,
    phi: &[f64],
    variant: LikelihoodVariant,
) -> Option<(ToeplitzMatrix, Vec<f64>)> {
    let unit = PhiVector::new(phi.to_vec(), 1.0, 0.0).ok()?;
    let cov = CovarianceModel::from_model(&unit).ok()?;
    match variant {
        LikelihoodVariant::Diff => {
            let n = x.len() - 1;
            let g = cov.gamma_grid(n, x.tau);
            Some((ToeplitzMatrix::new(diff_row(&g, n)), x.differences()))
        }
        LikelihoodVariant::Centered => {
            let g = cov.gamma_grid(x.len() - 1, x.tau);
            Some((ToeplitzMatrix::new(g), x.centered_values()))
        }
    }
}

/// Gaussian log-likelihood of the increments under `model`.
/// Returns `-inf` for inadmissible or numerically degenerate models.
pub fn log_likelihood_diff(x: &TimeSeriesSample, model: &PhiVector) -> f64 {
    log_likelihood(x, model, LikelihoodVariant::Diff)
}

/// Gaussian log-likelihood of the mean-removed levels under `model`.
pub fn log_likelihood_centered(x: &TimeSeriesSample, model: &PhiVector) -> f64 {
    log_likelihood(x, model, LikelihoodVariant::Centered)
}

pub fn log_likelihood(x: &TimeSeriesSample, model: &PhiVector, variant: LikelihoodVariant) -> f64 {
    match likelihood_parts(x, &model.phi, variant) {
        Some((m, data)) => gaussian_loglik(&m, &data, model.sigma2),
        None => f64::NEG_INFINITY,
    }
}

/// Log-likelihood maximised over `sigma^2`, together with the maximiser.
pub fn profile_log_likelihood(x: &TimeSeriesSample, phi: &[f64], variant: LikelihoodVariant) -> (f64, f64) {
    let Some((m, data)) = likelihood_parts(x, phi, variant) else {
        return (f64::NEG_INFINITY, f64::NAN);
    };
    match m.innovations(&data) {
        Ok(inn) => {
            let n = data.len() as f64;
            let sigma2 = inn.quad_form / n;
            let ll = -0.5 * n * (LN_2PI + sigma2.ln() + 1.0) - 0.5 * inn.log_det;
            (ll, sigma2)
        }
        Err(_) => (f64::NEG_INFINITY, f64::NAN),
    }
}

/// Maximum likelihood over `(phi, sigma^2)` by simplex search on `phi`.
///
/// Without `init` the matching-correlations estimate (default horizon) is
/// used as the starting point.
pub fn mle_fit(
    x: &TimeSeriesSample,
    p: usize,
    variant: LikelihoodVariant,
    init: Option<&PhiVector>,
    opts: &FitOptions,
) -> Result<FitResult> {
    if p == 0 {
        return Err(OupError::InvalidArgument("order must be at least 1".into()));
    }
    if x.len() <= p + 1 {
        return Err(OupError::InvalidArgument(format!("series of length {} is too short for order {p}", x.len())));
    }
    let admissible_init = init.filter(|m| m.order() == p && m.is_admissible()).map(|m| m.phi.clone());
    let start = match admissible_init {
        Some(phi) => phi,
        None => mce_fit(x, p, default_horizon(x.len()), opts).map_err(|_| OupError::NoAdmissibleStart)?.model.phi,
    };
    if !profile_log_likelihood(x, &start, variant).0.is_finite() {
        return Err(OupError::NoAdmissibleStart);
    }
    let objective = |phi: &[f64]| -profile_log_likelihood(x, phi, variant).0;
    let best = nelder_mead_restarts(objective, &start, &opts.simplex, opts.restarts);
    let (ll, sigma2) = profile_log_likelihood(x, &best.x, variant);
    let mu = match variant {
        LikelihoodVariant::Centered => x.mean_estimate(),
        LikelihoodVariant::Diff => x.sample_mean(),
    };
    Ok(FitResult {
        model: PhiVector::new(best.x, sigma2, mu)?,
        method: match variant {
            LikelihoodVariant::Diff => FitMethod::MleDiff,
            LikelihoodVariant::Centered => FitMethod::MleCentered,
        },
        objective: ll,
        horizon: 0,
        iterations: best.evals,
        converged: best.converged,
    })
}

/// `floor(0.9 n)`, capped below the series length.
pub fn default_horizon(len: usize) -> usize {
    ((0.9 * len as f64).floor() as usize).clamp(1, len - 1)
}

/// Euclidean distance between `rho_e` and the model correlations at lags
/// `1..=rho_e.len()`.
///
/// Infinite for inadmissible `phi` and for rates outside the band
/// `|Im kappa| < pi / tau`: a frequency and its aliases `+- 2 pi k / tau`
/// give near-identical correlations on the sampling grid.
pub fn mce_objective(rho_e: &[f64], phi: &[f64], tau: f64) -> f64 {
    let Ok(unit) = PhiVector::new(phi.to_vec(), 1.0, 0.0) else {
        return f64::INFINITY;
    };
    let Ok(cov) = CovarianceModel::from_model(&unit) else {
        return f64::INFINITY;
    };
    if cov.kernel().rates().iter().any(|(k, _)| k.im.abs() >= nyquist(tau)) {
        return f64::INFINITY;
    }
    let g0 = cov.gamma0();
    if !(g0 > 0.0) || !g0.is_finite() {
        return f64::INFINITY;
    }
    rho_e
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let d = r - cov.gamma((i + 1) as f64 * tau) / g0;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn nyquist(tau: f64) -> f64 {
    std::f64::consts::PI / tau
}

/// Random admissible `phi` with rates log-uniform in `[1e-3, 5]`, with a
/// random number of conjugate pairs. Imaginary parts are also capped just
/// below `max_freq`.
pub fn random_start(p: usize, max_freq: f64, rng: &mut impl Rng) -> Vec<f64> {
    fn log_uniform(rng: &mut impl Rng, hi: f64) -> f64 {
        rng.random_range(1e-3f64.ln()..hi.ln()).exp()
    }
    let pairs = rng.random_range(0..=p / 2);
    let mut kappa = Vec::with_capacity(p);
    for _ in 0..pairs {
        let re = log_uniform(rng, 5.0);
        let im = log_uniform(rng, (0.99 * max_freq).clamp(2e-3, 5.0));
        kappa.push(Complex64::new(re, im));
        kappa.push(Complex64::new(re, -im));
    }
    while kappa.len() < p {
        kappa.push(Complex64::new(log_uniform(rng, 5.0), 0.0));
    }
    let k = KappaVector::from_complex(&kappa).expect("positive real parts");
    phi_from_kappa(&k).expect("conjugation closed")
}

/// Matching-correlations estimate with horizon `horizon`.
pub fn mce_fit(x: &TimeSeriesSample, p: usize, horizon: usize, opts: &FitOptions) -> Result<FitResult> {
    mce_fit_with_starts(x, p, horizon, opts, &[])
}

/// As [`mce_fit`], with extra starting points tried alongside the random ones.
pub fn mce_fit_with_starts(
    x: &TimeSeriesSample,
    p: usize,
    horizon: usize,
    opts: &FitOptions,
    extra_starts: &[Vec<f64>],
) -> Result<FitResult> {
    if p == 0 {
        return Err(OupError::InvalidArgument("order must be at least 1".into()));
    }
    if horizon == 0 || horizon >= x.len() {
        return Err(OupError::InvalidArgument(format!("horizon must be in 1..{}, got {horizon}", x.len())));
    }
    let gamma_e = empirical_autocovariance(x, horizon);
    if !(gamma_e[0] > 0.0) {
        return Err(OupError::InvalidArgument("series has zero empirical variance".into()));
    }
    let rho_e: Vec<f64> = gamma_e[1..].iter().map(|g| g / gamma_e[0]).collect();

    let mut starts: Vec<Vec<f64>> = extra_starts.iter().filter(|s| s.len() == p).cloned().collect();
    starts.extend((0..opts.starts).map(|i| random_start(p, nyquist(x.tau), &mut rng_for(opts.seed, i as u64))));
    if starts.is_empty() {
        return Err(OupError::NoAdmissibleStart);
    }

    let simplex = NelderMeadOptions { initial_step: 0.1, ..opts.simplex };
    let objective = |phi: &[f64]| mce_objective(&rho_e, phi, x.tau);
    let results: Vec<_> = starts
        .par_iter()
        .filter(|s| objective(s).is_finite())
        .map(|s| nelder_mead_restarts(objective, s, &simplex, opts.restarts))
        .collect();
    let iterations = results.iter().map(|r| r.evals).sum();
    let best = results
        .into_iter()
        .filter(|r| r.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or(OupError::NoAdmissibleStart)?;

    let unit = CovarianceModel::from_model(&PhiVector::new(best.x.clone(), 1.0, 0.0)?)?;
    let sigma2 = gamma_e[0] / unit.gamma0();
    Ok(FitResult {
        model: PhiVector::new(best.x, sigma2, x.mean_estimate())?,
        method: FitMethod::Mce,
        objective: best.value,
        horizon,
        iterations,
        converged: best.converged,
    })
}
