//! Exact simulation of OU(p) processes on equally spaced grids.
//!
//! Grid draws apply the sequential (Durbin-Levinson) factorisation of the
//! grid covariance to i.i.d. standard normals, so they are exact for any
//! order. Finer paths are drawn conditionally on coarse observations.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::covariance::CovarianceModel;
use crate::error::{OupError, Result};
use crate::params::PhiVector;
use crate::predict::Conditioner;
use crate::series::TimeSeriesSample;
use crate::toeplitz::JITTER_LADDER;

/// Generator for replicate `stream` of `seed`. Streams are independent.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Draws `(x(0), x(tau), ..., x(n tau))` from the stationary law plus `mu`.
pub fn simulate_grid(model: &PhiVector, n: usize, tau: f64, seed: u64) -> Result<TimeSeriesSample> {
    simulate_grid_with(model, n, tau, &mut rng_for(seed, 0))
}

/// As [`simulate_grid`] but drawing from a caller-supplied generator.
pub fn simulate_grid_with(model: &PhiVector, n: usize, tau: f64, rng: &mut impl Rng) -> Result<TimeSeriesSample> {
    if n < 1 {
        return Err(OupError::InvalidArgument("n must be at least 1".into()));
    }
    let cov = CovarianceModel::from_model(model)?;
    let g = crate::toeplitz::ToeplitzMatrix::new(cov.gamma_grid(n, tau));
    let z = normals(rng, n + 1);
    let mut values = g.correlate_sequential(&z)?;
    for v in &mut values {
        *v += model.mu;
    }
    TimeSeriesSample::new(values, tau)
}

/// `reps` independent grid draws, replicate `r` using stream `r` of `seed`.
pub fn simulate_replicates(
    model: &PhiVector,
    n: usize,
    tau: f64,
    seed: u64,
    reps: usize,
) -> Result<Vec<TimeSeriesSample>> {
    (0..reps).into_par_iter().map(|r| simulate_grid_with(model, n, tau, &mut rng_for(seed, r as u64))).collect()
}

/// Innovation variance of the sampled OU(1) recursion,
/// `sigma^2 / (2 lambda) (1 - e^{-2 lambda tau})`.
pub fn ou1_innovation_variance(lambda: f64, sigma: f64, tau: f64) -> f64 {
    sigma * sigma / (2.0 * lambda) * (-(-2.0 * lambda * tau).exp_m1())
}

/// OU(1) sampled through the exact recursion `X_{i+1} = e^{-lambda tau} X_i + Z_i`.
pub fn simulate_ou1_recursive(lambda: f64, sigma: f64, n: usize, tau: f64, seed: u64) -> Result<TimeSeriesSample> {
    if !(lambda > 0.0) {
        return Err(OupError::StationarityViolation { re: lambda, im: 0.0 });
    }
    let mut rng = rng_for(seed, 0);
    let a = (-lambda * tau).exp();
    let innov_sd = ou1_innovation_variance(lambda, sigma, tau).sqrt();
    let mut x = Vec::with_capacity(n + 1);
    let x0: f64 = rng.sample(StandardNormal);
    x.push(x0 * sigma / (2.0 * lambda).sqrt());
    for i in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        x.push(a * x[i] + innov_sd * z);
    }
    TimeSeriesSample::new(x, tau)
}

/// Draws the process at arbitrary times given the observations.
///
/// Targets that coincide with observation times are not allowed; use
/// [`refine_path`] to get a path that includes the observed points.
pub fn conditional_path(
    model: &PhiVector,
    observed: &TimeSeriesSample,
    targets: &[f64],
    seed: u64,
) -> Result<Vec<f64>> {
    let cond = Conditioner::new(model, observed, None)?;
    let (mean, cov) = cond.joint(targets);
    let scale = cond.cov.gamma0();
    let m = targets.len();
    for &level in &JITTER_LADDER {
        let mut c = cov.clone();
        for i in 0..m {
            c[(i, i)] += level * scale;
        }
        if let Some(chol) = c.cholesky() {
            let mut rng = rng_for(seed, 0);
            let z = DVector::from_vec(normals(&mut rng, m));
            return Ok((mean + chol.l() * z).iter().copied().collect());
        }
    }
    Err(OupError::NotPositiveDefinite { dim: m })
}

/// Refines a coarse sample onto a grid `factor` times finer, drawing the new
/// points from their conditional law. Coarse values are kept exactly.
pub fn refine_path(model: &PhiVector, coarse: &TimeSeriesSample, factor: usize, seed: u64) -> Result<TimeSeriesSample> {
    if factor < 2 {
        return Err(OupError::InvalidArgument("refinement factor must be at least 2".into()));
    }
    let fine_tau = coarse.tau / factor as f64;
    let total = (coarse.len() - 1) * factor + 1;
    let targets: Vec<f64> = (0..total).filter(|k| k % factor != 0).map(|k| coarse.t0 + k as f64 * fine_tau).collect();
    let drawn = conditional_path(model, coarse, &targets, seed)?;
    let mut drawn = drawn.into_iter();
    let values = (0..total)
        .map(|k| if k % factor == 0 { coarse.values[k / factor] } else { drawn.next().expect("one draw per target") })
        .collect();
    TimeSeriesSample::with_origin(values, fine_tau, coarse.t0)
}
