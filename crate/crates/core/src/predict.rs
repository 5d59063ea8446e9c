//! Best linear prediction and interpolation with pointwise 2-sigma bands.
//!
//! Given observations at grid times `t_i`, the Gaussian conditional law of
//! `x(t)` at any real time has mean `mu + c(t)^T G^{-1} (x - mu)` and
//! variance `gamma(0) - c(t)^T G^{-1} c(t)`, with `c(t)_i = gamma(|t - t_i|)`
//! and `G` the covariance of the observations. Fitted parameters are plugged
//! in as if known.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::covariance::CovarianceModel;
use crate::error::{OupError, Result};
use crate::params::PhiVector;
use crate::series::TimeSeriesSample;

/// Targets closer than this fraction of the spacing to an observation are
/// treated as that observation.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PredictionRequest {
    pub observed: TimeSeriesSample,
    pub targets: Vec<f64>,
    /// Condition only on the last `window` observations.
    pub window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBand {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl PredictionBand {
    pub fn lower(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.sd).map(|(m, s)| m - 2.0 * s).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.sd).map(|(m, s)| m + 2.0 * s).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Gaussian conditioning on a set of equally spaced observations.
pub(crate) struct Conditioner {
    pub(crate) cov: CovarianceModel,
    mu: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    tau: f64,
    chol: Cholesky<f64, Dyn>,
    /// `G^{-1} (x - mu)`.
    alpha: DVector<f64>,
}

impl Conditioner {
    pub(crate) fn new(model: &PhiVector, observed: &TimeSeriesSample, window: Option<usize>) -> Result<Self> {
        let n = observed.len();
        let w = window.unwrap_or(n);
        if w == 0 || w > n {
            return Err(OupError::InvalidArgument(format!("window must be in 1..={n}, got {w}")));
        }
        let start = n - w;
        let cov = CovarianceModel::from_model(model)?;
        let (chol, _) = cov.gamma_matrix(w - 1, observed.tau).and_then(|g| g.cholesky())?;
        let values = observed.values[start..].to_vec();
        let times: Vec<f64> = (start..n).map(|i| observed.time(i)).collect();
        let centred = DVector::from_iterator(w, values.iter().map(|v| v - model.mu));
        let alpha = chol.solve(&centred);
        Ok(Self { cov, mu: model.mu, times, values, tau: observed.tau, chol, alpha })
    }

    fn cross(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.times.len(), self.times.iter().map(|ti| self.cov.gamma(t - ti)))
    }

    fn observed_index(&self, t: f64) -> Option<usize> {
        let k = ((t - self.times[0]) / self.tau).round();
        if k < 0.0 || k as usize >= self.times.len() {
            return None;
        }
        let i = k as usize;
        ((t - self.times[i]).abs() <= SNAP * self.tau).then_some(i)
    }

    /// Conditional mean and variance of `x(t)`.
    pub(crate) fn mean_var(&self, t: f64) -> (f64, f64) {
        if let Some(i) = self.observed_index(t) {
            return (self.values[i], 0.0);
        }
        let c = self.cross(t);
        let mean = self.mu + c.dot(&self.alpha);
        let b = self.whiten(&c);
        let g0 = self.cov.gamma0();
        let var = (g0 - b.norm_squared()).clamp(0.0, g0);
        (mean, var)
    }

    /// `L^{-1} c`.
    fn whiten(&self, c: &DVector<f64>) -> DVector<f64> {
        self.chol.l_dirty().solve_lower_triangular(c).expect("Cholesky factor has a positive diagonal")
    }

    /// Joint conditional mean and covariance at several unobserved times.
    pub(crate) fn joint(&self, targets: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let m = targets.len();
        let mut mean = DVector::zeros(m);
        let mut whitened = DMatrix::zeros(self.times.len(), m);
        for (j, &t) in targets.iter().enumerate() {
            let c = self.cross(t);
            mean[j] = self.mu + c.dot(&self.alpha);
            whitened.set_column(j, &self.whiten(&c));
        }
        let prior = DMatrix::from_fn(m, m, |i, j| self.cov.gamma(targets[i] - targets[j]));
        let cov = prior - whitened.transpose() * &whitened;
        (mean, cov)
    }
}

/// Conditional mean and standard deviation of the process at each target.
pub fn predict(model: &PhiVector, req: &PredictionRequest) -> Result<PredictionBand> {
    if req.targets.is_empty() {
        return Err(OupError::InvalidArgument("prediction needs at least one target time".into()));
    }
    let cond = Conditioner::new(model, &req.observed, req.window)?;
    let mut mean = Vec::with_capacity(req.targets.len());
    let mut sd = Vec::with_capacity(req.targets.len());
    for &t in &req.targets {
        let (m, v) = cond.mean_var(t);
        mean.push(m);
        sd.push(v.sqrt());
    }
    Ok(PredictionBand { times: req.targets.clone(), mean, sd })
}

/// Evenly spaced grid from `from` to `to` (both included) with
/// `points_per_step` points per sampling interval.
pub fn prediction_grid(from: f64, to: f64, tau: f64, points_per_step: usize) -> Vec<f64> {
    let steps = (((to - from) / tau) * points_per_step as f64).round().max(1.0) as usize;
    (0..=steps).map(|k| from + (to - from) * k as f64 / steps as f64).collect()
}

/// Predicts on a dense grid over `[from, to]`.
pub fn predict_range(
    model: &PhiVector,
    x: &TimeSeriesSample,
    from: f64,
    to: f64,
    points_per_step: usize,
    window: Option<usize>,
) -> Result<PredictionBand> {
    if !(to >= from) || points_per_step == 0 {
        return Err(OupError::InvalidArgument("need from <= to and at least one point per step".into()));
    }
    let req =
        PredictionRequest { observed: x.clone(), targets: prediction_grid(from, to, x.tau, points_per_step), window };
    predict(model, &req)
}

/// Interpolates over the whole sample and forecasts `horizon` steps past the
/// last observation, 100 points per step.
pub fn predict_series(model: &PhiVector, x: &TimeSeriesSample, horizon: usize) -> Result<PredictionBand> {
    let from = x.time(0);
    let to = x.time(x.len() - 1) + horizon as f64 * x.tau;
    predict_range(model, x, from, to, 100, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ou1_single_observation_closed_form() {
        let (lam, sigma2, mu) = (0.8, 1.5, 2.0);
        let model = PhiVector::new(vec![-lam], sigma2, mu).unwrap();
        // Two observations far apart behave like one observation for targets near the last.
        let x = TimeSeriesSample::new(vec![mu, 3.1], 200.0).unwrap();
        let g0 = sigma2 / (2.0 * lam);
        let targets: Vec<f64> = [0.1, 0.7, 2.5].iter().map(|d| 200.0 + d).collect();
        let band =
            predict(&model, &PredictionRequest { observed: x, targets: targets.clone(), window: Some(1) }).unwrap();
        for (i, t) in targets.iter().enumerate() {
            let d = t - 200.0;
            let m = mu + (-lam * d).exp() * (3.1 - mu);
            let v = g0 * (1.0 - (-2.0 * lam * d).exp());
            assert!((band.mean[i] - m).abs() < 1e-12);
            assert!((band.sd[i] * band.sd[i] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = prediction_grid(190.0, 201.0, 1.0, 100);
        assert_eq!(g.len(), 1101);
        assert_eq!(g[0], 190.0);
        assert_eq!(*g.last().unwrap(), 201.0);
    }

    #[test]
    fn bad_window_is_rejected() {
        let model = PhiVector::new(vec![-1.0], 1.0, 0.0).unwrap();
        let x = TimeSeriesSample::new(vec![0.0, 1.0], 1.0).unwrap();
        let req = PredictionRequest { observed: x, targets: vec![0.5], window: Some(3) };
        assert!(predict(&model, &req).is_err());
    }
}
