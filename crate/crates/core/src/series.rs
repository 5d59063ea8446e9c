use crate::error::{OupError, Result};

/// How the process mean is handled before fitting or computing covariances.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MeanPolicy {
    /// Data are used as given (assumed centred).
    Centered,
    /// The sample mean is subtracted.
    #[default]
    SampleMean,
    /// A known mean is subtracted.
    Explicit(f64),
}

impl std::str::FromStr for MeanPolicy {
    type Err = OupError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(MeanPolicy::SampleMean),
            "zero" | "centered" => Ok(MeanPolicy::Centered),
            other => other.parse::<f64>().map(MeanPolicy::Explicit).map_err(|_| {
                OupError::InvalidArgument(format!("mean policy must be sample, zero or a number, got {other:?}"))
            }),
        }
    }
}

/// Observations `x(t0), x(t0 + tau), ..., x(t0 + (len-1) tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSample {
    pub values: Vec<f64>,
    pub tau: f64,
    pub t0: f64,
    pub mean_policy: MeanPolicy,
}

impl TimeSeriesSample {
    pub fn new(values: Vec<f64>, tau: f64) -> Result<Self> {
        Self::with_origin(values, tau, 0.0)
    }

    pub fn with_origin(values: Vec<f64>, tau: f64, t0: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(OupError::InvalidArgument(format!("a series needs at least 2 values, got {}", values.len())));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(OupError::InvalidArgument(format!("spacing must be positive, got {tau}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(OupError::InvalidArgument("series contains non-finite values".into()));
        }
        Ok(Self { values, tau, t0, mean_policy: MeanPolicy::default() })
    }

    pub fn with_mean_policy(mut self, policy: MeanPolicy) -> Self {
        self.mean_policy = policy;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.tau
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn sample_mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// The mean subtracted under the current policy.
    pub fn mean_estimate(&self) -> f64 {
        match self.mean_policy {
            MeanPolicy::Centered => 0.0,
            MeanPolicy::SampleMean => self.sample_mean(),
            MeanPolicy::Explicit(m) => m,
        }
    }

    /// Values with the policy's mean removed.
    pub fn centered_values(&self) -> Vec<f64> {
        let m = self.mean_estimate();
        self.values.iter().map(|v| v - m).collect()
    }

    /// First differences `x(k+1) - x(k)`.
    pub fn differences(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}
