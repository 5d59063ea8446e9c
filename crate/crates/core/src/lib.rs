//! Ornstein-Uhlenbeck processes of order `p`.
//!
//! An OU(p) process is white noise passed through `p` first-order OU
//! operators with rates `kappa_1, ..., kappa_p`. This crate provides:
//!
//! * the `kappa` and `phi` parameterisations and conversion between them
//!   ([`params`]),
//! * the impulse-response kernel as an exponential polynomial ([`kernel`]),
//! * the closed-form autocovariance and grid covariance matrices
//!   ([`covariance`]),
//! * exact simulation on grids and conditional refinement ([`simulate`]),
//! * maximum likelihood and correlation-matching estimation ([`estimate`]),
//! * Gaussian interpolation and forecasting with bands ([`predict`]),
//! * the AR(p) reference model and the OU(2) versus AR(2) gap ([`ar`]),
//! * the `oup` command line tool ([`cli`]).
//!
//! ```
//! use oup::{CovarianceModel, PhiVector};
//!
//! let model = PhiVector::new(vec![-1.3, -0.56, -0.18], 1.0, 0.0)?;
//! let cov = CovarianceModel::from_model(&model)?;
//! assert!(cov.gamma(1.0) < cov.gamma(0.0));
//! # Ok::<(), oup::OupError>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ar;
pub mod cli;
pub mod covariance;
pub mod error;
pub mod estimate;
pub mod kernel;
pub mod optim;
pub mod params;
pub mod poly;
pub mod predict;
pub mod quadrature;
pub mod series;
pub mod simulate;
pub mod toeplitz;

pub use ar::{ar2_r3, lemma_gap, ou2_rho, yule_walker_fit, ARModel};
pub use covariance::CovarianceModel;
pub use error::{OupError, Result};
pub use estimate::{mce_fit, mle_fit, FitMethod, FitOptions, FitResult, LikelihoodVariant};
pub use kernel::{compose_kernels, kernel_from_model, ExponentialPolynomialKernel, KernelTerm};
pub use params::{
    group_roots, group_roots_adaptive, kappa_from_phi, phi_from_kappa, ComplexParam, KappaVector, PhiVector,
    RootMultiplicitySet,
};
pub use predict::{predict, PredictionBand, PredictionRequest};
pub use series::{MeanPolicy, TimeSeriesSample};
pub use simulate::{refine_path, simulate_grid};
pub use toeplitz::ToeplitzMatrix;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/parameters.md")]
    struct Parameters;
    #[doc = include_str!("../../../book/src/kernel.md")]
    struct Kernel;
    #[doc = include_str!("../../../book/src/covariance.md")]
    struct Covariance;
    #[doc = include_str!("../../../book/src/simulation.md")]
    struct Simulation;
    #[doc = include_str!("../../../book/src/estimation.md")]
    struct Estimation;
    #[doc = include_str!("../../../book/src/prediction.md")]
    struct Prediction;
    #[doc = include_str!("../../../book/src/ar-comparison.md")]
    struct ArComparison;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
