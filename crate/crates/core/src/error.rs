use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OupError {
    #[error("root kappa = {re}{im:+}i has non-positive real part; the model is not stationary")]
    StationarityViolation { re: f64, im: f64 },

    #[error("kappa vector is not closed under conjugation (imaginary residue {residue:e})")]
    NotRealProcess { residue: f64 },

    #[error("roots {0} and {1} coincide; group them before computing coefficients")]
    DegenerateRoots(usize, usize),

    #[error("covariance matrix of dimension {dim} is not positive definite")]
    NotPositiveDefinite { dim: usize },

    #[error("quadrature did not converge (estimated error {error:e})")]
    QuadratureNonConvergence { error: f64 },

    #[error("no admissible starting point for the optimiser")]
    NoAdmissibleStart,

    #[error("Yule-Walker system is singular")]
    SingularSystem,

    #[error("autocorrelations (r1 = {r1}, r2 = {r2}) lie outside the AR(2) admissible region")]
    AdmissibilityViolation { r1: f64, r2: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl OupError {
    /// Stable machine-readable code, used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            OupError::StationarityViolation { .. } => "E_STATIONARITY",
            OupError::NotRealProcess { .. } => "E_NOT_REAL",
            OupError::DegenerateRoots(..) => "E_DEGENERATE_ROOTS",
            OupError::NotPositiveDefinite { .. } => "E_NOT_PD",
            OupError::QuadratureNonConvergence { .. } => "E_QUADRATURE",
            OupError::NoAdmissibleStart => "E_NO_START",
            OupError::SingularSystem => "E_SINGULAR",
            OupError::AdmissibilityViolation { .. } => "E_AR2_REGION",
            OupError::InvalidArgument(_) => "E_INVALID",
        }
    }
}

pub type Result<T, E = OupError> = std::result::Result<T, E>;
