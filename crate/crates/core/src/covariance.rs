//! Closed-form autocovariance of an OU(p) process.
//!
//! For two degree-`i` OU processes driven by the same noise,
//!
//! ```text
//! E xi1(t) conj(xi2(0)) = sigma^2 (-k1)^i1 (-conj k2)^i2 e^{-k1 t} / i2!
//!     * sum_{j=0}^{i1} t^j (i1 + i2 - j)! / (j! (i1 - j)! (k1 + conj k2)^(i1 + i2 - j + 1))
//! ```
//!
//! and the covariance of the process is the bilinear combination of these
//! over the kernel terms ([`gamma_pairwise`]). When rates cluster, the kernel
//! coefficients grow large and that double sum cancels badly, so
//! [`CovarianceModel`] sums the inner index in closed form: for a term
//! `e^{-k u} u^j`, the sum over the second kernel is a moment
//! `int u^k e^{-k u} f(u) du`, a derivative of the transfer function
//! `s^(p-1) / prod (s + kappa)` at `conj k`, which is evaluated from its
//! product form. The result is one exponential polynomial per distinct rate,
//! so each evaluation costs `O(p)`.

use num_complex::Complex64;

use crate::error::Result;
use crate::kernel::{factorial, kernel_from_model, ExponentialPolynomialKernel};
use crate::params::{ComplexParam, PhiVector, ROOT_GROUP_TOL};
use crate::toeplitz::ToeplitzMatrix;

/// Cross-covariance `E xi^(i1)_{k1}(t) conj(xi^(i2)_{k2}(0))` for `t >= 0`.
pub fn gamma_cross(k1: ComplexParam, i1: usize, k2: ComplexParam, i2: usize, sigma: f64, t: f64) -> Complex64 {
    let poly = cross_poly(k1.value(), i1, k2.value(), i2);
    let mut tp = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for c in poly {
        acc += c * tp;
        tp *= t;
    }
    sigma * sigma * (-k1.value() * t).exp() * acc
}

/// The covariance as the literal double sum of [`gamma_cross`] over all pairs
/// of kernel terms, for `t >= 0`. Accurate for well-separated rates only;
/// [`CovarianceModel`] is the stable evaluation.
pub fn gamma_pairwise(kernel: &ExponentialPolynomialKernel, t: f64) -> Complex64 {
    let sigma = kernel.sigma();
    let mut acc = Complex64::new(0.0, 0.0);
    for a in kernel.terms() {
        for b in kernel.terms() {
            acc += a.coeff * b.coeff.conj() * gamma_cross(a.kappa, a.degree, b.kappa, b.degree, sigma, t);
        }
    }
    acc
}

/// Polynomial in `t` multiplying `e^{-k1 t}` in the cross-covariance (sigma = 1).
fn cross_poly(k1: Complex64, i1: usize, k2: Complex64, i2: usize) -> Vec<Complex64> {
    let front = (-k1).powu(i1 as u32) * (-k2.conj()).powu(i2 as u32) / factorial(i2);
    let s = k1 + k2.conj();
    (0..=i1)
        .map(|j| {
            let e = i1 + i2 - j;
            front * factorial(e) / (factorial(j) * factorial(i1 - j) * s.powu((e + 1) as u32))
        })
        .collect()
}

/// Stationary autocovariance of an OU(p) process.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    kernel: ExponentialPolynomialKernel,
    /// `gamma(t) = Re sum_g e^{-rate_g t} sum_j coeffs_g[j] t^j` for `t >= 0`.
    groups: Vec<(Complex64, Vec<Complex64>)>,
    gamma0: f64,
}

impl CovarianceModel {
    pub fn new(kernel: ExponentialPolynomialKernel) -> Self {
        let sigma2 = kernel.sigma() * kernel.sigma();
        let mut groups: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
        for a in kernel.terms() {
            let k = a.kappa.value();
            let j = a.degree;
            let idx = match groups.iter().position(|(r, _)| *r == k) {
                Some(i) => i,
                None => {
                    groups.push((k, Vec::new()));
                    groups.len() - 1
                }
            };
            // moment[q] = int u^q e^{-k u} conj(f(u)) du / sigma
            //           = conj((-1)^q q! [y^q] F(conj k + y)).
            let taylor = kernel.transfer_taylor(k.conj(), j + 1);
            let front = a.coeff * (-k).powu(j as u32) / factorial(j) * sigma2;
            let coeffs = &mut groups[idx].1;
            if coeffs.len() < j + 1 {
                coeffs.resize(j + 1, Complex64::new(0.0, 0.0));
            }
            let mut binom = 1.0;
            for (q, tq) in taylor.iter().enumerate() {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                let moment = (tq * sign * factorial(q)).conj();
                // (t + u)^j = sum_q C(j, q) t^(j-q) u^q
                coeffs[j - q] += front * binom * moment;
                binom = binom * (j - q) as f64 / (q + 1) as f64;
            }
        }
        let mut model = Self { kernel, groups, gamma0: 0.0 };
        model.gamma0 = model.gamma_complex(0.0).re;
        model
    }

    pub fn from_model(model: &PhiVector) -> Result<Self> {
        Ok(Self::new(kernel_from_model(model, ROOT_GROUP_TOL)?))
    }

    pub fn kernel(&self) -> &ExponentialPolynomialKernel {
        &self.kernel
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    /// `gamma(t)` including the imaginary residue, for `t >= 0`.
    pub fn gamma_complex(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (rate, coeffs) in &self.groups {
            let mut poly = Complex64::new(0.0, 0.0);
            for c in coeffs.iter().rev() {
                poly = poly * t + c;
            }
            acc += (-rate * t).exp() * poly;
        }
        acc
    }

    /// Autocovariance at lag `t`; even in `t`.
    pub fn gamma(&self, t: f64) -> f64 {
        self.gamma_complex(t.abs()).re
    }

    /// `gamma(k tau)` for `k = 0..=max_lag`.
    pub fn gamma_grid(&self, max_lag: usize, tau: f64) -> Vec<f64> {
        (0..=max_lag).map(|k| self.gamma(k as f64 * tau)).collect()
    }

    /// `(rho(tau), ..., rho(T tau))` with `rho = gamma / gamma(0)`.
    pub fn autocorrelations(&self, horizon: usize, tau: f64) -> Vec<f64> {
        (1..=horizon).map(|k| self.gamma(k as f64 * tau) / self.gamma0).collect()
    }

    /// Covariance of `(x(0), x(tau), ..., x(n tau))`, an `(n+1) x (n+1)` matrix.
    pub fn gamma_matrix(&self, n: usize, tau: f64) -> Result<ToeplitzMatrix> {
        checked(ToeplitzMatrix::new(self.gamma_grid(n, tau)))
    }

    /// Covariance of the `n` increments `x((k+1) tau) - x(k tau)`.
    pub fn diff_matrix(&self, n: usize, tau: f64) -> Result<ToeplitzMatrix> {
        checked(ToeplitzMatrix::new(diff_row(&self.gamma_grid(n, tau), n)))
    }
}

/// First row of the increment covariance from `gamma(0..=n)`.
pub(crate) fn diff_row(g: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let below = if k == 0 { g[1] } else { g[k - 1] };
            2.0 * g[k] - g[k + 1] - below
        })
        .collect()
}

fn checked(m: ToeplitzMatrix) -> Result<ToeplitzMatrix> {
    // Factorisation with the jitter ladder is the definition of "usable" here.
    let probe = vec![0.0; m.dim()];
    m.innovations(&probe)?;
    Ok(m)
}
