//! Moving-average kernels of OU(p) processes.
//!
//! An OU(p) process is `x(t) = int_{-inf}^t f(t - s) dw(s)` with kernel
//!
//! ```text
//! f(u) = sigma * sum_{h,j} c_{h,j} e^{-kappa_h u} (-kappa_h u)^j / j!
//! ```
//!
//! Each term is the kernel of a degree-`j` OU process. In the Laplace domain
//! a degree-`j` term is `(-kappa)^j / (s + kappa)^(j+1)` and applying one OU
//! operator with rate `b` multiplies the transform by `s / (s + b)`. The
//! kernel of the full process is therefore the partial-fraction expansion of
//! `s^(p-1) / prod_h (s + kappa_h)^(p_h)`.
//!
//! Coefficients are stored without the `sigma` factor.

use num_complex::Complex64;

use crate::error::Result;
use crate::params::{group_roots_adaptive, ComplexParam, PhiVector, RootMultiplicitySet, ROOT_GROUP_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerm {
    pub kappa: ComplexParam,
    pub degree: usize,
    /// Coefficient without the `sigma` factor.
    pub coeff: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialPolynomialKernel {
    terms: Vec<KernelTerm>,
    sigma: f64,
    /// Kernel of the driving noise `sigma w` itself (the unit step).
    noise: bool,
}

impl ExponentialPolynomialKernel {
    /// The driving noise `sigma w`, the identity element for [`compose_kernels`].
    pub fn identity(sigma: f64) -> Self {
        Self { terms: Vec::new(), sigma, noise: true }
    }

    /// Kernel of the process with the given grouped rates.
    pub fn from_roots(rms: &RootMultiplicitySet, sigma: f64) -> Self {
        let roots = rms.roots();
        let p = rms.order();
        let mut terms = Vec::with_capacity(p);
        for (h, &(kh, mh)) in roots.iter().enumerate() {
            let k = kh.value();
            // Taylor series in y = s + kappa_h of s^(p-1) / prod_{l != h} (s + kappa_l)^(p_l).
            let mut series = shifted_power(-k, p - 1, mh);
            for (l, &(kl, ml)) in roots.iter().enumerate() {
                if l != h {
                    series = mul_truncated(&series, &inverse_power(kl.value() - k, ml, mh), mh);
                }
            }
            let mut neg_k_pow = Complex64::new(1.0, 0.0);
            for j in 0..mh {
                terms.push(KernelTerm { kappa: kh, degree: j, coeff: series[mh - 1 - j] / neg_k_pow });
                neg_k_pow *= -k;
            }
        }
        Self { terms, sigma, noise: false }
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_identity(&self) -> bool {
        self.noise
    }

    /// `sigma * c_{h,j}` for each term, in term order.
    pub fn scaled_coefficients(&self) -> Vec<Complex64> {
        self.terms.iter().map(|t| t.coeff * self.sigma).collect()
    }

    /// Slowest decay rate among the terms.
    pub fn min_decay(&self) -> f64 {
        self.terms.iter().map(|t| t.kappa.re()).fold(f64::INFINITY, f64::min)
    }

    /// Distinct rates with their multiplicities (one more than the top degree).
    pub fn rates(&self) -> Vec<(Complex64, usize)> {
        let mut out: Vec<(Complex64, usize)> = Vec::new();
        for t in &self.terms {
            let k = t.kappa.value();
            match out.iter_mut().find(|(r, _)| *r == k) {
                Some(entry) => entry.1 = entry.1.max(t.degree + 1),
                None => out.push((k, t.degree + 1)),
            }
        }
        out
    }

    /// Taylor coefficients in `y`, up to degree `len - 1`, of the unscaled
    /// transfer function `s^(p-1) / prod_h (s + kappa_h)^(m_h)` at `s = s0 + y`.
    /// This is the Laplace transform of the kernel divided by `sigma`.
    pub fn transfer_taylor(&self, s0: Complex64, len: usize) -> Vec<Complex64> {
        let rates = self.rates();
        let p: usize = rates.iter().map(|r| r.1).sum();
        let mut series = shifted_power(s0, p.saturating_sub(1), len);
        for (k, m) in rates {
            series = mul_truncated(&series, &inverse_power(s0 + k, m, len), len);
        }
        series
    }

    /// Kernel value `f(u)`, zero for `u < 0`.
    pub fn value(&self, u: f64) -> Complex64 {
        if u < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if self.noise {
            return Complex64::new(self.sigma, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let z = -t.kappa.value() * u;
            acc += t.coeff * z.exp() * z.powu(t.degree as u32) / factorial(t.degree);
        }
        acc * self.sigma
    }

    /// Term-multiset equality up to `tol` (absolute, on unscaled coefficients).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.noise != other.noise || (self.sigma - other.sigma).abs() > tol * self.sigma.abs().max(1.0) {
            return false;
        }
        let a = self.significant_terms(tol);
        let b = other.significant_terms(tol);
        if a.len() != b.len() {
            return false;
        }
        let mut used = vec![false; b.len()];
        for ta in &a {
            let hit = b.iter().enumerate().position(|(i, tb)| {
                !used[i]
                    && ta.degree == tb.degree
                    && (ta.kappa.value() - tb.kappa.value()).norm() <= tol
                    && (ta.coeff - tb.coeff).norm() <= tol * ta.coeff.norm().max(1.0)
            });
            match hit {
                Some(i) => used[i] = true,
                None => return false,
            }
        }
        true
    }

    fn significant_terms(&self, tol: f64) -> Vec<KernelTerm> {
        self.terms.iter().copied().filter(|t| t.coeff.norm() > tol).collect()
    }

    fn push_merged(&mut self, kappa: ComplexParam, degree: usize, coeff: Complex64) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.degree == degree && same_rate(t.kappa.value(), kappa.value()))
        {
            t.coeff += coeff;
        } else {
            self.terms.push(KernelTerm { kappa, degree, coeff });
        }
    }
}

/// Kernel of the model. Rates are grouped by [`group_roots_adaptive`] with
/// base tolerance `tol` relative to `max |kappa|`.
pub fn kernel_from_model(model: &PhiVector, tol: f64) -> Result<ExponentialPolynomialKernel> {
    let kappa = model.kappa()?;
    let grouped = group_roots_adaptive(&kappa, tol);
    let p = model.order();
    let lower: Vec<f64> = (0..p).map(|k| -model.phi[p - 1 - k]).collect();
    let refined = grouped
        .roots()
        .iter()
        .map(|&(k, m)| {
            if m < 2 {
                return (k, m);
            }
            let w = crate::poly::refine_multiple_root(&lower, -k.value(), m);
            (ComplexParam::from_complex(-w).unwrap_or(k), m)
        })
        .collect();
    let rms = RootMultiplicitySet::new(refined).unwrap_or(grouped);
    Ok(ExponentialPolynomialKernel::from_roots(&rms, model.sigma()))
}

/// Applies one more OU operator with rate `b` to the process with kernel `a`.
///
/// Terms whose rate differs from `b` are split by partial fractions; terms
/// sharing the rate have their degree raised, `OU_b OU_b^(j) = OU_b^(j) + OU_b^(j+1)`.
pub fn compose_kernels(a: &ExponentialPolynomialKernel, b_kappa: ComplexParam) -> ExponentialPolynomialKernel {
    if a.noise {
        return ExponentialPolynomialKernel {
            terms: vec![KernelTerm { kappa: b_kappa, degree: 0, coeff: Complex64::new(1.0, 0.0) }],
            sigma: a.sigma,
            noise: false,
        };
    }
    let b = b_kappa.value();
    let mut out = ExponentialPolynomialKernel { terms: Vec::new(), sigma: a.sigma, noise: false };
    for t in &a.terms {
        out.push_merged(t.kappa, t.degree, t.coeff);
    }
    for t in &a.terms {
        let k = t.kappa.value();
        if same_rate(k, b) {
            out.push_merged(t.kappa, t.degree + 1, t.coeff);
            continue;
        }
        // -b * c (-k)^j / ((s + k)^m (s + b)) with m = j + 1, d = b - k.
        let m = t.degree + 1;
        let d = b - k;
        let front = -b * t.coeff * (-k).powu(t.degree as u32);
        for kk in 1..=m {
            let sign = if (m - kk) % 2 == 0 { 1.0 } else { -1.0 };
            let c = front * sign / (d.powu((m - kk + 1) as u32) * (-k).powu((kk - 1) as u32));
            out.push_merged(t.kappa, kk - 1, c);
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        out.push_merged(b_kappa, 0, front * sign / d.powu(m as u32));
    }
    out
}

fn same_rate(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= ROOT_GROUP_TOL * a.norm().max(b.norm())
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Coefficients of `(y + a)^n` up to degree `len - 1`.
pub(crate) fn shifted_power(a: Complex64, n: usize, len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let mut binom = 1.0;
    for (i, slot) in out.iter_mut().enumerate() {
        if i > n {
            break;
        }
        *slot = a.powu((n - i) as u32) * binom;
        binom = binom * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// Coefficients of `(y + d)^(-m)` up to degree `len - 1`.
pub(crate) fn inverse_power(d: Complex64, m: usize, len: usize) -> Vec<Complex64> {
    let base = d.powi(-(m as i32));
    let mut out = Vec::with_capacity(len);
    // (1 + y/d)^(-m) = sum_i (-1)^i C(m + i - 1, i) (y/d)^i
    let mut coeff = Complex64::new(1.0, 0.0);
    for i in 0..len {
        out.push(base * coeff);
        coeff = coeff * (-((m + i) as f64) / (i + 1) as f64) / d;
    }
    out
}

pub(crate) fn mul_truncated(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (i, &x) in a.iter().enumerate().take(len) {
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{group_roots, KappaVector};

    #[test]
    fn first_order_kernel() {
        let m = PhiVector::new(vec![-0.5], 4.0, 0.0).unwrap();
        let k = kernel_from_model(&m, ROOT_GROUP_TOL).unwrap();
        assert_eq!(k.terms().len(), 1);
        assert!((k.scaled_coefficients()[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((k.value(1.3).re - 2.0 * (-0.65f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn repeated_root_kernel() {
        let kappa = KappaVector::from_reals(&[0.84, 0.84]).unwrap();
        let model = PhiVector::from_kappa(&kappa, 1.0, 0.0).unwrap();
        let k = kernel_from_model(&model, ROOT_GROUP_TOL).unwrap();
        assert_eq!(k.terms().len(), 2);
        for t in k.terms() {
            assert!((t.coeff - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        }
        let u: f64 = 0.7;
        let expect = (-0.84 * u).exp() * (1.0 - 0.84 * u);
        assert!((k.value(u).re - expect).abs() < 1e-6);
    }

    #[test]
    fn conjugate_pair_kernel_is_real() {
        let (l, mu) = (0.3, 0.8);
        let kappa = KappaVector::from_complex(&[Complex64::new(l, mu), Complex64::new(l, -mu)]).unwrap();
        let model = PhiVector::from_kappa(&kappa, 1.0, 0.0).unwrap();
        let k = kernel_from_model(&model, ROOT_GROUP_TOL).unwrap();
        for i in 0..50 {
            let u = i as f64 * 0.2;
            let expect = (-l * u).exp() * ((mu * u).cos() - l / mu * (mu * u).sin());
            let v = k.value(u);
            assert!((v.re - expect).abs() < 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_starts_at_sigma() {
        let kappa = KappaVector::from_reals(&[0.5, 0.5, 2.0, 2.0, 3.0]).unwrap();
        let rms = group_roots(&kappa, 1e-9);
        let k = ExponentialPolynomialKernel::from_roots(&rms, 1.7);
        assert!((k.value(0.0) - Complex64::new(1.7, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_then_one_rate() {
        let b = ComplexParam::real(0.4).unwrap();
        let k = compose_kernels(&ExponentialPolynomialKernel::identity(1.0), b);
        assert_eq!(k.terms().len(), 1);
        assert_eq!(k.terms()[0].coeff, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn raising_degree_follows_binomials() {
        let b = ComplexParam::real(1.3).unwrap();
        let mut k = ExponentialPolynomialKernel::identity(1.0);
        for _ in 0..5 {
            k = compose_kernels(&k, b);
        }
        let coeffs: Vec<f64> = k.terms().iter().map(|t| t.coeff.re).collect();
        assert_eq!(coeffs, vec![1.0, 4.0, 6.0, 4.0, 1.0]);
    }
}
