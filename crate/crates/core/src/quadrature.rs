//! Adaptive Gauss-Kronrod quadrature and the covariance oracle built on it.
//!
//! [`oracle_gamma_quadrature`] integrates the kernel product numerically. It
//! shares nothing with the closed-form path in [`crate::covariance`] except
//! the kernel itself, and exists to check that path. Nothing on the hot path
//! calls it.

use num_complex::Complex64;

use crate::error::{OupError, Result};
use crate::kernel::{factorial, ExponentialPolynomialKernel};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let pair = f(c - x) + f(c + x);
        kronrod += pair * WGK[i];
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    let kronrod = kronrod * h;
    let gauss = gauss * h;
    (kronrod, (kronrod - gauss).norm())
}

/// Integrates a complex function over `[a, b]` by adaptive bisection.
pub fn integrate(f: impl Fn(f64) -> Complex64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Complex64> {
    const MAX_INTERVALS: usize = 20_000;
    let mut intervals = vec![(a, b, gk15(&f, a, b))];
    loop {
        let total: Complex64 = intervals.iter().map(|(_, _, (v, _))| *v).sum();
        let err: f64 = intervals.iter().map(|(_, _, (_, e))| *e).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(total);
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(OupError::QuadratureNonConvergence { error: err });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, gk15(&f, lo, mid)));
        intervals.push((mid, hi, gk15(&f, mid, hi)));
    }
}

/// Upper bound on `|f(u)|` from the term moduli.
fn envelope(kernel: &ExponentialPolynomialKernel, u: f64) -> f64 {
    kernel
        .terms()
        .iter()
        .map(|t| {
            let k = t.kappa.value();
            t.coeff.norm() * (-k.re * u).exp() * (k.norm() * u).powi(t.degree as i32) / factorial(t.degree)
        })
        .sum::<f64>()
        * kernel.sigma()
}

/// `int_0^inf f(t + u) conj(f(u)) du`, truncated where the kernel envelope
/// falls below `1e-14` of the kernel's peak.
pub fn oracle_gamma_quadrature_complex(kernel: &ExponentialPolynomialKernel, t: f64) -> Result<Complex64> {
    if kernel.is_identity() {
        return Err(OupError::InvalidArgument("the noise kernel has no stationary covariance".into()));
    }
    let t = t.abs();
    let lam = kernel.min_decay();
    let peak = (0..200).map(|i| kernel.value(i as f64 * 0.05 / lam).norm()).fold(0.0, f64::max);
    let mut cut = 1.0 / lam;
    while envelope(kernel, cut) >= 1e-14 * peak {
        cut *= 1.5;
    }
    // Split at a few decay lengths so oscillatory and slow parts both resolve.
    let mut edges = vec![0.0];
    let mut e = 0.5 / lam;
    while e < cut {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(cut);
    let mut total = Complex64::new(0.0, 0.0);
    let integrand = |u: f64| kernel.value(t + u) * kernel.value(u).conj();
    // peak^2 / lam is the scale of gamma(0); tail pieces are tiny and need a
    // floor, raised to the rounding noise of the kernel when its terms cancel.
    let noise = 100.0 * f64::EPSILON * envelope(kernel, 0.0) * peak / lam;
    let floor = 1e-15 * peak * peak / lam + noise;
    for w in edges.windows(2) {
        total += integrate(integrand, w[0], w[1], 1e-12, floor)?;
    }
    Ok(total)
}

/// Real part of [`oracle_gamma_quadrature_complex`].
pub fn oracle_gamma_quadrature(kernel: &ExponentialPolynomialKernel, t: f64) -> Result<f64> {
    oracle_gamma_quadrature_complex(kernel, t).map(|z| z.re)
}
