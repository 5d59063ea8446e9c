//! Real polynomial root finding via companion-matrix eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Evaluates a complex polynomial given low-to-high coefficients, returning
/// the value and its derivative.
pub(crate) fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        deriv = deriv * z + value;
        value = value * z + c;
    }
    (value, deriv)
}

/// Multiplies out `prod_j (1 + a_j z)` and returns the low-to-high coefficients.
pub(crate) fn expand_linear_factors(factors: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &a in factors {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] += c * a;
        }
        coeffs = next;
    }
    coeffs
}

/// Roots of the monic polynomial `w^p + a[p-1] w^(p-1) + ... + a[0]`.
///
/// Eigenvalues of the companion matrix, each followed by Newton polishing on
/// the original polynomial. Roots come back in no particular order.
pub fn monic_roots(lower: &[f64]) -> Vec<Complex64> {
    let p = lower.len();
    if p == 0 {
        return Vec::new();
    }
    if p == 1 {
        return vec![Complex64::new(-lower[0], 0.0)];
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    for (i, &a) in lower.iter().enumerate() {
        companion[(i, p - 1)] = -a;
    }
    let eig = companion.complex_eigenvalues();

    let mut full: Vec<Complex64> = lower.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    full.push(Complex64::new(1.0, 0.0));
    let raw: Vec<Complex64> = eig.iter().copied().collect();
    let polished: Vec<Complex64> = raw.iter().map(|&z| polish(&full, z)).collect();
    // Polishing roots one at a time can trade joint consistency for
    // per-root accuracy; keep whichever set reproduces the polynomial better.
    if coefficient_residual(&polished, lower) <= coefficient_residual(&raw, lower) {
        polished
    } else {
        raw
    }
}

/// Largest relative mismatch between `prod (w - r)` and the monic polynomial.
fn coefficient_residual(roots: &[Complex64], lower: &[f64]) -> f64 {
    let neg: Vec<Complex64> = roots.iter().map(|r| -r).collect();
    // prod (1 - r z) has low-to-high coefficients equal to the high-to-low
    // coefficients of prod (w - r).
    let expanded = expand_linear_factors(&neg);
    let p = lower.len();
    (0..p)
        .map(|k| {
            let got = expanded[p - k];
            (got - lower[k]).norm() / lower[k].abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Refines an approximate root of multiplicity `m` of the monic polynomial
/// `w^p + lower[p-1] w^(p-1) + ... + lower[0]` by Newton steps on its
/// `(m-1)`-th derivative, where the root is simple.
pub(crate) fn refine_multiple_root(lower: &[f64], z: Complex64, m: usize) -> Complex64 {
    let p = lower.len();
    let mut coeffs: Vec<Complex64> = lower.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    coeffs.push(Complex64::new(1.0, 0.0));
    for _ in 1..m.min(p) {
        coeffs = coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
    }
    polish(&coeffs, z)
}

fn polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut value, _) = eval_with_derivative(coeffs, z);
    for _ in 0..3 {
        let (v, d) = eval_with_derivative(coeffs, z);
        if d.norm() == 0.0 || !v.is_finite() {
            break;
        }
        let candidate = z - v / d;
        let (cv, _) = eval_with_derivative(coeffs, candidate);
        // Multiple roots converge slowly under Newton; only accept improvements.
        if cv.norm() < value.norm() {
            z = candidate;
            value = cv;
        } else {
            break;
        }
    }
    z
}

/// Snaps nearly real roots onto the real axis and symmetrises conjugate pairs.
///
/// Roots with `|im| < snap_tol * |z|` become real. The remaining roots are
/// greedily matched with the candidate closest to their conjugate and both
/// members are replaced by the pair average.
pub fn pair_conjugates(roots: &mut [Complex64], snap_tol: f64) {
    let mut complex_idx = Vec::new();
    for (i, z) in roots.iter_mut().enumerate() {
        if z.im.abs() < snap_tol * z.norm() {
            z.im = 0.0;
        } else {
            complex_idx.push(i);
        }
    }
    let mut used = vec![false; complex_idx.len()];
    for a in 0..complex_idx.len() {
        if used[a] {
            continue;
        }
        let za = roots[complex_idx[a]];
        let mut best: Option<(usize, f64)> = None;
        for b in (a + 1)..complex_idx.len() {
            if used[b] {
                continue;
            }
            let zb = roots[complex_idx[b]];
            if za.im.signum() == zb.im.signum() {
                continue;
            }
            let dist = (zb - za.conj()).norm();
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((b, dist));
            }
        }
        if let Some((b, _)) = best {
            used[a] = true;
            used[b] = true;
            let zb = roots[complex_idx[b]];
            let re = 0.5 * (za.re + zb.re);
            let im = 0.5 * (za.im.abs() + zb.im.abs());
            roots[complex_idx[a]] = Complex64::new(re, im * za.im.signum());
            roots[complex_idx[b]] = Complex64::new(re, im * zb.im.signum());
        }
    }
}
