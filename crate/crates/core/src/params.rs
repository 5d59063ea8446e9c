//! Parameter representations of an OU(p) process.
//!
//! A process is determined by the multiset of its complex rates `kappa`
//! (each with positive real part) together with the noise scale and mean.
//! Users mostly handle the real reparameterisation [`PhiVector`], defined by
//! the polynomial identity
//!
//! ```text
//! prod_j (1 + kappa_j z) = 1 - sum_j phi_j z^j
//! ```
//!
//! which is real whenever the rates are closed under conjugation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{OupError, Result};
use crate::poly;

/// Roots with `|im| < CONJUGATE_SNAP * |kappa|` are treated as real.
pub const CONJUGATE_SNAP: f64 = 1e-9;

/// Default root-grouping tolerance, relative to the largest root modulus.
pub const ROOT_GROUP_TOL: f64 = 1e-7;

/// A rate `kappa = lambda + i mu` with `lambda > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexParam(Complex64);

impl ComplexParam {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn real(lambda: f64) -> Result<Self> {
        Self::new(lambda, 0.0)
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        if !(z.re > 0.0) || !z.im.is_finite() || !z.re.is_finite() {
            return Err(OupError::StationarityViolation { re: z.re, im: z.im });
        }
        Ok(Self(z))
    }

    /// Decay rate.
    pub fn re(&self) -> f64 {
        self.0.re
    }

    /// Oscillation rate.
    pub fn im(&self) -> f64 {
        self.0.im
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn conj(&self) -> Self {
        Self(self.0.conj())
    }
}

impl std::fmt::Display for ComplexParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.im == 0.0 {
            write!(f, "{}", self.0.re)
        } else {
            write!(f, "{}{:+}i", self.0.re, self.0.im)
        }
    }
}

/// The rates `(kappa_1, ..., kappa_p)`; order carries no meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaVector {
    entries: Vec<ComplexParam>,
}

impl KappaVector {
    pub fn new(entries: Vec<ComplexParam>) -> Result<Self> {
        if entries.is_empty() {
            return Err(OupError::InvalidArgument("kappa vector must have at least one entry".into()));
        }
        Ok(Self { entries })
    }

    /// Builds a vector from raw complex values, checking admissibility.
    pub fn from_complex(values: &[Complex64]) -> Result<Self> {
        let entries = values.iter().map(|&z| ComplexParam::from_complex(z)).collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    /// Convenience constructor for all-real rates.
    pub fn from_reals(values: &[f64]) -> Result<Self> {
        let entries = values.iter().map(|&l| ComplexParam::real(l)).collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn order(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[ComplexParam] {
        &self.entries
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.entries.iter().map(|k| k.value()).collect()
    }

    pub fn min_re(&self) -> f64 {
        self.entries.iter().map(|k| k.re()).fold(f64::INFINITY, f64::min)
    }

    /// True when every entry has a partner equal to its conjugate (within
    /// `tol` relative to its modulus), so the induced process is real.
    pub fn is_conjugation_closed(&self, tol: f64) -> bool {
        let vals = self.values();
        let mut used = vec![false; vals.len()];
        for i in 0..vals.len() {
            if used[i] {
                continue;
            }
            let z = vals[i];
            if z.im.abs() <= tol * z.norm() {
                used[i] = true;
                continue;
            }
            let partner = (0..vals.len())
                .filter(|&j| j != i && !used[j])
                .find(|&j| (vals[j] - z.conj()).norm() <= tol * z.norm().max(1.0));
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => return false,
            }
        }
        true
    }
}

/// Real parameters of an OU(p) process: `phi`, the noise variance and the mean.
///
/// This is the model document exchanged between the command line subcommands:
/// `{"p": 3, "phi": [...], "sigma2": 1.0, "mu": 0.0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiVector {
    pub phi: Vec<f64>,
    pub sigma2: f64,
    pub mu: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    p: usize,
    phi: Vec<f64>,
    sigma2: f64,
    mu: f64,
}

impl PhiVector {
    pub fn new(phi: Vec<f64>, sigma2: f64, mu: f64) -> Result<Self> {
        if phi.is_empty() {
            return Err(OupError::InvalidArgument("phi must have at least one entry".into()));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(OupError::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
        }
        if phi.iter().any(|v| !v.is_finite()) || !mu.is_finite() {
            return Err(OupError::InvalidArgument("parameters must be finite".into()));
        }
        Ok(Self { phi, sigma2, mu })
    }

    /// Model with the given rates, noise variance and mean.
    pub fn from_kappa(kappa: &KappaVector, sigma2: f64, mu: f64) -> Result<Self> {
        Self::new(phi_from_kappa(kappa)?, sigma2, mu)
    }

    pub fn order(&self) -> usize {
        self.phi.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn kappa(&self) -> Result<KappaVector> {
        kappa_from_phi(&self.phi)
    }

    pub fn is_admissible(&self) -> bool {
        self.kappa().is_ok()
    }

    pub fn with_sigma2(&self, sigma2: f64) -> Self {
        Self { sigma2, ..self.clone() }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument { p: self.phi.len(), phi: self.phi.clone(), sigma2: self.sigma2, mu: self.mu };
        serde_json::to_string_pretty(&doc).expect("model document serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| OupError::InvalidArgument(format!("model JSON: {e}")))?;
        if doc.p != doc.phi.len() {
            return Err(OupError::InvalidArgument(format!(
                "model JSON: p = {} but phi has {} entries",
                doc.p,
                doc.phi.len()
            )));
        }
        Self::new(doc.phi, doc.sigma2, doc.mu)
    }
}

/// Coefficients `phi` of `prod_j (1 + kappa_j z) = 1 - sum_j phi_j z^j`.
///
/// Fails with [`OupError::NotRealProcess`] when the expansion has a
/// non-negligible imaginary part.
pub fn phi_from_kappa(kappa: &KappaVector) -> Result<Vec<f64>> {
    let vals = kappa.values();
    let coeffs = poly::expand_linear_factors(&vals);
    let scale: f64 = vals.iter().map(|z| 1.0 + z.norm()).product();
    let residue = coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > 1e-12 * scale {
        return Err(OupError::NotRealProcess { residue });
    }
    Ok(coeffs[1..].iter().map(|c| -c.re).collect())
}

/// Recovers the rates from `phi` by solving the polynomial identity.
///
/// The `kappa_j` are the negated roots of `w^p - phi_1 w^(p-1) - ... - phi_p`.
/// Nearly real roots are snapped to the real axis and complex roots are
/// paired with their conjugates.
pub fn kappa_from_phi(phi: &[f64]) -> Result<KappaVector> {
    let p = phi.len();
    if p == 0 {
        return Err(OupError::InvalidArgument("phi must have at least one entry".into()));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(OupError::InvalidArgument("phi must be finite".into()));
    }
    // lower[k] is the coefficient of w^k: -phi_{p-k}.
    let lower: Vec<f64> = (0..p).map(|k| -phi[p - 1 - k]).collect();
    let mut roots: Vec<Complex64> = poly::monic_roots(&lower).into_iter().map(|w| -w).collect();
    poly::pair_conjugates(&mut roots, CONJUGATE_SNAP);
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    KappaVector::from_complex(&roots)
}

/// Distinct rates with their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct RootMultiplicitySet {
    roots: Vec<(ComplexParam, usize)>,
}

impl RootMultiplicitySet {
    /// Wraps pre-grouped roots. Fails if two roots coincide exactly or a
    /// multiplicity is zero.
    pub fn new(roots: Vec<(ComplexParam, usize)>) -> Result<Self> {
        if roots.is_empty() || roots.iter().any(|&(_, m)| m == 0) {
            return Err(OupError::InvalidArgument("multiplicities must be positive".into()));
        }
        for i in 0..roots.len() {
            for j in (i + 1)..roots.len() {
                if roots[i].0 == roots[j].0 {
                    return Err(OupError::DegenerateRoots(i, j));
                }
            }
        }
        Ok(Self { roots })
    }

    pub fn roots(&self) -> &[(ComplexParam, usize)] {
        &self.roots
    }

    pub fn order(&self) -> usize {
        self.roots.iter().map(|&(_, m)| m).sum()
    }
}

/// Merges entries closer than `tol` (absolute modulus distance) into their
/// multiplicity-weighted centroid.
pub fn group_roots(kappa: &KappaVector, tol: f64) -> RootMultiplicitySet {
    let mut groups: Vec<(Complex64, usize)> = kappa.values().into_iter().map(|z| (z, 1)).collect();
    loop {
        let mut closest: Option<(usize, usize, f64)> = None;
        for i in 0..groups.len() {
            for j in (i + 1)..groups.len() {
                let d = (groups[i].0 - groups[j].0).norm();
                if d <= tol && closest.is_none_or(|(_, _, best)| d < best) {
                    closest = Some((i, j, d));
                }
            }
        }
        let Some((i, j, _)) = closest else { break };
        let (zj, mj) = groups.remove(j);
        let (zi, mi) = groups[i];
        let m = mi + mj;
        groups[i] = ((zi * mi as f64 + zj * mj as f64) / m as f64, m);
    }
    let roots = groups
        .into_iter()
        .map(|(z, m)| (ComplexParam::from_complex(z).expect("centroid of admissible roots is admissible"), m))
        .collect();
    RootMultiplicitySet { roots }
}

/// Grouping used for kernels built from polynomial roots.
///
/// A cluster of `m` rates with spread `d` (relative to `max |kappa|`) gives
/// kernel coefficients of size `d^(1-m)` and costs about `eps / d^(m-1)` of
/// accuracy in the covariance, while replacing it by one rate of
/// multiplicity `m` changes the covariance by about `d^2`. The merge radius
/// is where the two balance, `max(base, eps^(1/(m+1))) * max |kappa|`.
/// Clusters are the single-linkage components at that radius, taken from the
/// largest multiplicity down.
pub fn group_roots_adaptive(kappa: &KappaVector, base: f64) -> RootMultiplicitySet {
    let scale = kappa.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let radius = |m: usize| scale * base.max(f64::EPSILON.powf(1.0 / (m + 1) as f64));
    let mut groups: Vec<(Complex64, usize)> = kappa.values().into_iter().map(|z| (z, 1)).collect();
    for level in (2..=kappa.order()).rev() {
        let r = radius(level);
        let n = groups.len();
        let mut label: Vec<usize> = (0..n).collect();
        // Single-linkage components by repeated relabelling; n <= 10.
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    if (groups[i].0 - groups[j].0).norm() <= r && label[i] != label[j] {
                        let (lo, hi) = (label[i].min(label[j]), label[i].max(label[j]));
                        label.iter_mut().filter(|l| **l == hi).for_each(|l| *l = lo);
                        changed = true;
                    }
                }
            }
        }
        let mut next: Vec<(Complex64, usize)> = Vec::with_capacity(n);
        for root in 0..n {
            let members: Vec<usize> = (0..n).filter(|&i| label[i] == root).collect();
            if members.is_empty() {
                continue;
            }
            let m: usize = members.iter().map(|&i| groups[i].1).sum();
            if members.len() > 1 && m == level {
                let c = members.iter().map(|&i| groups[i].0 * groups[i].1 as f64).sum::<Complex64>() / m as f64;
                next.push((c, m));
            } else {
                next.extend(members.iter().map(|&i| groups[i]));
            }
        }
        groups = next;
    }
    let roots = groups
        .into_iter()
        .map(|(z, m)| (ComplexParam::from_complex(z).expect("centroid of admissible roots is admissible"), m))
        .collect();
    RootMultiplicitySet { roots }
}

/// The top-degree partial-fraction weights `K_h = 1 / prod_{l != h} (1 - kappa_l / kappa_h)^{p_l}`.
///
/// For distinct roots these are the exact weights of the basic OU operators.
/// With multiplicities they give the coefficient of the highest-degree term of
/// each group in the kernel expansion.
pub fn partial_fraction_coefficients(rms: &RootMultiplicitySet) -> Result<Vec<Complex64>> {
    let roots = rms.roots();
    let mut out = Vec::with_capacity(roots.len());
    for (h, &(kh, _)) in roots.iter().enumerate() {
        let mut denom = Complex64::new(1.0, 0.0);
        for (l, &(kl, ml)) in roots.iter().enumerate() {
            if l == h {
                continue;
            }
            if kl == kh {
                return Err(OupError::DegenerateRoots(h.min(l), h.max(l)));
            }
            denom *= (1.0 - kl.value() / kh.value()).powi(ml as i32);
        }
        out.push(denom.inv());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn third_order() -> KappaVector {
        KappaVector::from_complex(&[Complex64::new(0.9, 0.0), Complex64::new(0.2, 0.4), Complex64::new(0.2, -0.4)])
            .unwrap()
    }

    #[test]
    fn example_one_phi() {
        let phi = phi_from_kappa(&third_order()).unwrap();
        for (a, b) in phi.iter().zip([-1.30, -0.56, -0.18]) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn single_rate() {
        let k = KappaVector::from_reals(&[0.7]).unwrap();
        assert_eq!(phi_from_kappa(&k).unwrap(), vec![-0.7]);
        let back = kappa_from_phi(&[-0.7]).unwrap();
        assert_eq!(back.values(), vec![Complex64::new(0.7, 0.0)]);
    }

    #[test]
    fn three_reals_are_elementary_symmetric_functions() {
        let k = KappaVector::from_reals(&[0.04, 0.21, 1.87]).unwrap();
        let phi = phi_from_kappa(&k).unwrap();
        let e2 = 0.04 * 0.21 + 0.04 * 1.87 + 0.21 * 1.87;
        let e3 = 0.04 * 0.21 * 1.87;
        assert!((phi[0] + 2.12).abs() < 1e-14);
        assert!((phi[1] + e2).abs() < 1e-14);
        assert!((phi[2] + e3).abs() < 1e-14);
    }

    #[test]
    fn non_stationary_phi_is_rejected() {
        assert!(matches!(kappa_from_phi(&[2.0]), Err(OupError::StationarityViolation { .. })));
    }

    #[test]
    fn unpaired_complex_rate_is_not_real() {
        let k = KappaVector::from_complex(&[Complex64::new(0.3, 0.5)]).unwrap();
        assert!(matches!(phi_from_kappa(&k), Err(OupError::NotRealProcess { .. })));
        assert!(!k.is_conjugation_closed(1e-12));
        assert!(third_order().is_conjugation_closed(1e-12));
    }

    #[test]
    fn grouping() {
        let k = KappaVector::from_reals(&[0.84, 0.84]).unwrap();
        let g = group_roots(&k, 1e-8);
        assert_eq!(g.roots().len(), 1);
        assert_eq!(g.roots()[0].1, 2);

        assert_eq!(group_roots(&third_order(), 1e-8).roots().len(), 3);

        let k = KappaVector::from_reals(&[1.0, 1.0 + 1e-12]).unwrap();
        let g = group_roots(&k, 1e-8);
        assert_eq!(g.roots().len(), 1);
        assert!((g.roots()[0].0.re() - (1.0 + 0.5e-12)).abs() < 1e-15);
    }

    #[test]
    fn single_root_weight_is_one() {
        let rms = RootMultiplicitySet::new(vec![(ComplexParam::real(0.5).unwrap(), 3)]).unwrap();
        assert_eq!(partial_fraction_coefficients(&rms).unwrap(), vec![Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn two_distinct_reals_match_operator_product() {
        let (l1, l2) = (0.3, 1.1);
        let k = KappaVector::from_reals(&[l1, l2]).unwrap();
        let w = partial_fraction_coefficients(&group_roots(&k, 1e-12)).unwrap();
        assert!((w[0].re - l1 / (l1 - l2)).abs() < 1e-14);
        assert!((w[1].re - l2 / (l2 - l1)).abs() < 1e-14);
    }

    #[test]
    fn duplicate_roots_are_degenerate() {
        let k = ComplexParam::real(1.0).unwrap();
        assert!(matches!(RootMultiplicitySet::new(vec![(k, 1), (k, 1)]), Err(OupError::DegenerateRoots(0, 1))));
    }

    #[test]
    fn model_json_round_trip() {
        let m = PhiVector::new(vec![-1.3, -0.56, -0.18], 1.0, 2.5).unwrap();
        let back = PhiVector::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
        assert!(PhiVector::from_json(r#"{"p": 2, "phi": [1.0], "sigma2": 1, "mu": 0}"#).is_err());
    }
}
