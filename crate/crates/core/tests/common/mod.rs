#![allow(dead_code)]

use num_complex::Complex64;
use oup::{KappaVector, PhiVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn third_order() -> PhiVector {
    PhiVector::new(vec![-1.30, -0.56, -0.18], 1.0, 0.0).unwrap()
}

/// Random conjugation-closed rates of total order `p`, with real parts in
/// `[0.1, 3]`, some conjugate pairs and, when `repeats` is set, exact repeats.
pub fn random_kappa(rng: &mut impl Rng, p: usize, repeats: bool) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(p);
    while out.len() < p {
        let left = p - out.len();
        let roll: f64 = rng.random();
        if repeats && !out.is_empty() && roll < 0.25 {
            let pick = out[rng.random_range(0..out.len())];
            if pick.im == 0.0 {
                out.push(pick);
                continue;
            }
            if left >= 2 {
                out.push(pick);
                out.push(pick.conj());
                continue;
            }
        }
        let re = rng.random_range(0.1..3.0);
        if left >= 2 && roll < 0.6 {
            let im = rng.random_range(0.05..3.0);
            out.push(Complex64::new(re, im));
            out.push(Complex64::new(re, -im));
        } else {
            out.push(Complex64::new(re, 0.0));
        }
    }
    out
}

pub fn model_from_kappa(kappa: &[Complex64], sigma2: f64, mu: f64) -> PhiVector {
    PhiVector::from_kappa(&KappaVector::from_complex(kappa).unwrap(), sigma2, mu).unwrap()
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
