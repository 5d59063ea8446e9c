//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test --test acceptance` (add `--release` for speed).

mod common;

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use oup::estimate::{empirical_autocorrelation, empirical_autocovariance, mce_fit_with_starts};
use oup::quadrature::oracle_gamma_quadrature;
use oup::simulate::{ou1_innovation_variance, simulate_replicates};
use oup::{
    kappa_from_phi, lemma_gap, mle_fit, phi_from_kappa, predict, simulate_grid, CovarianceModel, FitOptions,
    KappaVector, LikelihoodVariant, MeanPolicy, PhiVector, PredictionRequest, TimeSeriesSample,
};

use common::{mean, model_from_kappa, random_kappa, rng, std_dev, sup_dist, third_order};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: Option<Duration>) -> bool {
    limit.is_none_or(|l| elapsed <= l)
}

fn c1_lemma_constant() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_oup"))
        .args(["compare-ar", "--lambda1", "0.84", "--lambda2", "0.84"])
        .output()
        .expect("run oup");
    let text = String::from_utf8_lossy(&out.stderr).to_string() + &String::from_utf8_lossy(&out.stdout);
    let reported = text.lines().find_map(|l| l.strip_prefix("r3 - rho3 = ")).and_then(|v| v.trim().parse::<f64>().ok());
    let direct = lemma_gap(0.84, 0.84);
    match reported {
        Some(r) if out.status.success() => {
            let pass = (r - 0.1032608).abs() <= 1e-6 && (direct - 0.1032608).abs() <= 1e-6;
            outcome(pass, format!("reported {r:.7}, computed {direct:.10}"))
        }
        _ => outcome(false, format!("compare-ar failed: {text}")),
    }
}

fn c2_parameter_map() -> Outcome {
    let want_phi = [-1.30, -0.56, -0.18];
    let kappa =
        KappaVector::from_complex(&[Complex64::new(0.9, 0.0), Complex64::new(0.2, 0.4), Complex64::new(0.2, -0.4)])
            .unwrap();
    let phi = phi_from_kappa(&kappa).unwrap();
    let e_phi = sup_dist(&phi, &want_phi);

    let mut back = kappa_from_phi(&want_phi).unwrap().values();
    back.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let want = [Complex64::new(0.2, -0.4), Complex64::new(0.2, 0.4), Complex64::new(0.9, 0.0)];
    let e_kappa = back.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    outcome(e_phi <= 1e-12 && e_kappa <= 1e-12, format!("kappa->phi {e_phi:.1e}, phi->kappa {e_kappa:.1e}"))
}

fn c3_covariance_oracle() -> Outcome {
    let mut r = rng(20_240_601);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = r.random_range(1..=5);
        let kappa = random_kappa(&mut r, p, true);
        let model = model_from_kappa(&kappa, r.random_range(0.2..3.0), 0.0);
        let cov = CovarianceModel::from_model(&model).unwrap();
        for _ in 0..10 {
            let t = r.random_range(0.0..15.0);
            let q = match oracle_gamma_quadrature(cov.kernel(), t) {
                Ok(q) => q,
                Err(e) => return outcome(false, format!("quadrature failed at kappa {kappa:?}, t {t}: {e}")),
            };
            worst = worst.max((cov.gamma(t) - q).abs() / cov.gamma0());
        }
    }
    outcome(worst <= 1e-8, format!("max |gamma - quadrature| / gamma(0) = {worst:.2e} over 2000 lags"))
}

fn c4_ou2_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    let axis: Vec<f64> = (1..=30).map(|i| 0.1 * i as f64).collect();
    for &l1 in &axis {
        for &l2 in &axis {
            if (l1 - l2).abs() < 1e-12 {
                continue;
            }
            let kappa = KappaVector::from_reals(&[l1, l2]).unwrap();
            let cov = CovarianceModel::from_model(&PhiVector::from_kappa(&kappa, 1.0, 0.0).unwrap()).unwrap();
            worst = worst.max((cov.gamma0() - 1.0 / (2.0 * (l1 + l2))).abs());
            for t in [0.0, 0.25, 1.0, 2.5, 7.0] {
                let e = (l2 * (-l2 * t).exp() - l1 * (-l1 * t).exp()) / (2.0 * (l2 * l2 - l1 * l1));
                worst = worst.max((cov.gamma(t) - e).abs());
            }
        }
    }
    outcome(worst <= 1e-12, format!("max abs error {worst:.2e} over 870 rate pairs"))
}

fn c5_ou1_ar1() -> Outcome {
    let mut e_exact = 0.0f64;
    for (l, s, tau) in [(0.3, 1.0, 1.0), (1.7, 0.5, 0.25), (0.05, 2.0, 2.0)] {
        let cov = CovarianceModel::from_model(&PhiVector::new(vec![-l], s * s, 0.0).unwrap()).unwrap();
        e_exact = e_exact.max((cov.autocorrelations(1, tau)[0] - (-l * tau).exp()).abs());
        let g0 = s * s / (2.0 * l);
        let want = g0 * (1.0 - (-2.0 * l * tau).exp());
        e_exact = e_exact.max((ou1_innovation_variance(l, s, tau) - want).abs() / want);
    }
    let (l, tau) = (0.8, 1.0);
    let m = PhiVector::new(vec![-l], 1.0, 0.0).unwrap();
    let x = simulate_grid(&m, 9_999, tau, 5).unwrap().with_mean_policy(MeanPolicy::Centered);
    let r1 = empirical_autocorrelation(&x, 1)[0];
    let bound = 3.0 / (x.len() as f64).sqrt();
    let dev = (r1 - (-l * tau).exp()).abs();
    outcome(
        e_exact <= 1e-15 && dev < bound,
        format!(
            "closed forms {e_exact:.1e}; simulated rho1 {r1:.4} vs {:.4} (|d| {dev:.4} < {bound:.4})",
            (-l * tau).exp()
        ),
    )
}

fn c6_simulation_fidelity() -> Outcome {
    let m = third_order();
    let cov = CovarianceModel::from_model(&m).unwrap();
    let reps = simulate_replicates(&m, 299, 1.0, 6, 200).unwrap();
    let est: Vec<Vec<f64>> =
        reps.into_iter().map(|x| empirical_autocovariance(&x.with_mean_policy(MeanPolicy::Centered), 5)).collect();
    let mut worst = 0.0f64;
    for h in 0..=5 {
        let col: Vec<f64> = est.iter().map(|e| e[h]).collect();
        let se = std_dev(&col) / (col.len() as f64).sqrt();
        worst = worst.max((mean(&col) - cov.gamma(h as f64)).abs() / se);
    }
    outcome(worst < 3.0, format!("max |mean - gamma| / MC s.e. = {worst:.2} over lags 0..5"))
}

fn c7_estimators() -> Outcome {
    let m = third_order();
    let opts = FitOptions::default();
    let reps = simulate_replicates(&m, 299, 1.0, 7, 50).unwrap();
    let horizons: Vec<usize> = (50..=270).step_by(10).collect();
    let mut err_diff = Vec::new();
    let mut err_cent = Vec::new();
    let mut variation = Vec::new();
    for x in &reps {
        let mut prev: Option<Vec<f64>> = None;
        let mut path: Vec<Vec<f64>> = Vec::new();
        let mut at_default = None;
        for &t in &horizons {
            let extra: Vec<Vec<f64>> = prev.iter().cloned().collect();
            let fit = mce_fit_with_starts(x, 3, t, &opts, &extra).unwrap();
            prev = Some(fit.model.phi.clone());
            path.push(fit.model.phi.clone());
            if t == 270 {
                at_default = Some(fit.model);
            }
        }
        let v = (0..3)
            .map(|j| {
                let col = path.iter().map(|p| p[j]);
                col.clone().fold(f64::NEG_INFINITY, f64::max) - col.fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        variation.push(v);
        let init = at_default.unwrap();
        let d = mle_fit(x, 3, LikelihoodVariant::Diff, Some(&init), &opts).unwrap();
        let c = mle_fit(x, 3, LikelihoodVariant::Centered, Some(&init), &opts).unwrap();
        err_diff.push(sup_dist(&d.model.phi, &m.phi));
        err_cent.push(sup_dist(&c.model.phi, &m.phi));
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    let below = variation.iter().filter(|v| **v < 0.1).count();
    let (md, mc, mv) = (median(&mut err_diff), median(&mut err_cent), median(&mut variation));
    outcome(
        md < 0.5 && mc < 0.5 && mv < 0.1,
        format!(
            "MLE median sup error diff {md:.3}, centered {mc:.3}; MCE T-variation (T = 50..270) median {mv:.4}, \
             {below}/50 replicates below 0.1"
        ),
    )
}

fn c8_predictor() -> Outcome {
    let m = third_order().with_mu(0.4);
    let g0 = CovarianceModel::from_model(&m).unwrap().gamma0();
    let x = simulate_grid(&m, 80, 1.0, 8).unwrap();
    let band = predict(&m, &PredictionRequest { observed: x.clone(), targets: x.times(), window: None }).unwrap();
    let interp = x
        .values
        .iter()
        .zip(&band.mean)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        .max(band.sd.iter().fold(0.0, |a, b| a.max(*b)));

    let dense: Vec<f64> = (0..=9000).map(|k| -5.0 + 0.01 * k as f64).collect();
    let band = predict(&m, &PredictionRequest { observed: x, targets: dense, window: None }).unwrap();
    let bounded = band.sd.iter().all(|s| (0.0..=g0).contains(&(s * s)));

    let (l, s2, mu): (f64, f64, f64) = (0.6, 2.0, 0.7);
    let ou1 = PhiVector::new(vec![-l], s2, mu).unwrap();
    let y = simulate_grid(&ou1, 30, 1.0, 9).unwrap();
    let last = *y.values.last().unwrap();
    let targets: Vec<f64> = [0.1, 1.0, 4.0].iter().map(|d| 30.0 + d).collect();
    let b = predict(&ou1, &PredictionRequest { observed: y, targets: targets.clone(), window: None }).unwrap();
    let mut e_ou1 = 0.0f64;
    for (i, t) in targets.iter().enumerate() {
        let d = t - 30.0;
        e_ou1 = e_ou1.max((b.mean[i] - (mu + (-l * d).exp() * (last - mu))).abs());
        e_ou1 = e_ou1.max((b.sd[i].powi(2) - s2 / (2.0 * l) * (1.0 - (-2.0 * l * d).exp())).abs());
    }

    let reps = simulate_replicates(&third_order(), 100, 1.0, 10, 500).unwrap();
    let covered = reps
        .iter()
        .filter(|p| {
            let obs = TimeSeriesSample::new(p.values[..100].to_vec(), 1.0).unwrap();
            let b = predict(&third_order(), &PredictionRequest { observed: obs, targets: vec![100.0], window: None })
                .unwrap();
            (p.values[100] - b.mean[0]).abs() <= 2.0 * b.sd[0]
        })
        .count();
    let cov_rate = covered as f64 / 500.0;
    outcome(
        interp < 1e-8 && bounded && e_ou1 < 1e-10 && cov_rate >= 0.93,
        format!(
            "interpolation {interp:.1e}, variance in [0, gamma(0)]: {bounded}, OU(1) closed form {e_ou1:.1e}, \
             one-step coverage {cov_rate:.3}"
        ),
    )
}

fn c9_workflow() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (series, source) = match std::env::var("OUP_SERIES_A") {
        Ok(p) => (std::path::PathBuf::from(p.clone()), p),
        Err(_) => {
            let x = simulate_grid(&third_order().with_mu(17.0), 196, 1.0, 9).unwrap();
            let path = dir.path().join("series.csv");
            let text: String = x.values.iter().map(|v| format!("{v}\n")).collect();
            fs::write(&path, text).unwrap();
            (path, "simulated 197-point stand-in (set OUP_SERIES_A for real data)".to_string())
        }
    };
    let model = dir.path().join("model.json");
    let bin = env!("CARGO_BIN_EXE_oup");
    let fit = Command::new(bin)
        .arg("fit")
        .arg(&series)
        .args(["--method", "mce", "--order", "3", "-o"])
        .arg(&model)
        .output()
        .unwrap();
    if !fit.status.success() {
        return outcome(false, format!("fit failed: {}", String::from_utf8_lossy(&fit.stderr)));
    }
    let acf = Command::new(bin)
        .args(["acf", "--maxlag", "25", "--model"])
        .arg(&model)
        .arg("--data")
        .arg(&series)
        .output()
        .unwrap();
    if !acf.status.success() {
        return outcome(false, format!("acf failed: {}", String::from_utf8_lossy(&acf.stderr)));
    }
    let fitted = PhiVector::from_json(&fs::read_to_string(&model).unwrap()).unwrap();
    let kappa = fitted.kappa().unwrap();
    let rows = String::from_utf8_lossy(&acf.stdout).lines().count();
    outcome(
        kappa.min_re() > 0.0 && rows == 27,
        format!("{source}: min Re kappa = {:.3e}, acf rows {}", kappa.min_re(), rows - 1),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Option<u64>); 9] = [
        ("lag-3 gap constant", c1_lemma_constant, Some(1)),
        ("example parameter map", c2_parameter_map, Some(1)),
        ("closed form vs quadrature", c3_covariance_oracle, Some(60)),
        ("OU(2) closed form", c4_ou2_closed_form, None),
        ("OU(1) = AR(1)", c5_ou1_ar1, None),
        ("simulation fidelity", c6_simulation_fidelity, Some(300)),
        ("estimator sanity", c7_estimators, Some(900)),
        ("predictor properties", c8_predictor, None),
        ("workflow smoke test", c9_workflow, None),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let limit = limit.map(Duration::from_secs);
        let timely = within(elapsed, limit);
        let pass = o.pass && timely;
        if !pass {
            failed += 1;
        }
        let budget = limit.map(|l| format!(" / {}s", l.as_secs())).unwrap_or_default();
        println!(
            "criterion {}: {} {name}: {} [{:.2}s{budget}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
