//! Command line front end: CSV series in, model JSON and plot-ready CSV out.
//!
//! Machine-readable output goes to `--output` when given, otherwise to
//! standard output. The human summary goes to standard output when an
//! output file is used and to standard error otherwise. Errors print one
//! line `error[CODE]: message` and exit with status 1, usage errors with 2.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use thiserror::Error;

use crate::ar::{ar2_from_correlations, gap_grid, lemma_gap, ou2_rho};
use crate::covariance::CovarianceModel;
use crate::error::OupError;
use crate::estimate::{
    default_horizon, empirical_autocovariance, mce_fit, mle_fit, FitOptions, FitResult, LikelihoodVariant,
};
use crate::params::{KappaVector, PhiVector};
use crate::predict::predict_range;
use crate::series::{MeanPolicy, TimeSeriesSample};
use crate::simulate::simulate_grid;

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "OUP_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: time stamps are not equally spaced (row {line})")]
    IrregularSpacing { path: String, line: usize },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] OupError),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "E_PARSE",
            CliError::IrregularSpacing { .. } => "E_SPACING",
            CliError::Io(_) => "E_IO",
            CliError::Usage(_) => "E_USAGE",
            CliError::Domain(e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "oup", version, about = "Ornstein-Uhlenbeck processes of order p")]
pub struct Cli {
    /// Worker threads for parallel sections (defaults to all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    MleDiff,
    MleCentered,
    Mce,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an OU(p) model to a CSV series and write the model JSON.
    Fit {
        /// Input CSV: one column `value` or two columns `t,value`, optional header.
        input: PathBuf,
        #[arg(long, value_enum, default_value = "mce")]
        method: MethodArg,
        /// Model order p.
        #[arg(long)]
        order: usize,
        /// Correlation horizon for matching correlations [default: floor(0.9 n)].
        #[arg(long = "T", alias = "horizon")]
        horizon: Option<usize>,
        /// Mean handling: sample, zero, or a numeric value.
        #[arg(long, default_value = "sample")]
        mean: String,
        /// Random starting points for matching correlations.
        #[arg(long, default_value_t = 20)]
        starts: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Simulate an equally spaced path; writes CSV `t,value`.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Number of steps; n + 1 values are written.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Interpolate and forecast with pointwise 2-sigma bands; writes CSV `t,mean,sd,lo,hi`.
    Predict {
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Start of the prediction grid [default: first observation time].
        #[arg(long)]
        from: Option<f64>,
        /// End of the prediction grid [default: last observation time + 1 step].
        #[arg(long)]
        to: Option<f64>,
        #[arg(long, default_value_t = 100)]
        points_per_step: usize,
        /// Condition only on the last W observations.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Model (and optionally empirical) autocovariances; writes CSV `lag,empirical,model`.
    Acf {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 20)]
        maxlag: usize,
        /// Series for the empirical column.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Sampling interval when no data are given.
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value = "sample")]
        mean: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// OU(2) versus AR(2): lag-3 gap and correlation table; optional gap grid CSV.
    CompareAr {
        #[arg(long, default_value_t = 0.84)]
        lambda1: f64,
        #[arg(long, default_value_t = 0.84)]
        lambda2: f64,
        /// Number of lags in the correlation table.
        #[arg(long, default_value_t = 10)]
        lags: usize,
        /// Write the `lambda1,lambda2,gap` grid to this file.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 3.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 0.02)]
        grid_step: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Convert between kappa and phi parameterisations.
    Convert {
        /// Comma separated rates, e.g. "0.9,0.2+0.4i,0.2-0.4i"; prints model JSON.
        #[arg(long, conflicts_with = "model")]
        kappa: Option<String>,
        /// Model JSON to list the rates of.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Fit { input, method, order, horizon, mean, starts, seed, output } => {
            cmd_fit(&input, method, order, horizon, &mean, starts, seed, output.as_deref())
        }
        Command::Simulate { model, n, tau, seed, output } => cmd_simulate(&model, n, tau, seed, output.as_deref()),
        Command::Predict { input, model, from, to, points_per_step, window, output } => {
            cmd_predict(&input, &model, from, to, points_per_step, window, output.as_deref())
        }
        Command::Acf { model, maxlag, data, tau, mean, output } => {
            cmd_acf(&model, maxlag, data.as_deref(), tau, &mean, output.as_deref())
        }
        Command::CompareAr { lambda1, lambda2, lags, grid, grid_max, grid_step, output } => {
            cmd_compare_ar(lambda1, lambda2, lags, grid.as_deref(), grid_max, grid_step, output.as_deref())
        }
        Command::Convert { kappa, model, sigma2, mu, output } => {
            cmd_convert(kappa.as_deref(), model.as_deref(), sigma2, mu, output.as_deref())
        }
    }
}

/// Reads a one- or two-column CSV series. Two-column input must be equally
/// spaced to within `1e-9` relative.
pub fn ingest_csv(path: &Path) -> CliResult<TimeSeriesSample> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ingest_csv_str(&text, &path.display().to_string())
}

pub fn ingest_csv_str(text: &str, name: &str) -> CliResult<TimeSeriesSample> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| CliError::Parse { path: name.into(), line, message: e.to_string() })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(|f| f.parse::<f64>()).collect();
        let fields = match parsed {
            Ok(v) => v,
            Err(_) if rows.is_empty() && width.is_none() => {
                // Header row.
                width = Some(record.len());
                continue;
            }
            Err(e) => {
                return Err(CliError::Parse { path: name.into(), line, message: format!("not a number: {e}") });
            }
        };
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(CliError::Parse {
                    path: name.into(),
                    line,
                    message: format!("expected {w} columns, found {}", fields.len()),
                })
            }
            _ => {}
        }
        if fields.is_empty() || fields.len() > 2 {
            return Err(CliError::Parse { path: name.into(), line, message: "expected one or two columns".into() });
        }
        rows.push((line, fields));
    }
    if rows.len() < 2 {
        return Err(CliError::Parse {
            path: name.into(),
            line: rows.len(),
            message: "need at least two observations".into(),
        });
    }
    if rows[0].1.len() == 1 {
        let values = rows.into_iter().map(|(_, f)| f[0]).collect();
        return Ok(TimeSeriesSample::new(values, 1.0)?);
    }
    let t0 = rows[0].1[0];
    let tau = rows[1].1[0] - rows[0].1[0];
    if !(tau > 0.0) {
        return Err(CliError::IrregularSpacing { path: name.into(), line: rows[1].0 });
    }
    for w in rows.windows(2) {
        let step = w[1].1[0] - w[0].1[0];
        if (step - tau).abs() > 1e-9 * tau {
            return Err(CliError::IrregularSpacing { path: name.into(), line: w[1].0 });
        }
    }
    let values = rows.iter().map(|(_, f)| f[1]).collect();
    Ok(TimeSeriesSample::with_origin(values, tau, t0)?)
}

/// Parses `"0.9,0.2+0.4i,0.2-0.4i"` into complex rates.
pub fn parse_kappa_list(text: &str) -> CliResult<Vec<Complex64>> {
    text.split(',')
        .map(|s| parse_complex(s.trim()).ok_or_else(|| CliError::Usage(format!("cannot parse rate {s:?}"))))
        .collect()
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(re) = s.parse::<f64>() {
        return Some(Complex64::new(re, 0.0));
    }
    let body = s.strip_suffix('i').or_else(|| s.strip_suffix('j'))?;
    // Split at the last sign that is not part of an exponent or the leading sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().ok()?;
            let im_text = &body[k..];
            let im = match im_text {
                "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().ok()?,
            };
            Some(Complex64::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().ok()?,
            };
            Some(Complex64::new(0.0, im))
        }
    }
}

fn read_model(path: &Path) -> CliResult<PhiVector> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(PhiVector::from_json(&text)?)
}

fn parse_mean(text: &str) -> CliResult<MeanPolicy> {
    text.parse::<MeanPolicy>().map_err(|e| CliError::Usage(e.to_string()))
}

/// Writes machine output to the file or stdout, and the summary to the other stream.
fn emit(output: Option<&Path>, data: &str, summary: &str) -> CliResult<()> {
    match output {
        Some(path) => {
            fs::write(path, data).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            print!("{summary}");
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(data.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn fmt_kappa(k: &KappaVector) -> String {
    k.entries().iter().map(|e| format!("{:.6}{:+.6}i", e.re(), e.im())).collect::<Vec<_>>().join(", ")
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    input: &Path,
    method: MethodArg,
    order: usize,
    horizon: Option<usize>,
    mean: &str,
    starts: usize,
    seed: u64,
    output: Option<&Path>,
) -> CliResult<()> {
    if order == 0 || order > 10 {
        return Err(CliError::Usage(format!("--order must be in 1..=10, got {order}")));
    }
    let policy = parse_mean(mean)?;
    let x = ingest_csv(input)?.with_mean_policy(policy);
    let opts = FitOptions { starts: starts.max(1), seed, ..FitOptions::default() };
    let horizon = horizon.unwrap_or_else(|| default_horizon(x.len()));
    if horizon == 0 || horizon >= x.len() {
        return Err(CliError::Usage(format!("--T must be in 1..{}, got {horizon}", x.len())));
    }
    let fit: FitResult = match method {
        MethodArg::Mce => mce_fit(&x, order, horizon, &opts)?,
        MethodArg::MleDiff | MethodArg::MleCentered => {
            let variant = if matches!(method, MethodArg::MleDiff) {
                LikelihoodVariant::Diff
            } else {
                LikelihoodVariant::Centered
            };
            let init = mce_fit(&x, order, horizon, &opts)?;
            mle_fit(&x, order, variant, Some(&init.model), &opts)?
        }
    };
    let mut summary = String::new();
    writeln!(summary, "method     {}", fit.method.name()).ok();
    writeln!(summary, "n          {}", x.len()).ok();
    writeln!(summary, "tau        {}", x.tau).ok();
    if fit.horizon > 0 {
        writeln!(summary, "T          {}", fit.horizon).ok();
    }
    writeln!(summary, "objective  {:.6}", fit.objective).ok();
    writeln!(summary, "evals      {}", fit.iterations).ok();
    writeln!(summary, "converged  {}", fit.converged).ok();
    let phi: Vec<String> = fit.model.phi.iter().map(|v| format!("{v:.4}")).collect();
    writeln!(summary, "phi        ({})", phi.join(", ")).ok();
    writeln!(summary, "sigma2     {:.4}", fit.model.sigma2).ok();
    writeln!(summary, "mu         {:.4}", fit.model.mu).ok();
    writeln!(summary, "kappa      {}", fmt_kappa(&fit.kappa())).ok();
    emit(output, &(fit.model.to_json() + "\n"), &summary)
}

fn cmd_simulate(model: &Path, n: usize, tau: f64, seed: u64, output: Option<&Path>) -> CliResult<()> {
    if n == 0 || !(tau > 0.0) {
        return Err(CliError::Usage("--n must be positive and --tau > 0".into()));
    }
    let model = read_model(model)?;
    let x = simulate_grid(&model, n, tau, seed)?;
    let mut csv = String::from("t,value\n");
    for (t, v) in x.times().iter().zip(&x.values) {
        writeln!(csv, "{t},{v}").ok();
    }
    let summary = format!("simulated {} values, tau = {tau}, seed = {seed}\n", x.len());
    emit(output, &csv, &summary)
}

fn cmd_predict(
    input: &Path,
    model: &Path,
    from: Option<f64>,
    to: Option<f64>,
    points_per_step: usize,
    window: Option<usize>,
    output: Option<&Path>,
) -> CliResult<()> {
    let model = read_model(model)?;
    let x = ingest_csv(input)?;
    let from = from.unwrap_or(x.t0);
    let to = to.unwrap_or(x.time(x.len() - 1) + x.tau);
    if !(to >= from) || points_per_step == 0 {
        return Err(CliError::Usage("need --from <= --to and --points-per-step > 0".into()));
    }
    if let Some(w) = window {
        if w == 0 || w > x.len() {
            return Err(CliError::Usage(format!("--window must be in 1..={}, got {w}", x.len())));
        }
    }
    let band = predict_range(&model, &x, from, to, points_per_step, window)?;
    let (lo, hi) = (band.lower(), band.upper());
    let mut csv = String::from("t,mean,sd,lo,hi\n");
    for i in 0..band.len() {
        writeln!(csv, "{},{},{},{},{}", band.times[i], band.mean[i], band.sd[i], lo[i], hi[i]).ok();
    }
    let summary = format!("predicted {} points on [{from}, {to}]\n", band.len());
    emit(output, &csv, &summary)
}

fn cmd_acf(
    model: &Path,
    maxlag: usize,
    data: Option<&Path>,
    tau: f64,
    mean: &str,
    output: Option<&Path>,
) -> CliResult<()> {
    let model = read_model(model)?;
    let policy = parse_mean(mean)?;
    let x = data.map(ingest_csv).transpose()?.map(|x| x.with_mean_policy(policy));
    let tau = x.as_ref().map_or(tau, |x| x.tau);
    if !(tau > 0.0) {
        return Err(CliError::Usage("--tau must be positive".into()));
    }
    let empirical = match &x {
        Some(x) => {
            if maxlag >= x.len() {
                return Err(CliError::Usage(format!("--maxlag must be below the series length {}", x.len())));
            }
            Some(empirical_autocovariance(x, maxlag))
        }
        None => None,
    };
    let cov = CovarianceModel::from_model(&model)?;
    let g = cov.gamma_grid(maxlag, tau);
    let mut csv = String::from("lag,empirical,model\n");
    for (k, gk) in g.iter().enumerate() {
        let e = empirical.as_ref().map(|e| e[k].to_string()).unwrap_or_default();
        writeln!(csv, "{k},{e},{gk}").ok();
    }
    let summary = format!("model variance {:.6}\n", cov.gamma0());
    emit(output, &csv, &summary)
}

fn cmd_compare_ar(
    lambda1: f64,
    lambda2: f64,
    lags: usize,
    grid: Option<&Path>,
    grid_max: f64,
    grid_step: f64,
    output: Option<&Path>,
) -> CliResult<()> {
    if !(lambda1 > 0.0 && lambda2 > 0.0) {
        return Err(CliError::Usage("rates must be positive".into()));
    }
    let gap = lemma_gap(lambda1, lambda2);
    let r1 = ou2_rho(lambda1, lambda2, 1, 1.0);
    let r2 = ou2_rho(lambda1, lambda2, 2, 1.0);
    let ar = ar2_from_correlations(r1, r2)?;
    let ar_rho = ar.extend_autocorrelations(&[r1, r2], lags.max(2));
    let mut csv = String::from("lag,ou2,ar2\n");
    for h in 1..=lags {
        writeln!(csv, "{h},{},{}", ou2_rho(lambda1, lambda2, h, 1.0), ar_rho[h - 1]).ok();
    }
    if let Some(path) = grid {
        if !(grid_step > 0.0 && grid_max >= grid_step) {
            return Err(CliError::Usage("need 0 < --grid-step <= --grid-max".into()));
        }
        let mut g = String::from("lambda1,lambda2,gap\n");
        for (a, b, v) in gap_grid(grid_max, grid_step) {
            writeln!(g, "{a},{b},{v}").ok();
        }
        fs::write(path, g).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    let summary = format!("lambda1 = {lambda1}, lambda2 = {lambda2}\nr3 - rho3 = {gap:.7}\n");
    emit(output, &csv, &summary)
}

fn cmd_convert(
    kappa: Option<&str>,
    model: Option<&Path>,
    sigma2: f64,
    mu: f64,
    output: Option<&Path>,
) -> CliResult<()> {
    match (kappa, model) {
        (Some(text), None) => {
            let k = KappaVector::from_complex(&parse_kappa_list(text)?)?;
            let m = PhiVector::from_kappa(&k, sigma2, mu)?;
            let summary = format!("kappa      {}\n", fmt_kappa(&k));
            emit(output, &(m.to_json() + "\n"), &summary)
        }
        (None, Some(path)) => {
            let m = read_model(path)?;
            let k = m.kappa()?;
            let mut csv = String::from("re,im\n");
            for e in k.entries() {
                writeln!(csv, "{},{}", e.re(), e.im()).ok();
            }
            emit(output, &csv, &format!("kappa      {}\n", fmt_kappa(&k)))
        }
        _ => Err(CliError::Usage("give exactly one of --kappa or --model".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        let k = parse_kappa_list("0.9, 0.2+0.4i,0.2-0.4i").unwrap();
        assert_eq!(k, vec![Complex64::new(0.9, 0.0), Complex64::new(0.2, 0.4), Complex64::new(0.2, -0.4)]);
        assert_eq!(parse_complex("1e-3+2e-1i"), Some(Complex64::new(1e-3, 0.2)));
        assert_eq!(parse_complex("-i"), Some(Complex64::new(0.0, -1.0)));
        assert!(parse_complex("abc").is_none());
    }

    #[test]
    fn single_column_series() {
        let text: String = (0..197).map(|i| format!("{}\n", i as f64 * 0.1)).collect();
        let x = ingest_csv_str(&text, "a.csv").unwrap();
        assert_eq!(x.len(), 197);
        assert_eq!(x.tau, 1.0);
    }

    #[test]
    fn two_column_series_with_header() {
        let x = ingest_csv_str("t,value\n0,1.5\n2,1.7\n4,1.2\n", "b.csv").unwrap();
        assert_eq!(x.tau, 2.0);
        assert_eq!(x.values, vec![1.5, 1.7, 1.2]);
    }

    #[test]
    fn jittered_time_stamps_are_rejected() {
        let err = ingest_csv_str("0,1\n1,2\n2.001,3\n3,4\n", "c.csv").unwrap_err();
        assert!(matches!(err, CliError::IrregularSpacing { line: 3, .. }));
    }

    #[test]
    fn parse_error_reports_line() {
        let err = ingest_csv_str("value\n1\n2\nxyz\n", "d.csv").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 4, .. }), "{err:?}");
    }
}
