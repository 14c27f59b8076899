//! The `gaf-hole` command line.
//!
//! Every subcommand produces one or more [`ReportRecord`]s, written as JSON
//! lines or CSV to stdout or `--out`. Exit codes: 0 on success, 1 on bad
//! input (unknown flags, invalid parameters, unwritable output), 2 when the
//! numerics fail.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaf_hole_core::coeff_models::CoefficientModel;
use gaf_hole_core::covariance::{determinant_report, minor_log_expression};
use gaf_hole_core::hermite::{
    annulus_escape, forced_zero_experiment, hermite_coeffs, saddle_point_approx,
};
use gaf_hole_core::hole::{
    hole_bracket_report, omega_certificate, omega_conditioned_sample, omega_log_prob_parts,
};
use gaf_hole_core::numerics::{wilson_interval, Z_975};
use gaf_hole_core::report::{emit, Format};
use gaf_hole_core::sampling::{draw_coeffs, truncation_degree, Distribution};
use gaf_hole_core::volume::{log_volume_exact, log_volume_upper_bound, volume_mc, VolumeQuery};
use gaf_hole_core::zeros::{
    count_zeros_disk, count_zeros_verified, min_zero_modulus, TruncatedSeries,
};
use gaf_hole_core::{Complex64, CovarianceSpec, Error, ReportRecord, ReportValue};

/// Environment variable for the worker count; `--threads` takes precedence.
pub const THREADS_ENV: &str = "THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "gaf-hole",
    version,
    about = "Hole probabilities of Gaussian entire functions"
)]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum ModelChoice {
    Gef,
    #[value(alias = "mittag-leffler")]
    Ml,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistChoice {
    Gaussian,
    Rademacher,
    Steinhaus,
}

impl From<DistChoice> for Distribution {
    fn from(d: DistChoice) -> Self {
        match d {
            DistChoice::Gaussian => Distribution::ComplexGaussian,
            DistChoice::Rademacher => Distribution::Rademacher,
            DistChoice::Steinhaus => Distribution::Steinhaus,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelChoice::Gef)]
    model: ModelChoice,
    /// Order parameter of the Mittag-Leffler model.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

impl ModelArgs {
    fn build(&self) -> Result<CoefficientModel, Error> {
        match self.model {
            ModelChoice::Gef => Ok(CoefficientModel::gef()),
            ModelChoice::Ml => CoefficientModel::mittag_leffler(self.alpha),
        }
    }

    fn params(&self, rec: ReportRecord) -> ReportRecord {
        match self.model {
            ModelChoice::Gef => rec.param("model", "gef"),
            ModelChoice::Ml => rec.param("model", "ml").param("alpha", self.alpha),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// S(r) and its leading asymptotic term.
    SOfR {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        r: f64,
    },
    /// Direct Monte Carlo hole probability next to the analytic bracket.
    Hole {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact log-probability of the event Ω_r and its certificate.
    Omega {
        #[arg(long)]
        r: f64,
    },
    /// Zero-free fraction among draws conditioned on Ω_r.
    Conditioned {
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 1_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Zeros of one random draw inside |z| < r.
    Zeros {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value_t = DistChoice::Gaussian)]
        dist: DistChoice,
        /// Truncation degree (default: certified for eps = 1e-9, failure probability 1e-9).
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cross-check the count against companion-matrix roots.
        #[arg(long)]
        verify: bool,
    },
    /// Volume of {x ∈ [0, t]^k : Π x ≤ s}.
    Volume {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        s: f64,
        /// Hit-or-miss samples; 0 skips the Monte Carlo estimate.
        #[arg(long, default_value_t = 0)]
        mc_samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Log-determinant of the covariance on a circle of points.
    Covdet {
        #[arg(long)]
        r: f64,
        /// Shrink factor (default 1 - r^{-2/5}).
        #[arg(long)]
        kappa: Option<f64>,
        /// Number of points (default ⌊e r²⌋).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Taylor coefficients of exp(z²/2 + βz) and the saddle-point approximation.
    #[command(allow_negative_numbers = true)]
    Hermite {
        #[arg(long, default_value_t = 1.0)]
        beta_re: f64,
        #[arg(long, default_value_t = 0.0)]
        beta_im: f64,
        /// Index for the approximation of g_{n-1}.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        c1: f64,
        #[arg(long, default_value_t = 2.0)]
        c2: f64,
        /// Scan limit for the annulus escape (default n).
        #[arg(long)]
        nmax: Option<usize>,
    },
    /// Smallest root modulus over bounded-coefficient draws.
    ForcedZero {
        #[arg(long, value_enum, default_value_t = DistChoice::Rademacher)]
        dist: DistChoice,
        #[arg(long, default_value_t = 1_000)]
        samples: usize,
        #[arg(long, default_value_t = 200)]
        degree: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        rotation: f64,
        /// Include every minimum modulus (for histograms).
        #[arg(long)]
        emit_values: bool,
    },
    /// Runs another subcommand over a cartesian grid, one record per point.
    Sweep {
        /// Subcommand to run, e.g. `hole`.
        #[arg(long)]
        cmd: String,
        /// `key=v1,v2,...`; repeat for more axes.
        #[arg(long = "set", value_name = "KEY=VALUES")]
        sets: Vec<String>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) if e.is_numeric_failure() => 2,
            Failure::Core(Error::Json(_) | Error::Csv(_)) => 2,
            Failure::Core(_) => 1,
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Records go to `stdout` unless `--out` is given.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(f) => {
            let _ = match &f {
                Failure::Usage(m) => writeln!(stderr, "error: {m}"),
                Failure::Core(e) => writeln!(stderr, "error: {e}"),
            };
            f.exit_code()
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| {
            Failure::Usage(format!(
                "{THREADS_ENV} must be a non-negative integer, got {v:?}"
            ))
        }),
        _ => Ok(0),
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    let threads = thread_count(cli.threads)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    let records = pool.install(|| match cli.command {
        Command::Sweep { cmd, sets } => sweep(&cmd, &sets),
        other => Ok(vec![timed(other)?]),
    })?;
    let format = match cli.format {
        OutFormat::Json => Format::Json,
        OutFormat::Csv => Format::Csv,
    };
    match cli.out {
        Some(path) => {
            let file = File::create(&path)
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            emit(&records, format, &mut w)?;
            w.flush().map_err(Error::from)?;
        }
        None => emit(&records, format, stdout)?,
    }
    Ok(())
}

fn timed(cmd: Command) -> Result<ReportRecord, Failure> {
    let start = Instant::now();
    let mut rec = single(cmd)?;
    rec.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(rec)
}

fn sweep(cmd: &str, sets: &[String]) -> Result<Vec<ReportRecord>, Failure> {
    if cmd == "sweep" {
        return Err(Failure::Usage("sweep cannot run sweep".into()));
    }
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for s in sets {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects key=v1,v2,..., got {s:?}")))?;
        let values: Vec<String> = values.split(',').map(str::to_string).collect();
        if key.is_empty() || values.iter().any(String::is_empty) {
            return Err(Failure::Usage(format!(
                "--set has an empty key or value: {s:?}"
            )));
        }
        axes.push((key.to_string(), values));
    }
    let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(points.len());
    for point in points {
        let mut argv = vec!["gaf-hole".to_string(), cmd.to_string()];
        for (k, v) in point {
            // Flags without a value are switched on by `key=true`.
            match v.as_str() {
                "true" => argv.push(format!("--{k}")),
                "false" => {}
                _ => argv.push(format!("--{k}={v}")),
            }
        }
        let inner = Cli::try_parse_from(&argv)
            .map_err(|e| Failure::Usage(format!("in sweep point {argv:?}: {e}")))?;
        if matches!(inner.command, Command::Sweep { .. }) {
            return Err(Failure::Usage("sweep cannot run sweep".into()));
        }
        out.push(timed(inner.command)?);
    }
    Ok(out)
}

fn single(cmd: Command) -> Result<ReportRecord, Failure> {
    let rec = match cmd {
        Command::SOfR { model, r } => {
            let m = model.build()?;
            let d = m.s_of_r_detail(r)?;
            let mut rec = model.params(ReportRecord::new("s-of-r", 0)).param("r", r);
            rec.result("S", d.value)
                .result("S_asymptotic", m.s_asymptotic(r)?)
                .result("S_over_r4", d.value / r.powi(4))
                .result("index_set_size", d.index_count)
                .result("last_index", d.last_index);
            rec
        }
        Command::Hole {
            model,
            r,
            samples,
            seed,
        } => {
            let m = model.build()?;
            let b = hole_bracket_report(&m, r, samples, seed)?;
            let mut rec = model
                .params(ReportRecord::new("hole", seed))
                .param("r", r)
                .param("samples", samples);
            rec.result("S", b.s_of_r)
                .result("S_asymptotic", b.s_asymptotic)
                .result("p_hat", b.mc.map(|e| e.point_value))
                .result("ci_low", b.mc.and_then(|e| e.ci_low))
                .result("ci_high", b.mc.and_then(|e| e.ci_high))
                .result("failed_samples", b.mc.map(|e| e.failed_samples))
                .result("truncation_degree", b.mc.map(|e| e.truncation_degree))
                .result("mc_skipped", b.mc_skipped)
                .result("omega_log_prob", b.omega_log_prob)
                .result("cert_valid", b.certificate_valid)
                .result("cert_margin", b.certificate_margin)
                .result("bound_status", b.bound_status.as_str())
                .result("bound_consistent", b.bound_consistent);
            rec
        }
        Command::Omega { r } => {
            let parts = omega_log_prob_parts(r)?;
            let cert = omega_certificate(r)?;
            let s = CoefficientModel::gef().s_of_r(r)?;
            let mut rec = ReportRecord::new("omega", 0).param("r", r);
            rec.result("omega_log_prob", parts.total())
                .result("clause_i", parts.clause_i)
                .result("clause_ii", parts.clause_ii)
                .result("clause_iii", parts.clause_iii)
                .result("tail_cut", parts.tail_cut)
                .result("S", s)
                .result("neg_log_prob_over_S", -parts.total() / s)
                .result("cert_margin", cert.margin)
                .result("cert_valid", cert.valid);
            rec
        }
        Command::Conditioned { r, samples, seed } => {
            let out = omega_conditioned_sample(&CoefficientModel::gef(), r, samples, seed)?;
            let (lo, hi) = wilson_interval(out.zero_free as u64, out.samples as u64, Z_975);
            let mut rec = ReportRecord::new("conditioned", seed)
                .param("r", r)
                .param("samples", samples);
            rec.result("zero_free", out.zero_free)
                .result("fraction", out.fraction)
                .result("ci_low", lo)
                .result("ci_high", hi)
                .result("cert_valid", out.certificate_valid)
                .result("truncation_degree", out.truncation_degree);
            rec
        }
        Command::Zeros {
            model,
            r,
            dist,
            degree,
            seed,
            verify,
        } => {
            let m = model.build()?;
            let degree = match degree {
                Some(d) => d,
                None => truncation_degree(&m, r, 1e-9, 1e-9)?,
            };
            let draw = draw_coeffs(dist.into(), degree + 1, seed)?;
            let ts = TruncatedSeries::new(&m, &draw)?;
            let mut rec = model
                .params(ReportRecord::new("zeros", seed))
                .param("r", r)
                .param("dist", format!("{:?}", dist).to_lowercase())
                .param("degree", degree);
            let res = if verify {
                let (res, oracle) = count_zeros_verified(&ts, r)?;
                rec.result("oracle_count", oracle)
                    .result("verified_by_oracle", res.verified_by_oracle);
                res
            } else {
                count_zeros_disk(&ts, r)?
            };
            rec.result("count", res.count)
                .result("radius_used", res.radius)
                .result("refinement_levels", res.refinement_levels as u64)
                .result("min_zero_modulus", min_zero_modulus(&ts)?);
            rec
        }
        Command::Volume {
            k,
            t,
            s,
            mc_samples,
            seed,
        } => {
            let q = VolumeQuery::new(k, t, s)?;
            let log_exact = log_volume_exact(&q);
            let bound = log_volume_upper_bound(&q).ok().map(f64::exp);
            let mut rec = ReportRecord::new("volume", seed)
                .param("k", k)
                .param("t", t)
                .param("s", s)
                .param("mc_samples", mc_samples);
            rec.result("exact", log_exact.exp())
                .result("log_exact", log_exact)
                .result("log_ratio", q.log_ratio())
                .result("bound_or_na", bound);
            if mc_samples > 0 {
                let est = volume_mc(&q, mc_samples, seed)?;
                rec.result("mc", est.value)
                    .result("mc_std_err", est.std_err)
                    .result("mc_ci", ReportValue::interval(est.ci_low, est.ci_high));
            } else {
                rec.result("mc", None::<f64>).result("mc_ci", None::<f64>);
            }
            rec
        }
        Command::Covdet { r, kappa, n } => {
            let spec = match (kappa, n) {
                (None, None) => CovarianceSpec::default_for(r)?,
                _ => {
                    let base = CovarianceSpec::default_for(r).ok();
                    let kappa = kappa
                        .or(base.map(|b| b.kappa))
                        .ok_or_else(|| Failure::Usage("--kappa is required when r ≤ 1".into()))?;
                    let n = n
                        .or(base.map(|b| b.n))
                        .ok_or_else(|| Failure::Usage("--n is required when r ≤ 1".into()))?;
                    CovarianceSpec::new(r, kappa, n)?
                }
            };
            let d = determinant_report(&spec)?;
            let mut rec = ReportRecord::new("covdet", 0)
                .param("r", r)
                .param("kappa", spec.kappa)
                .param("n", spec.n)
                .param("delta", spec.delta);
            rec.result("logdet_circulant", d.logdet_circulant)
                .result("logdet_dense", d.logdet_dense)
                .result("vandermonde_lower_bound", d.vandermonde_lower_bound)
                .result("minor_log_expression", minor_log_expression(&spec))
                .result("S_kappa_r", d.s_kappa_r)
                .result("minor_gap_to_S", d.minor_gap_to_s)
                .result("logdet_gap_to_S", d.logdet_gap_to_s)
                .result("min_log_eigenvalue", d.min_log_eigenvalue);
            rec
        }
        Command::Hermite {
            beta_re,
            beta_im,
            n,
            c1,
            c2,
            nmax,
        } => {
            let beta = Complex64::new(beta_re, beta_im);
            let nmax = nmax.unwrap_or(n);
            let series = hermite_coeffs(beta, n.max(nmax).max(2))?;
            let mut rec = ReportRecord::new("hermite", 0)
                .param("beta_re", beta_re)
                .param("beta_im", beta_im)
                .param("n", n)
                .param("c1", c1)
                .param("c2", c2)
                .param("nmax", nmax);
            if n >= 1 {
                rec.result("ln_abs_g", series.g(n - 1).ln_norm())
                    .result("ln_abs_h", series.ln_abs_h(n - 1));
            }
            if beta != Complex64::new(0.0, 0.0) && n >= 16 {
                let q = series.g(n - 1).ratio(&saddle_point_approx(beta, n)?);
                rec.result("saddle_ratio_re", q.re)
                    .result("saddle_ratio_im", q.im)
                    .result("saddle_deviation", (q - 1.0).norm());
            } else {
                rec.result("saddle_deviation", None::<f64>);
            }
            rec.result("escape_index", annulus_escape(beta, c1, c2, nmax)?);
            rec
        }
        Command::ForcedZero {
            dist,
            samples,
            degree,
            seed,
            rotation,
            emit_values,
        } => {
            let st = forced_zero_experiment(dist.into(), samples, degree, seed, rotation)?;
            let mut rec = ReportRecord::new("forced-zero", seed)
                .param("dist", format!("{:?}", dist).to_lowercase())
                .param("samples", samples)
                .param("degree", degree)
                .param("rotation", rotation);
            rec.result("max", st.max)
                .result("mean", st.mean)
                .result("all_finite", st.all_finite)
                .result("all_ones_min_modulus", st.values[0]);
            for (q, v) in &st.quantiles {
                rec.result(&format!("q{q}"), *v);
            }
            if emit_values {
                rec.result("values", ReportValue::numbers(&st.values));
            }
            rec
        }
        Command::Sweep { .. } => return Err(Failure::Usage("sweep cannot be nested".into())),
    };
    Ok(rec)
}

/// Entry point used by the binary.
pub fn main_with_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_failures_exit_with_two() {
        let boundary = Error::BoundaryZero {
            radius: 1.0,
            inner: Some(0),
            outer: Some(1),
        };
        assert_eq!(Failure::Core(boundary).exit_code(), 2);
        assert_eq!(Failure::Core(Error::DegeneratePolynomial).exit_code(), 2);
        assert_eq!(
            Failure::Core(Error::Precondition("x".into())).exit_code(),
            1
        );
        assert_eq!(Failure::Usage("x".into()).exit_code(), 1);
    }

    #[test]
    fn flag_overrides_environment() {
        assert_eq!(thread_count(Some(3)).unwrap(), 3);
    }
}
