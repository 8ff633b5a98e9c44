use accel_core::adaptive::{run_adaptive, LineSearch};
use accel_core::coeffs::CoefficientTable;
use accel_core::error::Error as CoreError;
use accel_core::fsfo::{build_schedule, run_fsfo, Method, RunOptions};
use accel_core::lyapunov::{monte_carlo, verify_decrement_tol, verify_rate, LYAPUNOV_TOL};
use accel_core::oracles::registry;
use accel_core::par::{par_map, with_jobs};
use accel_core::pep::{check_certificate, CertTolerances};
use accel_core::trajectory::Trajectory;
use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const TOL_ENV: &str = "ACCEL_CERT_TOL";

#[derive(Parser)]
#[command(name = "accel", version, about = "Run and verify accelerated first-order methods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one problem and write its trajectory.
    Run(RunArgs),
    /// Check the closed-form dual certificate over a range of horizons.
    Certify(CertifyArgs),
    /// Check Lyapunov decrements and rates across seeds.
    VerifyLyapunov(VerifyArgs),
    /// Rate check over a range of horizons, one CSV row per horizon.
    Sweep(SweepArgs),
    /// Print the method ids.
    ListMethods,
    /// Print the problem ids.
    ListProblems,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StartPoint {
    #[default]
    Default,
    AtMinimizer,
}

/// Values a JSON config file may set. Flags override them.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    method: Option<String>,
    problem: Option<String>,
    n: Option<usize>,
    seed: Option<u64>,
    l0: Option<f64>,
    eta: Option<f64>,
    output: Option<PathBuf>,
    format: Option<Format>,
    x0: Option<StartPoint>,
    tolerance: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON file with default values for the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Initial smoothness estimate for line searches (default L/10).
    #[arg(long)]
    l0: Option<f64>,
    /// Backtracking growth factor (default 2).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, value_enum)]
    x0: Option<StartPoint>,
    /// Base verification tolerance (also settable through ACCEL_CERT_TOL).
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    /// Horizon or inclusive range such as 1..25.
    #[arg(long)]
    n: Option<String>,
    /// Smoothness constant used in the certificate.
    #[arg(long, default_value_t = 1.0)]
    l: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<usize>,
    /// Number of seeds (seed, seed + 1, ...).
    #[arg(long, default_value_t = 1)]
    seeds: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Inclusive horizon range such as 1..50.
    #[arg(long)]
    n: Option<String>,
}

/// Flags merged over the config file.
#[derive(Debug, Clone)]
struct Settings {
    method: Option<Method>,
    problem: String,
    n: Option<usize>,
    seed: u64,
    l0: Option<f64>,
    eta: f64,
    output: Option<PathBuf>,
    format: Format,
    x0: StartPoint,
    tol: f64,
    jobs: Option<usize>,
}

/// Error raised for bad input; maps to the usage exit code.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

fn env_tolerance() -> Result<Option<f64>> {
    match std::env::var(TOL_ENV) {
        Ok(v) => {
            let t: f64 = v.trim().parse().map_err(|_| usage(format!("{TOL_ENV} is not a number: {v}")))?;
            Ok(Some(t))
        }
        Err(_) => Ok(None),
    }
}

fn settle(c: &Common, n: Option<usize>) -> Result<Settings> {
    let file = match &c.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let method = c
        .method
        .clone()
        .or(file.method)
        .map(|id| Method::from_id(&id).map_err(|e| usage(e.to_string())))
        .transpose()?;
    let tol = c.tol.or(env_tolerance()?).or(file.tolerance).unwrap_or(LYAPUNOV_TOL);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(usage(format!("tolerance must be positive, got {tol}")));
    }
    Ok(Settings {
        method,
        problem: c.problem.clone().or(file.problem).unwrap_or_else(|| "quad-diag-10".into()),
        n: n.or(file.n),
        seed: c.seed.or(file.seed).unwrap_or(0),
        l0: c.l0.or(file.l0),
        eta: c.eta.or(file.eta).unwrap_or(2.0),
        output: c.output.clone().or(file.output),
        format: c.format.or(file.format).unwrap_or_default(),
        x0: c.x0.or(file.x0).unwrap_or_default(),
        tol,
        jobs: c.jobs,
    })
}

impl Settings {
    fn method(&self) -> Result<Method> {
        self.method.ok_or_else(|| usage("--method is required"))
    }

    fn horizon(&self) -> Result<usize> {
        let n = self.n.ok_or_else(|| usage("--n is required"))?;
        if n == 0 {
            return Err(usage("N must be at least 1"));
        }
        Ok(n)
    }

    fn cert_tolerances(&self) -> CertTolerances {
        CertTolerances::scaled(self.tol / LYAPUNOV_TOL)
    }
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| usage(format!("bad horizon '{s}'")));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if a == 0 || b < a {
        return Err(usage(format!("bad horizon range '{s}'")));
    }
    Ok((a, b))
}

fn check_horizon(method: Method, n: usize) -> Result<()> {
    if n < method.min_horizon() {
        return Err(usage(format!("{method} needs N >= {}, got {n}", method.min_horizon())));
    }
    Ok(())
}

struct Prepared {
    problem: registry::Problem,
    x0: Vec<f64>,
}

fn prepare(s: &Settings) -> Result<Prepared> {
    let problem = registry::lookup(&s.problem).map_err(|e| usage(e.to_string()))?;
    let x0 = match s.x0 {
        StartPoint::Default => problem.x0.clone(),
        StartPoint::AtMinimizer => problem
            .oracle
            .x_star
            .clone()
            .ok_or_else(|| usage(format!("problem {} has no known minimizer", s.problem)))?,
    };
    Ok(Prepared { problem, x0 })
}

fn run_method(method: Method, p: &Prepared, n: usize, seed: u64, s: &Settings) -> Result<Trajectory> {
    if method == Method::Custom {
        return Err(usage("custom schedules are available through the library only"));
    }
    check_horizon(method, n)?;
    let o = &p.problem.oracle;
    let t = if method.is_fixed_step() {
        let sched = build_schedule(method, n, CoefficientTable::global())?;
        run_fsfo(&sched, o, &p.x0, &RunOptions::default())?
    } else {
        let ls = LineSearch::new(s.l0.unwrap_or(o.l / 10.0), s.eta).map_err(|e| usage(e.to_string()))?;
        run_adaptive(method, o, &p.x0, n, seed, &ls)?
    };
    Ok(t)
}

fn emit(s: &Settings, text: &str) -> Result<()> {
    match &s.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<bool> {
    let s = settle(&args.common, args.n)?;
    let method = s.method()?;
    let n = s.horizon()?;
    let p = prepare(&s)?;
    let t = run_method(method, &p, n, s.seed, &s)?;
    // Problems without a known minimizer still produce a trajectory.
    let rate = match verify_rate(method, &t, CoefficientTable::global(), &p.problem.oracle) {
        Ok(r) => Some(r),
        Err(CoreError::MissingMinimizer) => None,
        Err(e) => return Err(e.into()),
    };
    let bounds = rate.as_ref().map(|r| r.by_row(t.len())).unwrap_or_default();
    let text = match s.format {
        Format::Csv => t.to_csv(p.problem.oracle.f_star, &bounds),
        Format::Json => {
            let mut v = serde_json::to_string_pretty(&serde_json::json!({ "trajectory": t, "rate": rate }))?;
            v.push('\n');
            v
        }
    };
    emit(&s, &text)?;
    let passed = rate.as_ref().is_none_or(|r| r.passed);
    if let Some(r) = rate.as_ref().filter(|r| !r.passed) {
        eprintln!("bound violated: minimum slack {:.3e}", r.min_slack());
    }
    Ok(passed)
}

fn cmd_certify(args: &CertifyArgs) -> Result<bool> {
    let s = settle(&args.common, None)?;
    let method = s.method()?;
    if !accel_core::pep::CERTIFIED_METHODS.contains(&method) {
        return Err(usage(format!("no certificate for {method}")));
    }
    if !(args.l.is_finite() && args.l > 0.0) {
        return Err(usage("--l must be positive"));
    }
    let range = args.n.clone().or_else(|| s.n.map(|n| n.to_string())).ok_or_else(|| usage("--n is required"))?;
    let (lo, hi) = parse_range(&range)?;
    check_horizon(method, lo)?;
    let horizons: Vec<usize> = (lo..=hi).collect();
    let tol = s.cert_tolerances();
    let table = CoefficientTable::global();
    let reports = with_jobs(s.jobs, || par_map(&horizons, |&n| check_certificate(method, n, args.l, table, &tol)));
    let reports = reports.into_iter().collect::<accel_core::error::Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed);
    for r in reports.iter().filter(|r| !r.passed) {
        eprintln!("N = {}: {}", r.n, r.failures.join("; "));
    }
    let mut text = serde_json::to_string_pretty(&reports)?;
    text.push('\n');
    emit(&s, &text)?;
    Ok(passed)
}

#[derive(Serialize)]
struct SeedSummary {
    seed: u64,
    lyapunov: Option<LyapunovSummary>,
    rate_passed: bool,
    rate_min_slack: f64,
}

#[derive(Serialize)]
struct LyapunovSummary {
    passed: bool,
    max_identity_residual: f64,
    min_relative_slack: f64,
    first_failure: Option<String>,
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    let s = settle(&args.common, args.n)?;
    let method = s.method()?;
    let n = s.horizon()?;
    if args.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let p = prepare(&s)?;
    let seeds: Vec<u64> = (0..args.seeds as u64).map(|i| s.seed.wrapping_add(i)).collect();
    let table = CoefficientTable::global();
    let o = &p.problem.oracle;
    let results = with_jobs(s.jobs, || {
        par_map(&seeds, |&seed| -> Result<SeedSummary> {
            let t = run_method(method, &p, n, seed, &s)?;
            let lyapunov = match verify_decrement_tol(method, &t, table, o, s.tol) {
                Ok(r) => Some(LyapunovSummary {
                    passed: r.passed,
                    max_identity_residual: r.max_identity_residual,
                    min_relative_slack: r.min_relative_slack,
                    first_failure: r.first_failure(s.tol),
                }),
                Err(CoreError::Unsupported(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let rate = verify_rate(method, &t, table, o)?;
            Ok(SeedSummary { seed, lyapunov, rate_passed: rate.passed, rate_min_slack: rate.min_slack() })
        })
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mc = if method.is_randomized() && seeds.len() > 1 {
        Some(with_jobs(s.jobs, || monte_carlo(method, o, &p.x0, n, &seeds))?)
    } else {
        None
    };
    let passed = results.iter().all(|r| r.rate_passed && r.lyapunov.as_ref().is_none_or(|l| l.passed))
        && mc.as_ref().is_none_or(|m| m.passed);
    let out = serde_json::json!({
        "method": method,
        "problem": s.problem,
        "n": n,
        "tolerance": s.tol,
        "seeds": results,
        "monte_carlo": mc,
        "passed": passed,
    });
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    emit(&s, &text)?;
    Ok(passed)
}

fn cmd_sweep(args: &SweepArgs) -> Result<bool> {
    let s = settle(&args.common, None)?;
    let method = s.method()?;
    let range = args.n.clone().or_else(|| s.n.map(|n| format!("1..{n}"))).ok_or_else(|| usage("--n is required"))?;
    let (lo, hi) = parse_range(&range)?;
    check_horizon(method, lo)?;
    let p = prepare(&s)?;
    let horizons: Vec<usize> = (lo..=hi).collect();
    let table = CoefficientTable::global();
    let rows = with_jobs(s.jobs, || {
        par_map(&horizons, |&n| -> Result<(usize, f64, f64, bool)> {
            let t = run_method(method, &p, n, s.seed, &s)?;
            let r = verify_rate(method, &t, table, &p.problem.oracle)?;
            let last = r.entries.iter().rev().find(|e| e.k == n).ok_or_else(|| anyhow!("no rate entry at N = {n}"))?;
            Ok((n, last.observed, last.bound, r.passed))
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let passed = rows.iter().all(|r| r.3);
    let text = match s.format {
        Format::Csv => {
            let mut t = String::from("n,observed,bound,slack,passed\n");
            for (n, obs, b, ok) in &rows {
                t.push_str(&format!("{n},{obs:.16e},{b:.16e},{:.16e},{}\n", b - obs, u8::from(*ok)));
            }
            t
        }
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|(n, obs, b, ok)| serde_json::json!({ "n": n, "observed": obs, "bound": b, "passed": ok }))
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&v)?)
        }
    };
    emit(&s, &text)?;
    Ok(passed)
}

fn list_methods() {
    for m in Method::ALL {
        println!("{:14} {}", m.id(), m.description());
    }
}

fn list_problems() {
    for (id, desc) in registry::PROBLEMS {
        println!("{id:14} {desc}");
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<CoreError>() {
        Some(
            CoreError::LineSearch { .. }
            | CoreError::NonFinite(_)
            | CoreError::ReplayMismatch { .. }
            | CoreError::SingularRow { .. }
            | CoreError::NotPsd { .. }
            | CoreError::Mismatch(_),
        ) => EXIT_FAIL,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS });
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Certify(a) => cmd_certify(a),
        Command::VerifyLyapunov(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ListMethods => {
            list_methods();
            Ok(true)
        }
        Command::ListProblems => {
            list_problems();
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::from(EXIT_PASS),
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..25").unwrap(), (1, 25));
        assert_eq!(parse_range("1..=3").unwrap(), (1, 3));
        assert_eq!(parse_range("7").unwrap(), (7, 7));
        assert!(parse_range("0..3").is_err());
        assert!(parse_range("5..2").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn usage_errors_map_to_two() {
        assert_eq!(exit_code(&usage("bad")), EXIT_USAGE);
        assert_eq!(exit_code(&CoreError::LineSearch { k: 0, max: 1 }.into()), EXIT_FAIL);
        assert_eq!(exit_code(&CoreError::UnknownId("x".into()).into()), EXIT_USAGE);
    }
}
