//! Command-line front end: reads the pencil, runs a solver, writes a JSON report.

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::dense::{ordered_qz, GeneralizedEigenvalue};
use crate::error::{Error, Result};
use crate::matrix::{read_matrix_market, Pencil};
use crate::precond::{build_preconditioner_or_jacobi, PrecKind};
use crate::solver::{deflated_solve, gplhr_eig_solve, ConvergenceState, DirectionMode, SolverConfig};
use crate::C64;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INPUT: i32 = 66;

/// Largest dimension densified by `--verify`.
pub const ORACLE_MAX_DIM: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Schur,
    Eig,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "gplhr", version, about = "Eigenvalues of a sparse pencil (A, B) closest to a shift")]
pub struct Args {
    /// Matrix Market file holding A.
    #[arg(long)]
    pub matrix_a: PathBuf,
    /// Matrix Market file holding B; omit for B = I.
    #[arg(long)]
    pub matrix_b: Option<PathBuf>,
    /// Target shift, e.g. `10`, `-0.1+0.5i`, `2i`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub shift: C64,
    /// Number of eigenvalues per batch.
    #[arg(long)]
    pub nev: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// `none`, `jacobi`, `ilut:<tol>`, `gmres:<steps>+<inner>`.
    #[arg(long, default_value = "ilut:1e-3", value_parser = parse_prec)]
    pub prec: PrecKind,
    #[arg(long, value_enum, default_value_t = Mode::Schur)]
    pub mode: Mode,
    /// `thick`, `lobpcg` or `none`.
    #[arg(long, default_value = "thick", value_parser = parse_directions)]
    pub directions: DirectionMode,
    /// Run this many deflated batches of `nev` eigenvalues.
    #[arg(long, default_value_t = 1)]
    pub batches: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here (and the residual history next to it as CSV).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Compare against a dense QZ of the full pencil.
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Parses `a`, `a+bi`, `a-bi`, `bi`, `i` and `-i`.
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let bad = || format!("cannot parse '{s}' as a complex number");
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not a leading sign or part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

fn parse_prec(s: &str) -> std::result::Result<PrecKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_directions(s: &str) -> std::result::Result<DirectionMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEigenvalue {
    pub re: f64,
    pub im: f64,
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub matrix_a: String,
    pub matrix_b: Option<String>,
    pub n: usize,
    pub shift: [f64; 2],
    pub nev: usize,
    pub m: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub prec: String,
    pub mode: Mode,
    pub directions: String,
    pub batches: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyStatus {
    Pass,
    Mismatch,
    OracleFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: VerifyStatus,
    pub max_relative_mismatch: Option<f64>,
    /// Report column with the largest mismatch.
    pub column: Option<usize>,
    pub message: String,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.status == VerifyStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    /// Sorted by distance to the shift.
    pub eigenvalues: Vec<ReportEigenvalue>,
    pub iterations: usize,
    pub matvec_count: usize,
    pub prec_count: usize,
    /// Relative eigenresiduals per iteration, columns in report order.
    pub residual_history: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    pub locked_drift: f64,
    pub stagnated: bool,
    pub wall_time: f64,
    pub config: ConfigEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verdict>,
}

impl RunReport {
    pub fn all_converged(&self) -> bool {
        !self.converged.is_empty() && self.converged.iter().all(|&c| c)
    }

    pub fn ratios(&self) -> Vec<C64> {
        self.eigenvalues.iter().map(|e| C64::new(e.re, e.im)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per iteration: `iteration,col0,col1,…`.
    pub fn write_residual_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io { path: path.to_path_buf(), source };
        let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
        let k = self.residual_history.iter().map(Vec::len).max().unwrap_or(0);
        let mut header = vec!["iteration".to_string()];
        header.extend((0..k).map(|j| format!("col{j}")));
        w.write_record(&header).map_err(|e| io(e.into()))?;
        for (it, row) in self.residual_history.iter().enumerate() {
            let mut rec = vec![(it + 1).to_string()];
            rec.extend(row.iter().map(|r| format!("{r:e}")));
            rec.resize(k + 1, String::new());
            w.write_record(&rec).map_err(|e| io(e.into()))?;
        }
        w.flush().map_err(io)
    }
}

fn build_report(
    eigenvalues: &[GeneralizedEigenvalue],
    state: &ConvergenceState,
    sigma: C64,
    config: ConfigEcho,
    wall_time: f64,
) -> RunReport {
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eigenvalues[i].distance_to(sigma).total_cmp(&eigenvalues[j].distance_to(sigma)));
    let permute_f = |row: &Vec<f64>| -> Vec<f64> {
        if row.len() == order.len() {
            order.iter().map(|&i| row[i]).collect()
        } else {
            row.clone()
        }
    };
    let converged = if state.converged.len() == order.len() {
        order.iter().map(|&i| state.converged[i]).collect()
    } else {
        state.converged.clone()
    };
    RunReport {
        eigenvalues: order
            .iter()
            .map(|&i| {
                let ev = &eigenvalues[i];
                let r = ev.ratio();
                ReportEigenvalue { re: r.re, im: r.im, alpha: [ev.alpha.re, ev.alpha.im], beta: [ev.beta.re, ev.beta.im] }
            })
            .collect(),
        iterations: state.iterations,
        matvec_count: state.matvec_count,
        prec_count: state.prec_count,
        residual_history: state.residual_history.iter().map(permute_f).collect(),
        converged,
        locked_drift: state.locked_drift,
        stagnated: state.stagnated,
        wall_time,
        config,
        verification: None,
    }
}

fn load_pencil(args: &Args) -> Result<Pencil> {
    let a = read_matrix_market(&args.matrix_a)?;
    let b = args.matrix_b.as_ref().map(read_matrix_market).transpose()?;
    Pencil::new(a, b)
}

fn echo(args: &Args, n: usize) -> ConfigEcho {
    ConfigEcho {
        matrix_a: args.matrix_a.display().to_string(),
        matrix_b: args.matrix_b.as_ref().map(|p| p.display().to_string()),
        n,
        shift: [args.shift.re, args.shift.im],
        nev: args.nev,
        m: args.m,
        tol: args.tol,
        max_iter: args.max_iter,
        prec: args.prec.to_string(),
        mode: args.mode,
        directions: args.directions.to_string(),
        batches: args.batches,
        seed: args.seed,
        threads: args.threads,
    }
}

/// Builds the pencil, preconditioner and configuration and runs the requested solver.
pub fn solve(args: &Args, pencil: &Pencil) -> Result<RunReport> {
    if args.batches == 0 {
        return Err(Error::InvalidInput("--batches must be at least 1".into()));
    }
    if args.mode == Mode::Eig && args.batches > 1 {
        return Err(Error::InvalidInput("--batches is only supported with --mode schur".into()));
    }
    let sigma = args.shift;
    let start = Instant::now();
    let t = build_preconditioner_or_jacobi(pencil, sigma, &args.prec)?;
    let cfg = SolverConfig {
        m: args.m,
        tol: args.tol,
        max_iter: args.max_iter,
        direction_mode: args.directions,
        seed: args.seed,
        ..SolverConfig::new(sigma, args.nev)
    };
    let (eigenvalues, state) = match args.mode {
        Mode::Schur => {
            let res = deflated_solve(pencil, &cfg, &t, args.batches)?;
            (res.eigenvalues, res.state)
        }
        Mode::Eig => {
            let res = gplhr_eig_solve(pencil, &cfg, &t, None)?;
            (res.eigenvalues, res.state)
        }
    };
    let wall_time = start.elapsed().as_secs_f64();
    Ok(build_report(&eigenvalues, &state, sigma, echo(args, pencil.n()), wall_time))
}

/// Compares the report eigenvalues with the `k` eigenvalues of the dense pencil closest to `sigma`.
pub fn verify_against_oracle(p: &Pencil, report: &RunReport, sigma: C64, k: usize) -> Verdict {
    verify_with_limit(p, report, sigma, k, ORACLE_MAX_DIM)
}

/// As [`verify_against_oracle`] with a caller-chosen densification limit.
pub fn verify_with_limit(p: &Pencil, report: &RunReport, sigma: C64, k: usize, max_dim: usize) -> Verdict {
    let failure = |message: String| Verdict {
        status: VerifyStatus::OracleFailure,
        max_relative_mismatch: None,
        column: None,
        message,
    };
    if p.n() > max_dim {
        return failure(format!("pencil of order {} exceeds the oracle limit {max_dim}", p.n()));
    }
    let got = report.ratios();
    if got.len() != k || k > p.n() {
        return failure(format!("report holds {} eigenvalues, expected {k}", got.len()));
    }
    let (a, b) = p.to_dense();
    let oracle = match ordered_qz(&a, &b, sigma) {
        Ok(s) => s.eigenvalues(),
        Err(e) => return failure(format!("dense QZ oracle failed: {e}")),
    };
    let mut pool: Vec<C64> = oracle.iter().take(k).map(|e| e.ratio()).collect();
    let mut worst = (0.0_f64, 0usize);
    for (j, g) in got.iter().enumerate() {
        let (pos, err) = pool
            .iter()
            .enumerate()
            .map(|(i, w)| (i, relative_mismatch(*g, *w)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("pool has one entry per remaining column");
        pool.remove(pos);
        if err > worst.0 || j == 0 {
            worst = (err, j);
        }
    }
    let (max_err, col) = worst;
    if max_err <= 1e-7 {
        Verdict {
            status: VerifyStatus::Pass,
            max_relative_mismatch: Some(max_err),
            column: None,
            message: format!("all {k} eigenvalues match the dense oracle (max relative mismatch {max_err:.2e})"),
        }
    } else {
        Verdict {
            status: VerifyStatus::Mismatch,
            max_relative_mismatch: Some(max_err),
            column: Some(col),
            message: format!(
                "eigenvalue {col} ({}) differs from the dense oracle by {max_err:.2e} relative",
                got[col]
            ),
        }
    }
}

fn relative_mismatch(got: C64, want: C64) -> f64 {
    let (gi, wi) = (!got.is_finite(), !want.is_finite());
    if gi || wi {
        return if gi && wi { 0.0 } else { f64::INFINITY };
    }
    (got - want).norm() / want.norm().max(f64::MIN_POSITIVE)
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Parse { .. } | Error::UnsupportedFormat(_) => EXIT_INPUT,
        Error::InvalidInput(_) => EXIT_USAGE,
        _ => EXIT_SOLVER,
    }
}

/// Loads, solves and optionally verifies; the exit code reflects convergence and verification.
fn compute(args: &Args) -> Result<(RunReport, i32)> {
    let pencil = load_pencil(args)?;
    let mut report = solve(args, &pencil)?;
    let mut code = if report.all_converged() { EXIT_CONVERGED } else { EXIT_PARTIAL };
    if args.verify {
        let k = report.eigenvalues.len();
        let verdict = verify_against_oracle(&pencil, &report, args.shift, k);
        match verdict.status {
            VerifyStatus::Pass => log::info!("verify: {}", verdict.message),
            VerifyStatus::Mismatch => {
                log::error!("verify: {}", verdict.message);
                code = EXIT_SOLVER;
            }
            VerifyStatus::OracleFailure => {
                log::error!("verify (oracle failure): {}", verdict.message);
                code = EXIT_SOLVER;
            }
        }
        report.verification = Some(verdict);
    }
    Ok((report, code))
}

/// Runs the whole command: solve, optional verification, report output. Returns the exit code.
pub fn run(args: &Args, out: &mut dyn Write) -> (Option<RunReport>, i32) {
    let computed = match args.threads {
        None => compute(args),
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| compute(args)),
            Err(e) => Err(Error::InvalidInput(format!("cannot build a thread pool of {threads}: {e}"))),
        },
    };
    let (report, code) = match computed {
        Ok(x) => x,
        Err(e) => {
            log::error!("{e}");
            return (None, exit_code_for(&e));
        }
    };
    log::info!(
        "{} iterations, {} matvecs, {} preconditioner applications, converged {:?}",
        report.iterations,
        report.matvec_count,
        report.prec_count,
        report.converged
    );
    let written = match &args.report {
        Some(path) => write_report(&report, path),
        None => writeln!(out, "{}", report.to_json()).map_err(|source| Error::Io { path: "<stdout>".into(), source }),
    };
    if let Err(e) = written {
        log::error!("{e}");
        return (Some(report), EXIT_INPUT);
    }
    (Some(report), code)
}

/// Writes `path` as JSON and the residual history to `path` with extension `csv`.
pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let mut f = File::create(path).map_err(io)?;
    writeln!(f, "{}", report.to_json()).map_err(io)?;
    report.write_residual_csv(&path.with_extension("csv"))
}

/// Parses `argv`, runs, and returns the process exit code.
pub fn run_from<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_CONVERGED };
        }
    };
    run(&args, out).1
}

pub fn main_entry() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GPLHR_LOG", "warn")).init();
    run_from(std::env::args_os(), &mut std::io::stdout())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SparseMatrix;

    #[test]
    fn complex_literals() {
        let cases = [
            ("0.5+0i", C64::new(0.5, 0.0)),
            ("-0.1+0.5i", C64::new(-0.1, 0.5)),
            ("2i", C64::new(0.0, 2.0)),
            ("10", C64::new(10.0, 0.0)),
            ("1e-3-2.5e+1i", C64::new(1e-3, -25.0)),
            ("-i", C64::new(0.0, -1.0)),
            ("3-i", C64::new(3.0, -1.0)),
        ];
        for (s, want) in cases {
            assert_eq!(parse_complex(s).unwrap(), want, "{s}");
        }
        for s in ["", "abc", "1+2", "1+xi"] {
            assert!(parse_complex(s).is_err(), "{s}");
        }
    }

    fn diag_report(perturb: Option<(usize, f64)>) -> (Pencil, RunReport) {
        let d: Vec<C64> = (1..=10).map(|i| C64::new(i as f64, 0.0)).collect();
        let p = Pencil::standard(SparseMatrix::from_diagonal(&d)).unwrap();
        let mut report = RunReport {
            eigenvalues: [5.0, 6.0, 4.0]
                .iter()
                .map(|&r| ReportEigenvalue { re: r, im: 0.0, alpha: [r, 0.0], beta: [1.0, 0.0] })
                .collect(),
            iterations: 1,
            matvec_count: 0,
            prec_count: 0,
            residual_history: vec![],
            converged: vec![true; 3],
            locked_drift: 0.0,
            stagnated: false,
            wall_time: 0.0,
            config: ConfigEcho {
                matrix_a: String::new(),
                matrix_b: None,
                n: 10,
                shift: [5.2, 0.0],
                nev: 3,
                m: 1,
                tol: 1e-8,
                max_iter: 500,
                prec: "none".into(),
                mode: Mode::Schur,
                directions: "thick".into(),
                batches: 1,
                seed: 0,
                threads: None,
            },
            verification: None,
        };
        if let Some((j, d)) = perturb {
            report.eigenvalues[j].re += d;
        }
        (p, report)
    }

    #[test]
    fn verify_passes_on_consistent_report() {
        let (p, r) = diag_report(None);
        let v = verify_against_oracle(&p, &r, C64::new(5.2, 0.0), 3);
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn verify_names_the_perturbed_column() {
        let (p, r) = diag_report(Some((1, 1e-3)));
        let v = verify_against_oracle(&p, &r, C64::new(5.2, 0.0), 3);
        assert_eq!(v.status, VerifyStatus::Mismatch);
        assert_eq!(v.column, Some(1));
        assert!(v.message.contains("eigenvalue 1"));
    }

    #[test]
    fn verify_reports_oracle_limit_distinctly() {
        let (p, r) = diag_report(None);
        let v = verify_with_limit(&p, &r, C64::new(5.2, 0.0), 3, 5);
        assert_eq!(v.status, VerifyStatus::OracleFailure);
    }

    #[test]
    fn usage_errors_exit_64() {
        let mut out = Vec::new();
        assert_eq!(run_from(["gplhr", "--nev", "2"], &mut out), EXIT_USAGE);
        assert_eq!(
            run_from(["gplhr", "--matrix-a", "x.mtx", "--shift", "1", "--nev", "1", "--prec", "ilu"], &mut out),
            EXIT_USAGE
        );
    }

    #[test]
    fn missing_file_exits_66() {
        let mut out = Vec::new();
        let code = run_from(["gplhr", "--matrix-a", "/nonexistent/a.mtx", "--shift", "1", "--nev", "1"], &mut out);
        assert_eq!(code, EXIT_INPUT);
    }
}
