//! The `vdelay` command line.
//!
//! Exit codes: 0 on success, 1 for invalid input, 2 for numerical failure
//! (singular system, non-finite values, Picard non-convergence, failed study
//! rung).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::collocation::{solve_collocation_with, SolveOptions};
use crate::error::{Error, Result};
use crate::function::FunctionHandle;
use crate::grid::{interp_sup_error, measure_projector_norm, sup_error_bound, PiecewiseLinear, UniformGrid};
use crate::holder::DEFAULT_SAMPLES;
use crate::oracles::{cusp_solution, manufacture, Oracle};
use crate::par::Execution;
use crate::picard::{initial_iterate, picard_exact_counted, picard_grid_with};
use crate::problem::{
    certify, check_corollary_conditions, section5_alpha_bound, Coefficients, ProblemSpec,
};
use crate::study::{error_sample_points, ladder_between, run_study, StudyOptions};
use crate::svg::{self, Series};
use crate::trials::TrialGenerator;

#[derive(Parser, Debug)]
#[command(name = "vdelay", version, about = "Solvers for functional equations with vanishing delays")]
pub struct Cli {
    /// key=value file whose entries override command-line flags
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Run every data-parallel loop sequentially
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve by collocation on one grid
    Solve(SolveArgs),
    /// Print the contraction certificate of the operator
    Certify(CertifyArgs),
    /// Picard iteration, on a grid or by exact recursion
    Picard(PicardArgs),
    /// Mesh-refinement study with a fitted convergence order
    Study(StudyArgs),
    /// Check the interpolation error and projector norm bounds
    InterpCheck(InterpArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    /// φ = t, φ₁ = αt + 1 − α, φ₂ = βt
    Paradise,
    /// φ = t, φ₁ = 1 − (α/2)(1 − t), φ₂ = (α/2)t
    Section5,
    /// the section5 family with a manufactured cusp solution
    Cusp,
    /// coefficients tabulated in CSV files
    Custom,
}

#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "paradise")]
    pub problem: ProblemKind,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Reference solution: cusp(γ), product(β), smooth_parabola, cusp or product
    #[arg(long)]
    pub oracle: Option<String>,
    /// Tabulated φ for --problem custom
    #[arg(long, value_name = "CSV")]
    pub phi: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub phi1: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub phi2: Option<PathBuf>,
    /// Tabulated source k; without it the problem is in original form
    #[arg(long, value_name = "CSV")]
    pub source: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Solution CSV
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Solution graph SVG
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Use the analytic coefficient norms of the family
    #[arg(long)]
    pub exact_norms: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct PicardArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Evaluate the exact iterate of this depth instead of iterating on a grid
    #[arg(long)]
    pub depth: Option<usize>,
    /// Evaluation point of the exact iterate
    #[arg(long, default_value_t = 0.5)]
    pub at: f64,
    /// Trace CSV (iteration, increment, ratio)
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct StudyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 16)]
    pub nmin: usize,
    #[arg(long, default_value_t = 4096)]
    pub nmax: usize,
    /// Uniform error samples per rung (cell midpoints are added)
    #[arg(long, default_value_t = crate::study::DEFAULT_ERROR_SAMPLES)]
    pub samples: usize,
    /// Smallest N entering the order fit
    #[arg(long, default_value_t = crate::study::DEFAULT_FIT_MIN_N)]
    pub fit_min_n: usize,
    /// Regularity index k of the exact solution (expected order k + γ)
    #[arg(long)]
    pub regularity: Option<u8>,
    /// Report CSV
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Log-log SVG
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Add a runtime column to the CSV (breaks byte-identical reruns)
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct InterpArgs {
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 8)]
    pub nmin: usize,
    #[arg(long, default_value_t = 512)]
    pub nmax: usize,
    /// Trial functions, split evenly between k = 0 and k = 1
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Samples of the projector-norm scan (default min(32N+1, 1025))
    #[arg(long)]
    pub samples: Option<usize>,
    /// Per-trial CSV
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// A problem together with what is known about its solution.
#[derive(Clone, Debug)]
pub struct Setup {
    pub problem: ProblemSpec,
    pub exact: Option<FunctionHandle>,
    /// Regularity index of `exact`, when known.
    pub regularity: Option<u8>,
}

fn in_range(name: &str, v: f64, lo: f64, hi: f64, open_lo: bool) -> Result<f64> {
    let ok = v.is_finite() && v <= hi && if open_lo { v > lo } else { v >= lo };
    if ok {
        Ok(v)
    } else {
        let bracket = if open_lo { "(" } else { "[" };
        Err(Error::validation(format!("--{name} must lie in {bracket}{lo}, {hi}], got {v}")))
    }
}

fn load_table(path: &Option<PathBuf>, flag: &str) -> Result<FunctionHandle> {
    let path = path
        .as_ref()
        .ok_or_else(|| Error::validation(format!("--problem custom needs --{flag}")))?;
    let table = PiecewiseLinear::load_csv(path)?;
    Ok(table.to_handle(path.display().to_string()))
}

/// Resolves the problem flags into a [`Setup`].
pub fn build_setup(args: &ProblemArgs) -> Result<Setup> {
    let gamma_default = match args.problem {
        ProblemKind::Section5 | ProblemKind::Cusp => 0.5,
        _ => 1.0,
    };
    let gamma = in_range("gamma", args.gamma.unwrap_or(gamma_default), 0.0, 1.0, true)?;
    let alpha_default = match args.problem {
        ProblemKind::Paradise => 0.05,
        _ => 0.02,
    };
    let alpha = in_range("alpha", args.alpha.unwrap_or(alpha_default), 0.0, 1.0, false)?;
    let beta = in_range("beta", args.beta.unwrap_or(0.2), 0.0, 1.0, true)?;

    let coefficients = match args.problem {
        ProblemKind::Paradise => Coefficients::paradise_fish(alpha, beta),
        ProblemKind::Section5 | ProblemKind::Cusp => {
            let bound = section5_alpha_bound(gamma);
            if alpha >= bound {
                log::warn!("α = {alpha} is outside the collocation-admissible range α < {bound:.6} for γ = {gamma}");
            }
            Coefficients::section5(alpha)
        }
        ProblemKind::Custom => Coefficients::new(
            load_table(&args.phi, "phi")?,
            load_table(&args.phi1, "phi1")?,
            load_table(&args.phi2, "phi2")?,
        ),
    };

    let oracle = match args.oracle.as_deref().map(str::trim) {
        None => None,
        Some("cusp") => Some(Oracle::Cusp(gamma)),
        Some("product") => Some(Oracle::Product(beta)),
        Some(name) => Some(Oracle::parse(name)?),
    };
    let oracle = match (args.problem, oracle) {
        (ProblemKind::Cusp, None) => Some(Oracle::Cusp(gamma)),
        (ProblemKind::Cusp, Some(o)) if !matches!(o, Oracle::Cusp(_)) => {
            return Err(Error::validation("--problem cusp fixes the oracle to cusp(γ)"));
        }
        (_, o) => o,
    };

    let source = match (&args.source, args.problem) {
        (Some(_), ProblemKind::Custom) => Some(load_table(&args.source, "source")?),
        (Some(_), _) => return Err(Error::validation("--source only applies to --problem custom")),
        (None, _) => None,
    };

    match oracle {
        None => {
            let problem = match source {
                Some(k) => ProblemSpec::nonhomogeneous(coefficients, k, gamma),
                None => ProblemSpec::original(coefficients, gamma),
            };
            Ok(Setup {
                problem,
                exact: None,
                regularity: None,
            })
        }
        Some(Oracle::Product(b)) => {
            if args.problem != ProblemKind::Paradise || alpha != 0.0 || b != beta {
                return Err(Error::validation(format!(
                    "the product oracle solves --problem paradise with --alpha 0 and --beta {b}"
                )));
            }
            Ok(Setup {
                problem: ProblemSpec::original(coefficients, gamma),
                exact: Some(Oracle::Product(b).handle()),
                regularity: Some(1),
            })
        }
        Some(o) => {
            if source.is_some() {
                return Err(Error::validation("--oracle and --source are mutually exclusive"));
            }
            let target = match o {
                Oracle::Cusp(g) => cusp_solution(g),
                other => other.handle(),
            };
            let mp = manufacture(&target, &coefficients, gamma)?;
            Ok(Setup {
                problem: mp.problem,
                exact: Some(mp.exact),
                regularity: Some(match o {
                    Oracle::Cusp(_) => 0,
                    _ => 1,
                }),
            })
        }
    }
}

/// Reads `key=value` lines into `--key value` arguments. `true` turns into a
/// bare flag and `false` drops the key.
pub fn config_arguments(path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}: expected key=value", lineno + 1),
        })?;
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        let value = value.trim();
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

fn find_config(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Runs the CLI with `args` (program name first), writing to the process
/// streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let mut argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Some(path) = find_config(&argv) {
        match config_arguments(&path) {
            Ok(extra) => argv.extend(extra),
            Err(e) => {
                let _ = writeln!(err, "error: {}: {e}", path.display());
                return 1;
            }
        }
    }
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, exec, out),
        Command::Certify(a) => cmd_certify(a, out, err),
        Command::Picard(a) => cmd_picard(a, exec, out),
        Command::Study(a) => cmd_study(a, exec, out),
        Command::InterpCheck(a) => cmd_interp(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let Error::Singular { .. } = e {
                let _ = writeln!(err, "hint: run `vdelay certify` with the same problem flags");
            }
            exit_code(&e)
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e)
}

fn cmd_solve(a: &SolveArgs, exec: Execution, out: &mut dyn Write) -> Result<i32> {
    let setup = build_setup(&a.problem)?;
    let sol = solve_collocation_with(
        &setup.problem,
        a.n,
        SolveOptions {
            exec,
            ..SolveOptions::default()
        },
    )?;
    writeln!(out, "problem={}", setup.problem.label).map_err(io)?;
    write!(out, "{}", sol.stats_block()).map_err(io)?;
    writeln!(out, "value_at_half={:.16e}", sol.solution.value_at(0.5)).map_err(io)?;
    if let Some(exact) = &setup.exact {
        let mut dev = 0.0_f64;
        for t in error_sample_points(crate::study::DEFAULT_ERROR_SAMPLES, sol.grid) {
            dev = dev.max((sol.solution.value_at(t) - exact.try_eval(t)?).abs());
        }
        writeln!(out, "reference={}", exact.label()).map_err(io)?;
        writeln!(out, "sup_deviation={dev:e}").map_err(io)?;
    }
    if let Some(path) = &a.output {
        sol.solution.save_csv(path)?;
    }
    if let Some(path) = &a.plot {
        let nodes: Vec<(f64, f64)> = sol
            .grid
            .nodes()
            .into_iter()
            .zip(sol.solution.values().iter().copied())
            .collect();
        let mut series = vec![Series::new(format!("collocation N={}", a.n), nodes)];
        if let Some(exact) = &setup.exact {
            let pts = crate::function::uniform_points(1025)
                .into_iter()
                .map(|t| (t, exact.eval(t)))
                .collect();
            series.push(Series::new(exact.label(), pts).dashed());
        }
        std::fs::write(path, svg::line_plot(&setup.problem.label, "t", "f(t)", &series))?;
    }
    Ok(0)
}

fn cmd_certify(a: &CertifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let setup = build_setup(&a.problem)?;
    let p = &setup.problem;
    let overrides = if a.exact_norms {
        Some(
            p.coefficients
                .exact_norms_for(p.gamma)
                .ok_or_else(|| Error::validation("this coefficient family has no analytic norms"))?,
        )
    } else {
        None
    };
    let cert = certify(p, a.samples, overrides)?;
    writeln!(out, "problem={}", p.label).map_err(io)?;
    write!(out, "{}", cert.summary()).map_err(io)?;
    if a.problem.problem == ProblemKind::Paradise {
        let alpha = a.problem.alpha.unwrap_or(0.05);
        let beta = a.problem.beta.unwrap_or(0.2);
        if alpha > 0.0 && alpha <= beta {
            let c = check_corollary_conditions(alpha, beta, p.gamma)?;
            writeln!(out, "alpha_gamma_plus_beta_gamma={:.6}", alpha.powf(p.gamma) + beta.powf(p.gamma))
                .map_err(io)?;
            writeln!(out, "condition_a={}", c.condition_a).map_err(io)?;
            writeln!(out, "condition_b={}", c.condition_b).map_err(io)?;
        }
    }
    if cert.sampled {
        writeln!(
            err,
            "note: norms were estimated on {} samples and are lower bounds; the certificate is a heuristic",
            a.samples
        )
        .map_err(io)?;
    }
    Ok(0)
}

fn cmd_picard(a: &PicardArgs, exec: Execution, out: &mut dyn Write) -> Result<i32> {
    let setup = build_setup(&a.problem)?;
    let p = &setup.problem;
    p.validate(DEFAULT_SAMPLES)?;
    if let Some(depth) = a.depth {
        let (l, r) = (p.boundary_left, p.boundary_right);
        let f0 = FunctionHandle::new("boundary interpolant", move |t| l + (r - l) * t);
        let (value, count) = picard_exact_counted(p, &f0, depth, a.at)?;
        writeln!(out, "depth={depth}").map_err(io)?;
        writeln!(out, "t={}", a.at).map_err(io)?;
        writeln!(out, "value={value:.16e}").map_err(io)?;
        writeln!(out, "evaluations={}", count.total()).map_err(io)?;
        if let Some(exact) = &setup.exact {
            writeln!(out, "reference_deviation={:e}", (value - exact.try_eval(a.at)?).abs()).map_err(io)?;
        }
        return Ok(0);
    }
    let grid = UniformGrid::new(a.n)?;
    let trace = picard_grid_with(p, grid, &initial_iterate(p, grid), a.tol, a.max_iter, exec)?;
    writeln!(out, "iterations={}", trace.increments.len()).map_err(io)?;
    writeln!(out, "converged={}", trace.converged).map_err(io)?;
    writeln!(
        out,
        "last_increment={:e}",
        trace.increments.last().copied().unwrap_or(0.0)
    )
    .map_err(io)?;
    let worst = trace.contraction_ratios.iter().skip(1).copied().fold(0.0, f64::max);
    writeln!(out, "max_ratio_from_second={worst:.6}").map_err(io)?;
    if let Some(path) = &a.output {
        trace.save_csv(path)?;
    }
    if trace.converged {
        Ok(0)
    } else {
        writeln!(out, "warning=no convergence within {} iterations", a.max_iter).map_err(io)?;
        Ok(2)
    }
}

fn cmd_study(a: &StudyArgs, exec: Execution, out: &mut dyn Write) -> Result<i32> {
    let setup = build_setup(&a.problem)?;
    let exact = setup
        .exact
        .as_ref()
        .ok_or_else(|| Error::validation("a study needs a reference solution: pass --oracle or --problem cusp"))?;
    if a.nmin < 2 || a.nmax < a.nmin {
        return Err(Error::validation(format!(
            "need 2 ≤ --nmin ≤ --nmax, got {} and {}",
            a.nmin, a.nmax
        )));
    }
    let ladder = ladder_between(a.nmin, a.nmax);
    let options = StudyOptions {
        m: a.samples,
        fit_min_n: a.fit_min_n,
        regularity_k: a.regularity.or(setup.regularity).unwrap_or(0),
        exec,
    };
    let report = run_study(&setup.problem, exact, &ladder, options)?;
    write!(out, "{}", report.summary()).map_err(io)?;
    if let Some(path) = &a.output {
        report.save_csv(path, a.timings)?;
    }
    if let Some(path) = &a.plot {
        std::fs::write(path, report.to_svg())?;
    }
    Ok(if report.failure.is_some() { 2 } else { 0 })
}

fn cmd_interp(a: &InterpArgs, out: &mut dyn Write) -> Result<i32> {
    let gamma = in_range("gamma", a.gamma, 0.0, 1.0, true)?;
    if a.nmin < 1 || a.nmax < a.nmin {
        return Err(Error::validation("need 1 ≤ --nmin ≤ --nmax"));
    }
    let mut gen = TrialGenerator::new(a.seed);
    let half = a.trials.div_ceil(2);
    let mut trials = gen.functions(half, gamma, 0);
    trials.extend(gen.functions(a.trials - half, gamma, 1));

    let mut rows = Vec::new();
    let mut violations = 0;
    let mut worst_ratio = 0.0_f64;
    for n in ladder_between(a.nmin, a.nmax) {
        let grid = UniformGrid::new(n)?;
        for (i, tr) in trials.iter().enumerate() {
            let e = interp_sup_error(&tr.handle, grid, None)?;
            let bound = sup_error_bound(tr.norm_bound, gamma, tr.k, grid.h());
            let ok = e <= bound * (1.0 + 1e-12);
            if !ok {
                violations += 1;
            }
            rows.push((n, i, tr.k, e, bound, ok));
        }
        let handles: Vec<FunctionHandle> = trials.iter().map(|t| t.handle.clone()).collect();
        let m = a.samples.unwrap_or((32 * n + 1).min(1025));
        worst_ratio = worst_ratio.max(measure_projector_norm(gamma, grid, &handles, Some(m))?.ratio);
    }
    let ratio_bound = 1.0 + 2f64.powf(1.0 - gamma);
    if let Some(path) = &a.output {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["n", "trial", "k", "sup_error", "bound", "passed"])?;
        for (n, i, k, e, b, ok) in &rows {
            w.write_record([
                n.to_string(),
                i.to_string(),
                k.to_string(),
                crate::grid::fmt17(*e),
                crate::grid::fmt17(*b),
                ok.to_string(),
            ])?;
        }
        w.flush()?;
    }
    writeln!(out, "gamma={gamma}").map_err(io)?;
    writeln!(out, "checks={}", rows.len()).map_err(io)?;
    writeln!(out, "sup_bound_violations={violations}").map_err(io)?;
    writeln!(out, "projector_ratio_max={worst_ratio:.9}").map_err(io)?;
    writeln!(out, "projector_ratio_bound={ratio_bound:.9}").map_err(io)?;
    Ok(0)
}
