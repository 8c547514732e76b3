//! Mesh-refinement studies: collocation over a ladder of grids, sampled
//! sup errors against a reference solution and a log-log order fit.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::collocation::{solve_collocation_with, SolveOptions};
use crate::error::{Error, Result};
use crate::function::{uniform_points, FunctionHandle};
use crate::grid::{fmt17, UniformGrid};
use crate::par::Execution;
use crate::problem::ProblemSpec;
use crate::svg::{self, Series};

pub const DEFAULT_ERROR_SAMPLES: usize = 4097;
pub const DEFAULT_FIT_MIN_N: usize = 16;

#[derive(Clone, Copy, Debug)]
pub struct StudyOptions {
    /// Uniform error samples; cell midpoints of each grid are added.
    pub m: usize,
    /// Rungs with `N` below this are reported but left out of the fit.
    pub fit_min_n: usize,
    /// Regularity index `k` of the exact solution; the expected order is `k + γ`.
    pub regularity_k: u8,
    pub exec: Execution,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            m: DEFAULT_ERROR_SAMPLES,
            fit_min_n: DEFAULT_FIT_MIN_N,
            regularity_k: 0,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderPoint {
    pub n: usize,
    pub h: f64,
    pub sup_error: f64,
    pub runtime: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the log-log residuals.
    pub residual: f64,
    /// Points that entered the fit.
    pub used: usize,
}

/// Least squares on `(log h, log e)`; nonpositive or non-finite points are
/// dropped.
pub fn fit_order(points: &[(f64, f64)]) -> Result<FitResult> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, e)| *h > 0.0 && *e > 0.0 && h.is_finite() && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    let n = logs.len();
    if n < 2 {
        return Err(Error::Fit(n));
    }
    let nf = n as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(FitResult {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
        used: n,
    })
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub problem_label: String,
    pub gamma: f64,
    /// Completed rungs, increasing `N`.
    pub ladder: Vec<LadderPoint>,
    pub fit: Option<FitResult>,
    /// `k + γ`
    pub theory_order: f64,
    pub fit_min_n: usize,
    /// First failing rung, if any.
    pub failure: Option<(usize, String)>,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    pub fn fitted_order(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn fit_residual(&self) -> Option<f64> {
        self.fit.map(|f| f.residual)
    }

    /// `n,h,sup_error` rows, plus `runtime_seconds` on request.
    pub fn write_csv<W: Write>(&self, w: W, include_runtime: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["n", "h", "sup_error"];
        if include_runtime {
            header.push("runtime_seconds");
        }
        out.write_record(&header)?;
        for p in &self.ladder {
            let mut row = vec![p.n.to_string(), fmt17(p.h), fmt17(p.sup_error)];
            if include_runtime {
                row.push(format!("{:.6}", p.runtime.as_secs_f64()));
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, include_runtime: bool) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?, include_runtime)
    }

    /// `key=value` pairs on one line.
    pub fn summary_line(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| format!("{x:.6}"));
        let mut s = format!(
            "fitted_order={} theory_order={:.6} fit_residual={} rungs={} fit_points={}",
            opt(self.fitted_order()),
            self.theory_order,
            opt(self.fit_residual()),
            self.ladder.len(),
            self.fit.map_or(0, |f| f.used),
        );
        if let Some((n, msg)) = &self.failure {
            let _ = write!(s, " failed_at_n={n} failure=\"{msg}\"");
        }
        s
    }

    /// Multi-line human summary including per-rung runtimes.
    pub fn summary(&self) -> String {
        let mut s = format!("problem: {}\ngamma: {}\n", self.problem_label, self.gamma);
        for p in &self.ladder {
            let _ = writeln!(
                s,
                "  N={:>5}  h={:.3e}  sup_error={:.6e}  time={:.3}s",
                p.n,
                p.h,
                p.sup_error,
                p.runtime.as_secs_f64()
            );
        }
        for note in &self.notes {
            let _ = writeln!(s, "note: {note}");
        }
        let _ = writeln!(s, "{}", self.summary_line());
        s
    }

    /// Log-log error plot with a reference line of slope `theory_order`.
    pub fn to_svg(&self) -> String {
        let measured: Vec<(f64, f64)> = self.ladder.iter().map(|p| (p.h, p.sup_error)).collect();
        let mut series = vec![Series::new("sup error", measured).with_markers()];
        if let (Some(first), Some(last)) = (self.ladder.first(), self.ladder.last()) {
            let anchor = last.sup_error.max(f64::MIN_POSITIVE);
            let line = |h: f64| anchor * (h / last.h).powf(self.theory_order);
            series.push(
                Series::new(
                    format!("reference slope {}", self.theory_order),
                    vec![(first.h, line(first.h)), (last.h, line(last.h))],
                )
                .dashed(),
            );
        }
        svg::loglog_plot(&format!("convergence: {}", self.problem_label), "h", "sup error", &series)
    }
}

/// Error sample points: `m` uniform points plus every cell midpoint of the grid.
pub fn error_sample_points(m: usize, grid: UniformGrid) -> Vec<f64> {
    let mut pts = uniform_points(m.max(2));
    pts.extend((0..grid.n()).map(|i| (grid.node(i) + grid.node(i + 1)) / 2.0));
    pts
}

fn run_rung(
    p: &ProblemSpec,
    exact: &FunctionHandle,
    n: usize,
    options: &StudyOptions,
) -> Result<LadderPoint> {
    let started = Instant::now();
    let sol = solve_collocation_with(
        p,
        n,
        SolveOptions {
            exec: options.exec,
            ..SolveOptions::default()
        },
    )?;
    let runtime = started.elapsed();
    let mut sup_error = 0.0_f64;
    for t in error_sample_points(options.m, sol.grid) {
        let e = (sol.solution.value_at(t) - exact.try_eval(t)?).abs();
        sup_error = sup_error.max(e);
    }
    Ok(LadderPoint {
        n,
        h: sol.grid.h(),
        sup_error,
        runtime,
    })
}

/// Runs collocation on every rung and fits the order on rungs with
/// `N ≥ fit_min_n`. A failing rung ends the ladder; the report keeps the
/// rungs before it.
pub fn run_study(
    p: &ProblemSpec,
    exact: &FunctionHandle,
    ladder: &[usize],
    options: StudyOptions,
) -> Result<ConvergenceReport> {
    let mut ladder = ladder.to_vec();
    ladder.sort_unstable();
    ladder.dedup();
    if ladder.len() < 4 {
        return Err(Error::validation(format!(
            "a study needs at least 4 distinct rungs, got {}",
            ladder.len()
        )));
    }
    if ladder[0] < 2 {
        return Err(Error::validation("every rung needs N ≥ 2"));
    }
    p.validate(crate::holder::DEFAULT_SAMPLES)?;

    let results = options
        .exec
        .map_range(ladder.len(), |i| run_rung(p, exact, ladder[i], &options));

    let mut points = Vec::new();
    let mut failure = None;
    for (n, r) in ladder.iter().zip(results) {
        match r {
            Ok(point) => points.push(point),
            Err(e) => {
                log::error!("study rung N = {n} failed: {e}");
                failure = Some((*n, e.to_string()));
                break;
            }
        }
    }

    let mut notes = Vec::new();
    let mut fit_input = Vec::new();
    for pt in &points {
        if pt.n < options.fit_min_n {
            continue;
        }
        if pt.sup_error > 0.0 {
            fit_input.push((pt.h, pt.sup_error));
        } else {
            notes.push(format!("N={} has zero error and is left out of the fit", pt.n));
        }
    }
    if fit_input.len() < 4 {
        notes.push(format!("only {} rungs enter the fit", fit_input.len()));
    }
    let fit = fit_order(&fit_input).ok();

    Ok(ConvergenceReport {
        problem_label: p.label.clone(),
        gamma: p.gamma,
        ladder: points,
        fit,
        theory_order: f64::from(options.regularity_k) + p.gamma,
        fit_min_n: options.fit_min_n,
        failure,
        notes,
    })
}

/// `N = 2^lo, …, 2^hi`.
pub fn power_of_two_ladder(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|e| 1usize << e).collect()
}

/// Powers of two between `nmin` and `nmax`, with both ends included.
pub fn ladder_between(nmin: usize, nmax: usize) -> Vec<usize> {
    let mut out = vec![nmin];
    let mut n = nmin;
    while n * 2 <= nmax {
        n *= 2;
        out.push(n);
    }
    if *out.last().unwrap() != nmax && nmax > nmin {
        out.push(nmax);
    }
    out
}
