//! Picard iteration `f_n = Tf_{n−1} + k`: an exact recursive evaluator and
//! a Jacobi sweep on grid nodal values.

use std::cell::Cell;
use std::io::Write;
use std::path::Path;

use crate::collocation::node_stencils;
use crate::error::{Error, Result};
use crate::function::FunctionHandle;
use crate::grid::{fmt17, PiecewiseLinear, UniformGrid};
use crate::holder::clamp_unit;
use crate::par::Execution;
use crate::problem::ProblemSpec;

/// Largest recursion depth of [`picard_exact`].
pub const MAX_EXACT_DEPTH: usize = 25;

/// Handle calls made by one exact evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvaluationCount {
    /// Nodes that evaluate the coefficients and source.
    pub coefficient_nodes: u64,
    /// Leaves that evaluate `f₀`.
    pub initial_evals: u64,
}

impl EvaluationCount {
    pub fn total(&self) -> u64 {
        self.coefficient_nodes + self.initial_evals
    }
}

/// `f_depth(t)` by unrolling the equation `depth` times; costs `2^{depth+1} − 1`
/// handle calls.
pub fn picard_exact(p: &ProblemSpec, f0: &FunctionHandle, depth: usize, t: f64) -> Result<f64> {
    picard_exact_counted(p, f0, depth, t).map(|(v, _)| v)
}

pub fn picard_exact_counted(
    p: &ProblemSpec,
    f0: &FunctionHandle,
    depth: usize,
    t: f64,
) -> Result<(f64, EvaluationCount)> {
    if depth > MAX_EXACT_DEPTH {
        return Err(Error::CostGuard {
            depth,
            cap: MAX_EXACT_DEPTH,
        });
    }
    let t = clamp_unit(t, "t")?;
    let nodes = Cell::new(0u64);
    let leaves = Cell::new(0u64);
    let v = unroll(p, f0, depth, t, &nodes, &leaves)?;
    Ok((
        v,
        EvaluationCount {
            coefficient_nodes: nodes.get(),
            initial_evals: leaves.get(),
        },
    ))
}

fn unroll(
    p: &ProblemSpec,
    f0: &FunctionHandle,
    depth: usize,
    t: f64,
    nodes: &Cell<u64>,
    leaves: &Cell<u64>,
) -> Result<f64> {
    if depth == 0 {
        leaves.set(leaves.get() + 1);
        return f0.try_eval(t);
    }
    nodes.set(nodes.get() + 1);
    let w = p.phi().try_eval(t)?;
    let x1 = clamp_unit(p.phi1().try_eval(t)?, "φ1")?;
    let x2 = clamp_unit(p.phi2().try_eval(t)?, "φ2")?;
    let k = p.source.try_eval(t)?;
    let a = unroll(p, f0, depth - 1, x1, nodes, leaves)?;
    let b = unroll(p, f0, depth - 1, x2, nodes, leaves)?;
    Ok(w * a + (1.0 - w) * b + k)
}

/// Linear interpolant of the boundary data.
pub fn initial_iterate(p: &ProblemSpec, grid: UniformGrid) -> PiecewiseLinear {
    let (l, r) = (p.boundary_left, p.boundary_right);
    let mut values: Vec<f64> = grid.nodes().into_iter().map(|t| l + (r - l) * t).collect();
    let n = grid.n();
    values[0] = l;
    values[n] = r;
    PiecewiseLinear::new(grid, values).expect("finite boundary data")
}

#[derive(Clone, Debug)]
pub struct PicardTrace {
    /// `f₀, f₁, …`
    pub iterates: Vec<PiecewiseLinear>,
    /// `‖f_n − f_{n−1}‖_∞` over the nodes, `n ≥ 1`.
    pub increments: Vec<f64>,
    /// `increments[n] / increments[n−1]`.
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
}

impl PicardTrace {
    pub fn last(&self) -> &PiecewiseLinear {
        self.iterates.last().expect("trace holds f0")
    }

    /// Rows `iteration,increment,ratio`; the first row has an empty ratio.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "increment", "ratio"])?;
        for (i, inc) in self.increments.iter().enumerate() {
            let ratio = if i == 0 {
                String::new()
            } else {
                fmt17(self.contraction_ratios[i - 1])
            };
            out.write_record([(i + 1).to_string(), fmt17(*inc), ratio])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub fn picard_grid(
    p: &ProblemSpec,
    grid: UniformGrid,
    f0: &PiecewiseLinear,
    tol: f64,
    max_iter: usize,
) -> Result<PicardTrace> {
    picard_grid_with(p, grid, f0, tol, max_iter, Execution::default())
}

pub fn picard_grid_with(
    p: &ProblemSpec,
    grid: UniformGrid,
    f0: &PiecewiseLinear,
    tol: f64,
    max_iter: usize,
    exec: Execution,
) -> Result<PicardTrace> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::validation(format!("tolerance must be positive, got {tol}")));
    }
    if f0.grid() != grid {
        return Err(Error::validation("initial iterate lives on a different grid"));
    }
    let n = grid.n();
    let u0 = f0.values();
    if u0[0] != p.boundary_left || u0[n] != p.boundary_right {
        return Err(Error::validation(format!(
            "initial iterate has boundary values ({}, {}), expected ({}, {})",
            u0[0], u0[n], p.boundary_left, p.boundary_right
        )));
    }
    let stencils = node_stencils(p, grid, exec)?;

    let mut trace = PicardTrace {
        iterates: vec![f0.clone()],
        increments: Vec::new(),
        contraction_ratios: Vec::new(),
        converged: false,
    };
    let mut current = u0.to_vec();
    for _ in 0..max_iter {
        let interior = exec.map_range(stencils.len(), |i| stencils[i].apply(&current));
        let mut next = current.clone();
        next[1..n].copy_from_slice(&interior);
        let increment = next
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !increment.is_finite() {
            return Err(Error::Evaluation {
                label: "picard increment".into(),
                t: trace.increments.len() as f64,
                value: increment,
            });
        }
        if let Some(&prev) = trace.increments.last() {
            trace.contraction_ratios.push(if prev > 0.0 { increment / prev } else { 0.0 });
        }
        trace.increments.push(increment);
        trace.iterates.push(PiecewiseLinear::new(grid, next.clone())?);
        current = next;
        if increment < tol {
            trace.converged = true;
            break;
        }
    }
    if !trace.converged {
        log::warn!(
            "grid Picard did not reach tol {tol:e} within {max_iter} iterations (last increment {:e})",
            trace.increments.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::solve_collocation;
    use crate::oracles::{cusp_solution, manufacture, product_formula};
    use crate::problem::{certify_default, Coefficients};

    fn learning() -> ProblemSpec {
        ProblemSpec::paradise_fish(0.0, 0.2, 1.0)
    }

    #[test]
    fn exact_depths() {
        let p = learning();
        let id = FunctionHandle::identity();
        assert_eq!(picard_exact(&p, &id, 0, 0.3).unwrap(), 0.3);
        assert!((picard_exact(&p, &id, 1, 0.5).unwrap() - 0.55).abs() < 1e-15);
        let deep = picard_exact(&p, &id, 20, 0.5).unwrap();
        assert!((deep - 0.56120).abs() < 1e-4);
        assert!((deep - product_formula(0.2, 0.5, 1e-16)).abs() < 1e-9);
    }

    #[test]
    fn exact_cost_is_full_binary_tree() {
        let p = learning();
        for d in [0usize, 1, 2, 5, 10] {
            let (_, c) = picard_exact_counted(&p, &FunctionHandle::identity(), d, 0.7).unwrap();
            assert_eq!(c.initial_evals, 1 << d);
            assert_eq!(c.coefficient_nodes, (1u64 << d) - 1);
            assert_eq!(c.total(), (1u64 << (d + 1)) - 1);
        }
        assert!(matches!(
            picard_exact(&p, &FunctionHandle::identity(), 26, 0.5),
            Err(Error::CostGuard { depth: 26, cap: 25 })
        ));
    }

    #[test]
    fn grid_limit_is_collocation_solution() {
        let p = learning();
        let grid = UniformGrid::new(64).unwrap();
        let trace = picard_grid(&p, grid, &initial_iterate(&p, grid), 1e-12, 500).unwrap();
        assert!(trace.converged);
        let sol = solve_collocation(&p, 64).unwrap();
        let diff = trace
            .last()
            .values()
            .iter()
            .zip(sol.solution.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-10, "{diff}");
    }

    #[test]
    fn collocation_solution_is_a_fixed_point() {
        let p = ProblemSpec::paradise_fish(0.05, 0.2, 1.0);
        let sol = solve_collocation(&p, 100).unwrap();
        let trace = picard_grid(&p, sol.grid, &sol.solution, 1e-9, 10).unwrap();
        assert!(trace.increments[0] <= 1e-9);
        assert!(trace.converged);
        assert_eq!(trace.increments.len(), 1);
    }

    #[test]
    fn symmetric_family_ratios() {
        let coeffs = Coefficients::section5(0.02);
        let mp = manufacture(&cusp_solution(0.5), &coeffs, 0.5).unwrap();
        let cert = certify_default(&mp.problem).unwrap();
        let grid = UniformGrid::new(128).unwrap();
        let trace = picard_grid(&mp.problem, grid, &initial_iterate(&mp.problem, grid), 1e-12, 200).unwrap();
        assert!(trace.converged);
        for &r in &trace.contraction_ratios[1..] {
            assert!(r <= 0.45 && r <= cert.lipschitz_factor + 0.05, "{r}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = learning();
        let grid = UniformGrid::new(8).unwrap();
        let f0 = initial_iterate(&p, grid);
        assert!(picard_grid(&p, grid, &f0, 0.0, 10).is_err());
        assert!(picard_grid(&p, UniformGrid::new(4).unwrap(), &f0, 1e-9, 10).is_err());
        let zero = PiecewiseLinear::new(grid, vec![0.0; 9]).unwrap();
        assert!(picard_grid(&p, grid, &zero, 1e-9, 10).is_err());
    }

    #[test]
    fn non_convergence_returns_partial_trace() {
        let p = learning();
        let grid = UniformGrid::new(16).unwrap();
        let trace = picard_grid(&p, grid, &initial_iterate(&p, grid), 1e-15, 3).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.increments.len(), 3);
        assert_eq!(trace.iterates.len(), 4);
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,increment,ratio\n1,"));
        assert_eq!(text.lines().count(), 4);
    }
}
