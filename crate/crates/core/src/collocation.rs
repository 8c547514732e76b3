//! Piecewise-linear collocation.
//!
//! The ansatz is continuous and linear on each grid cell, so it is fixed by
//! its nodal values. Collocating `f_h(tᵢ) = Tf_h(tᵢ) + k(tᵢ)` at the interior
//! nodes gives an `(N−1)×(N−1)` linear system; the boundary values enter the
//! right-hand side only.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::grid::{PiecewiseLinear, UniformGrid};
use crate::holder::DEFAULT_SAMPLES;
use crate::linalg::{DenseMatrix, LuFactorization};
use crate::par::Execution;
use crate::problem::ProblemSpec;
use crate::CLAMP_TOLERANCE;

/// Interior residual allowed after the solve.
pub const RESIDUAL_LIMIT: f64 = 1e-9;

/// Largest `N` for which the condition number is estimated.
pub const CONDITION_MAX_N: usize = 512;

/// The two-point interpolation stencil `(left node, local coordinate)`.
pub type Stencil = (usize, f64);

/// Everything the collocation equation needs at one interior node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeStencil {
    pub node: usize,
    /// `φ(tᵢ)`
    pub weight: f64,
    /// Location of `φ₁(tᵢ)`.
    pub first: Stencil,
    /// Location of `φ₂(tᵢ)`.
    pub second: Stencil,
    /// `k(tᵢ)`
    pub source: f64,
}

impl NodeStencil {
    /// `(Tu)(tᵢ) + k(tᵢ)` for nodal values `u`.
    #[inline]
    pub fn apply(&self, u: &[f64]) -> f64 {
        let interp = |(j, s): Stencil| (1.0 - s) * u[j] + s * u[j + 1];
        self.weight * interp(self.first) + (1.0 - self.weight) * interp(self.second) + self.source
    }
}

fn locate_delay(grid: UniformGrid, x: f64, name: &str, node: usize) -> Result<Stencil> {
    if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&x) {
        return Err(Error::Domain {
            what: format!("{name} at node {node}"),
            value: x,
            lower: 0.0,
            upper: 1.0,
        });
    }
    grid.locate(x)
}

/// Stencils at the interior nodes `1..N`.
pub fn node_stencils(p: &ProblemSpec, grid: UniformGrid, exec: Execution) -> Result<Vec<NodeStencil>> {
    let interior = grid.n().saturating_sub(1);
    exec.try_map_range(interior, |k| {
        let node = k + 1;
        let t = grid.node(node);
        Ok(NodeStencil {
            node,
            weight: p.phi().try_eval(t)?,
            first: locate_delay(grid, p.phi1().try_eval(t)?, "φ1", node)?,
            second: locate_delay(grid, p.phi2().try_eval(t)?, "φ2", node)?,
            source: p.source.try_eval(t)?,
        })
    })
}

/// One sparse row of the interior system.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationRow {
    /// `(unknown index, coefficient)`, unknown `j` being node `j + 1`.
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
}

fn row_from_stencil(st: &NodeStencil, n: usize, left: f64, right: f64) -> CollocationRow {
    let mut entries: Vec<(usize, f64)> = vec![(st.node - 1, 1.0)];
    let mut rhs = st.source;
    for (coef, (j, s)) in [(st.weight, st.first), (1.0 - st.weight, st.second)] {
        for (node, w) in [(j, 1.0 - s), (j + 1, s)] {
            let c = coef * w;
            if c == 0.0 {
                continue;
            }
            if node == 0 {
                rhs += c * left;
            } else if node == n {
                rhs += c * right;
            } else if let Some(e) = entries.iter_mut().find(|e| e.0 == node - 1) {
                e.1 -= c;
            } else {
                entries.push((node - 1, -c));
            }
        }
    }
    entries.retain(|e| e.1 != 0.0);
    CollocationRow { entries, rhs }
}

pub fn assemble_rows(p: &ProblemSpec, grid: UniformGrid, exec: Execution) -> Result<Vec<CollocationRow>> {
    if grid.n() < 2 {
        return Err(Error::validation("collocation needs N ≥ 2"));
    }
    let stencils = node_stencils(p, grid, exec)?;
    let n = grid.n();
    Ok(exec.map_range(stencils.len(), |i| {
        row_from_stencil(&stencils[i], n, p.boundary_left, p.boundary_right)
    }))
}

/// Dense interior system `A·u = b` for the unknowns `u₁..u_{N−1}`.
pub fn assemble(p: &ProblemSpec, grid: UniformGrid) -> Result<(DenseMatrix, Vec<f64>)> {
    assemble_with(p, grid, Execution::default())
}

pub fn assemble_with(
    p: &ProblemSpec,
    grid: UniformGrid,
    exec: Execution,
) -> Result<(DenseMatrix, Vec<f64>)> {
    let rows = assemble_rows(p, grid, exec)?;
    let dim = rows.len();
    let mut a = DenseMatrix::zeros(dim, dim);
    let mut b = Vec::with_capacity(dim);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.entries {
            a[(i, j)] = v;
        }
        b.push(row.rhs);
    }
    Ok((a, b))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyStats {
    pub nonzeros: usize,
    pub assembly_time: Duration,
    pub solve_time: Duration,
}

#[derive(Clone, Debug)]
pub struct CollocationSolution {
    pub solution: PiecewiseLinear,
    pub grid: UniformGrid,
    /// `‖A‖_∞‖A⁻¹‖_∞`, estimated for `N ≤ 512`.
    pub condition: Option<f64>,
    pub stats: AssemblyStats,
    /// Largest interior collocation residual after the solve.
    pub max_residual: f64,
}

impl CollocationSolution {
    /// `key=value` block describing the solve.
    pub fn stats_block(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n={}", self.grid.n());
        let _ = writeln!(s, "unknowns={}", self.grid.n() - 1);
        let _ = writeln!(s, "nonzeros={}", self.stats.nonzeros);
        let _ = writeln!(s, "assembly_seconds={:.6}", self.stats.assembly_time.as_secs_f64());
        let _ = writeln!(s, "solve_seconds={:.6}", self.stats.solve_time.as_secs_f64());
        match self.condition {
            Some(c) => {
                let _ = writeln!(s, "condition={c:e}");
            }
            None => {
                let _ = writeln!(s, "condition=skipped");
            }
        }
        let _ = writeln!(s, "max_interior_residual={:e}", self.max_residual);
        s
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub exec: Execution,
    /// Samples for the coefficient validation.
    pub validation_samples: usize,
    pub condition_max_n: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            exec: Execution::default(),
            validation_samples: DEFAULT_SAMPLES,
            condition_max_n: CONDITION_MAX_N,
        }
    }
}

pub fn solve_collocation(p: &ProblemSpec, n: usize) -> Result<CollocationSolution> {
    solve_collocation_with(p, n, SolveOptions::default())
}

pub fn solve_collocation_with(p: &ProblemSpec, n: usize, opts: SolveOptions) -> Result<CollocationSolution> {
    p.validate(opts.validation_samples)?;
    let grid = UniformGrid::new(n)?;
    if n < 2 {
        return Err(Error::validation("collocation needs N ≥ 2"));
    }

    let started = Instant::now();
    let stencils = node_stencils(p, grid, opts.exec)?;
    let (a, b) = assemble_with(p, grid, opts.exec)?;
    let assembly_time = started.elapsed();

    let started = Instant::now();
    let lu = LuFactorization::new_with(&a, opts.exec).inspect_err(|e| {
        if let Error::Singular { .. } = e {
            log::error!("collocation matrix is singular for N = {n}; check the contraction certificate");
        }
    })?;
    let interior = lu.solve(&b)?;
    let solve_time = started.elapsed();

    let condition = (n <= opts.condition_max_n).then(|| a.norm_inf() * lu.inverse_norm_inf(opts.exec));
    if let Some(c) = condition {
        log::info!("N = {n}: condition estimate {c:e}");
    }

    let mut values = Vec::with_capacity(n + 1);
    values.push(p.boundary_left);
    values.extend(interior);
    values.push(p.boundary_right);

    let mut max_residual = 0.0_f64;
    for st in &stencils {
        let r = (values[st.node] - st.apply(&values)).abs();
        if r.is_nan() || r > RESIDUAL_LIMIT {
            return Err(Error::Residual {
                node: st.node,
                residual: r,
                limit: RESIDUAL_LIMIT,
            });
        }
        max_residual = max_residual.max(r);
    }

    Ok(CollocationSolution {
        solution: PiecewiseLinear::new(grid, values)?,
        grid,
        condition,
        stats: AssemblyStats {
            nonzeros: a.nonzeros(),
            assembly_time,
            solve_time,
        },
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::FunctionHandle;
    use crate::oracles::{cusp_solution, manufacture};
    use crate::problem::Coefficients;

    fn fish(alpha: f64, beta: f64) -> ProblemSpec {
        ProblemSpec::paradise_fish(alpha, beta, 1.0)
    }

    #[test]
    fn two_cell_system_by_hand() {
        let p = fish(0.0, 0.2);
        let (a, b) = assemble(&p, UniformGrid::new(2).unwrap()).unwrap();
        assert_eq!((a.rows(), a.cols()), (1, 1));
        assert!((a[(0, 0)] - 0.9).abs() < 1e-15);
        assert!((b[0] - 0.5).abs() < 1e-15);
        let sol = solve_collocation(&p, 2).unwrap();
        assert!((sol.solution.values()[1] - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn zero_problem_has_zero_solution() {
        let p = ProblemSpec::nonhomogeneous(Coefficients::paradise_fish(0.1, 0.2), FunctionHandle::zero(), 1.0);
        for n in [2, 5, 16] {
            let (_, b) = assemble(&p, UniformGrid::new(n).unwrap()).unwrap();
            assert!(b.iter().all(|&x| x == 0.0));
            let sol = solve_collocation(&p, n).unwrap();
            assert!(sol.solution.values().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn rows_have_at_most_five_nonzeros() {
        let coeffs = Coefficients::section5(0.02);
        let mp = manufacture(&cusp_solution(0.5), &coeffs, 0.5).unwrap();
        for n in [4, 9, 64] {
            let rows = assemble_rows(&mp.problem, UniformGrid::new(n).unwrap(), Execution::Sequential).unwrap();
            assert!(rows.iter().all(|r| r.entries.len() <= 5));
            let (a, _) = assemble(&mp.problem, UniformGrid::new(n).unwrap()).unwrap();
            for i in 0..a.rows() {
                assert!(a.row(i).iter().filter(|&&x| x != 0.0).count() <= 5);
            }
        }
    }

    #[test]
    fn boundary_values_are_exact() {
        let sol = solve_collocation(&fish(0.05, 0.2), 37).unwrap();
        assert_eq!(sol.solution.evaluate(0.0).unwrap(), 0.0);
        assert_eq!(sol.solution.evaluate(1.0).unwrap(), 1.0);
        assert!(sol.max_residual <= RESIDUAL_LIMIT);
        assert!(sol.condition.is_some());
        assert!(sol.stats_block().contains("nonzeros="));
    }

    #[test]
    fn conditioning_of_learning_model_system() {
        let p = fish(0.0, 0.2);
        let (a, _) = assemble(&p, UniformGrid::new(64).unwrap()).unwrap();
        let c = crate::linalg::condition_estimate(&a).unwrap();
        assert!(c.is_finite() && c < 1e3, "condition {c}");
    }

    /// Rebuilds the slope/intercept unknowns `f_h = aᵢt + bᵢ` on each cell and
    /// checks all 2N conditions: boundary, continuity, collocation.
    #[test]
    fn nodal_form_satisfies_slope_intercept_system() {
        for (p, n) in [(fish(0.05, 0.2), 2), (fish(0.05, 0.2), 4), (fish(0.0, 0.3), 4)] {
            let sol = solve_collocation(&p, n).unwrap();
            let g = sol.grid;
            let u = sol.solution.values();
            let ab: Vec<(f64, f64)> = (0..n)
                .map(|i| {
                    let a = (u[i + 1] - u[i]) / g.h();
                    (a, u[i] - a * g.node(i))
                })
                .collect();
            let piece = |x: f64| {
                let i = ((x * n as f64).floor() as usize).min(n - 1);
                ab[i].0 * x + ab[i].1
            };
            let mut equations = 0;
            assert!((ab[0].1).abs() < 1e-14);
            assert!((ab[n - 1].0 + ab[n - 1].1 - 1.0).abs() < 1e-14);
            equations += 2;
            for i in 1..n {
                let t = g.node(i);
                let left = ab[i - 1].0 * t + ab[i - 1].1;
                let right = ab[i].0 * t + ab[i].1;
                assert!((left - right).abs() < 1e-14);
                let tf = t * piece(p.phi1().eval(t)) + (1.0 - t) * piece(p.phi2().eval(t));
                assert!((right - tf).abs() < 1e-13);
                equations += 2;
            }
            assert_eq!(equations, 2 * n);
        }
    }

    #[test]
    fn out_of_range_delay_names_the_node() {
        let coeffs = Coefficients::new(
            FunctionHandle::identity(),
            FunctionHandle::new("bad", |t| if t > 0.4 && t < 0.6 { 1.5 } else { 1.0 }),
            FunctionHandle::affine(0.2, 0.0),
        );
        let p = ProblemSpec::original(coeffs, 1.0);
        match node_stencils(&p, UniformGrid::new(2).unwrap(), Execution::Sequential) {
            Err(Error::Domain { what, .. }) => assert!(what.contains("node 1")),
            other => panic!("{other:?}"),
        }
    }
}
