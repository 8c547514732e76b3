//! Uniform grids and the piecewise-linear interpolation projector `P_h`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::function::{uniform_points, FunctionHandle};
use crate::holder::{self, sample};
use crate::par::Execution;
use crate::CLAMP_TOLERANCE;

/// Cap on the sample count of the O(m²) Hölder scan in [`measure_interp_error`].
pub const MAX_HOLDER_SAMPLES: usize = 4097;

/// `N` equal subintervals of [0, 1], nodes `tᵢ = i/N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UniformGrid {
    n: usize,
}

impl UniformGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("a grid needs at least one subinterval"));
        }
        Ok(Self { n })
    }

    /// Number of subintervals.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }

    /// Left node index `j` and local coordinate `s ∈ [0, 1]` of `t`, so that
    /// `t` lies in `[t_j, t_{j+1}]`. Nodes resolve to the interval on their
    /// right (`s = 0`), except `t = 1`, which belongs to the last interval.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&t) {
            return Err(Error::Domain {
                what: "evaluation point".into(),
                value: t,
                lower: 0.0,
                upper: 1.0,
            });
        }
        Ok(self.locate_clamped(t.clamp(0.0, 1.0)))
    }

    #[inline]
    pub(crate) fn locate_clamped(&self, t: f64) -> (usize, f64) {
        let last = self.n - 1;
        let mut j = ((t * self.n as f64).floor() as usize).min(last);
        // t·N can round across a node; settle on t_j ≤ t < t_{j+1}
        if j > 0 && self.node(j) > t {
            j -= 1;
        } else if j < last && self.node(j + 1) <= t {
            j += 1;
        }
        let (left, right) = (self.node(j), self.node(j + 1));
        (j, (t - left) / (right - left))
    }
}

/// Continuous piecewise-linear function given by its nodal values.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() + 1 {
            return Err(Error::validation(format!(
                "expected {} nodal values, got {}",
                grid.n() + 1,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("nodal value {i} is not finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> UniformGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        let (j, s) = self.grid.locate(t)?;
        Ok(self.blend(j, s))
    }

    /// Evaluation for `t` already known to be in [0, 1] (clamped otherwise).
    #[inline]
    pub fn value_at(&self, t: f64) -> f64 {
        let (j, s) = self.grid.locate_clamped(t.clamp(0.0, 1.0));
        self.blend(j, s)
    }

    #[inline]
    fn blend(&self, j: usize, s: f64) -> f64 {
        (1.0 - s) * self.values[j] + s * self.values[j + 1]
    }

    pub fn to_handle(&self, label: impl Into<String>) -> FunctionHandle {
        let this = self.clone();
        FunctionHandle::new(label, move |t| this.value_at(t))
    }

    /// Writes `t,value` rows with a header, 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            out.write_record([fmt17(self.grid.node(i)), fmt17(*v)])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads the [`write_csv`](Self::write_csv) format, checking that the `t`
    /// column is the uniform grid `i/N`.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(r);
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let field = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .ok_or_else(|| Error::validation(format!("row {row}: missing column {k}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::validation(format!("row {row}: {e}")))
            };
            ts.push(field(0)?);
            values.push(field(1)?);
        }
        if ts.len() < 2 {
            return Err(Error::validation("a tabulated function needs at least two rows"));
        }
        let grid = UniformGrid::new(ts.len() - 1)?;
        for (i, &t) in ts.iter().enumerate() {
            if (t - grid.node(i)).abs() > CLAMP_TOLERANCE {
                return Err(Error::validation(format!(
                    "row {i}: t = {t} is not the uniform node {}",
                    grid.node(i)
                )));
            }
        }
        Self::new(grid, values)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file).map_err(|e| match e {
            Error::Io(_) => e,
            other => Error::Parse {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
    }
}

/// 17 significant digits, the CSV number format.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `P_h f`: the interpolant of `f` at the grid nodes.
pub fn project(f: &FunctionHandle, grid: UniformGrid) -> Result<PiecewiseLinear> {
    let values = (0..=grid.n())
        .map(|i| {
            f.try_eval(grid.node(i)).map_err(|e| match e {
                Error::Evaluation { label, t, value } => Error::Evaluation {
                    label: format!("{label} (node {i})"),
                    t,
                    value,
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewiseLinear::new(grid, values)
}

/// Interpolation error bound `2^{−γ−(2−γ)k} h^{k+γ} ‖u‖_{k,γ}` for `k ∈ {0, 1}`.
pub fn sup_error_bound(norm_k_gamma: f64, gamma: f64, k: u8, h: f64) -> f64 {
    assert!(k <= 1, "only k = 0 and k = 1 are covered");
    let k = f64::from(k);
    2f64.powf(-gamma - (2.0 - gamma) * k) * h.powf(k + gamma) * norm_k_gamma
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpError {
    /// Sampled `‖P_h f − f‖_∞`.
    pub sup_error: f64,
    /// Sampled `‖P_h f − f‖_γ` (its boundary term vanishes).
    pub hoelder_error: f64,
    pub sup_samples: usize,
    pub hoelder_samples: usize,
}

/// Default sample count `32N + 1`.
pub fn default_error_samples(grid: UniformGrid) -> usize {
    32 * grid.n() + 1
}

/// Sampled `‖P_h f − f‖_∞` on `m` uniform points (default `32N+1`).
pub fn interp_sup_error(f: &FunctionHandle, grid: UniformGrid, m: Option<usize>) -> Result<f64> {
    let m = m.unwrap_or_else(|| default_error_samples(grid)).max(2);
    let interp = project(f, grid)?;
    let mut worst = 0.0_f64;
    for t in uniform_points(m) {
        worst = worst.max((interp.value_at(t) - f.try_eval(t)?).abs());
    }
    Ok(worst)
}

/// Measures the interpolation error on `m` uniform samples (default `32N+1`);
/// the Hölder part uses at most [`MAX_HOLDER_SAMPLES`] of them.
pub fn measure_interp_error(
    f: &FunctionHandle,
    grid: UniformGrid,
    m: Option<usize>,
    gamma: f64,
) -> Result<InterpError> {
    let m = m.unwrap_or_else(|| default_error_samples(grid)).max(2);
    let interp = project(f, grid)?;
    let error_at = |points: &[f64]| -> Result<Vec<f64>> {
        let exact = sample(f, points)?;
        Ok(points
            .iter()
            .zip(exact)
            .map(|(&t, v)| interp.value_at(t) - v)
            .collect())
    };
    let points = uniform_points(m);
    let sup_error = error_at(&points)?.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    let hm = m.min(MAX_HOLDER_SAMPLES);
    let hpoints = uniform_points(hm);
    let herr = error_at(&hpoints)?;
    let hoelder_error = holder::estimate_from_samples(&hpoints, &herr, gamma, Execution::default()).norm;
    Ok(InterpError {
        sup_error,
        hoelder_error,
        sup_samples: m,
        hoelder_samples: hm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectorNormEstimate {
    /// Largest observed `‖P_h f‖_γ / ‖f‖_γ`.
    pub ratio: f64,
    pub trials_used: usize,
    pub trials_skipped: usize,
}

/// Lower bound on the operator norm of `P_h` on `H^γ` from a set of trial
/// functions; trials with zero sampled norm are skipped.
pub fn measure_projector_norm(
    gamma: f64,
    grid: UniformGrid,
    trials: &[FunctionHandle],
    m: Option<usize>,
) -> Result<ProjectorNormEstimate> {
    if trials.is_empty() {
        return Err(Error::validation("projector norm needs at least one trial function"));
    }
    let m = m.unwrap_or_else(|| default_error_samples(grid)).clamp(2, MAX_HOLDER_SAMPLES);
    let points = uniform_points(m);
    let exec = Execution::default();
    let mut ratio = 0.0_f64;
    let mut used = 0;
    for f in trials {
        let fv = sample(f, &points)?;
        let norm_f = holder::estimate_from_samples(&points, &fv, gamma, exec).norm;
        if norm_f <= 0.0 {
            log::warn!("trial `{}` has zero sampled γ-norm; skipped", f.label());
            continue;
        }
        let interp = project(f, grid)?;
        let pv: Vec<f64> = points.iter().map(|&t| interp.value_at(t)).collect();
        let norm_p = holder::estimate_from_samples(&points, &pv, gamma, exec).norm;
        ratio = ratio.max(norm_p / norm_f);
        used += 1;
    }
    Ok(ProjectorNormEstimate {
        ratio,
        trials_used: used,
        trials_skipped: trials.len() - used,
    })
}
