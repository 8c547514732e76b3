//! Reference solutions: the closed-form product for `α = 0`, the cusp, and
//! manufactured problems with a prescribed exact solution.

use crate::error::{Error, Result};
use crate::function::FunctionHandle;
use crate::problem::{Coefficients, ProblemSpec};

/// Default truncation threshold of [`product_formula`].
pub const PRODUCT_TOLERANCE: f64 = 1e-16;

/// `1 − ∏_{n≥0}(1 − βⁿt)`, truncated once `βⁿt < tol`.
///
/// Solves `f(t) = t + (1 − t)f(βt)`, `f(0) = 0`, `f(1) = 1`.
pub fn product_formula(beta: f64, t: f64, tol: f64) -> f64 {
    assert!(beta > 0.0 && beta < 1.0, "β must lie in (0, 1), got {beta}");
    assert!(tol > 0.0, "tolerance must be positive");
    let mut product = 1.0;
    let mut term = t;
    while term >= tol {
        product *= 1.0 - term;
        term *= beta;
    }
    1.0 - product
}

pub fn product_solution(beta: f64) -> FunctionHandle {
    assert!(beta > 0.0 && beta < 1.0, "β must lie in (0, 1), got {beta}");
    FunctionHandle::new(format!("product(beta={beta})"), move |t| {
        product_formula(beta, t, PRODUCT_TOLERANCE)
    })
}

/// `(1/2 − |t − 1/2|)^γ`, written as `min(t, 1 − t)^γ`. For `t ≥ 1/2` the
/// difference `1 − t` is exact, so `f(t) = f(1 − t)` holds bit for bit.
pub fn cusp_solution(gamma: f64) -> FunctionHandle {
    assert!(gamma > 0.0 && gamma <= 1.0, "γ must lie in (0, 1], got {gamma}");
    FunctionHandle::new(format!("cusp(gamma={gamma})"), move |t| t.min(1.0 - t).max(0.0).powf(gamma))
}

/// `t(1 − t)`
pub fn smooth_parabola() -> FunctionHandle {
    FunctionHandle::new("smooth_parabola", |t| t * (1.0 - t)).with_derivative(|t| 1.0 - 2.0 * t)
}

#[derive(Clone, Debug)]
pub struct ManufacturedProblem {
    /// Nonhomogeneous form whose exact solution is `exact`.
    pub problem: ProblemSpec,
    pub exact: FunctionHandle,
    pub description: String,
}

/// Builds `k = f − φ·f∘φ₁ − (1 − φ)·f∘φ₂` so that `target` solves `f = Tf + k`.
pub fn manufacture(target: &FunctionHandle, coefficients: &Coefficients, gamma: f64) -> Result<ManufacturedProblem> {
    let mut bad = Vec::new();
    for t in [0.0, 1.0] {
        let v = target.try_eval(t)?;
        if v.abs() > 1e-12 {
            bad.push(format!("target({t}) = {v}, expected 0"));
        }
    }
    if !bad.is_empty() {
        return Err(Error::Validation(bad));
    }
    let (f, phi, phi1, phi2) = (
        target.clone(),
        coefficients.phi.clone(),
        coefficients.phi1.clone(),
        coefficients.phi2.clone(),
    );
    let source = FunctionHandle::new(format!("k[{}]", target.label()), move |t| {
        let w = phi.eval(t);
        let x1 = phi1.eval(t).clamp(0.0, 1.0);
        let x2 = phi2.eval(t).clamp(0.0, 1.0);
        f.eval(t) - w * f.eval(x1) - (1.0 - w) * f.eval(x2)
    });
    let description = format!("exact {} on {}", target.label(), coefficients.label);
    let problem = ProblemSpec::nonhomogeneous(coefficients.clone(), source, gamma).with_label(description.clone());
    Ok(ManufacturedProblem {
        problem,
        exact: target.clone(),
        description,
    })
}

/// A named oracle from the registry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Oracle {
    Cusp(f64),
    Product(f64),
    SmoothParabola,
}

impl Oracle {
    /// Parses `cusp(γ)`, `product(β)` or `smooth_parabola`.
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        if name == "smooth_parabola" {
            return Ok(Oracle::SmoothParabola);
        }
        let arg = |prefix: &str| -> Option<Result<f64>> {
            let inner = name.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(
                inner
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::validation(format!("bad oracle parameter in `{name}`"))),
            )
        };
        if let Some(g) = arg("cusp") {
            let g = g?;
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::validation(format!("cusp exponent must lie in (0, 1], got {g}")));
            }
            return Ok(Oracle::Cusp(g));
        }
        if let Some(b) = arg("product") {
            let b = b?;
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::validation(format!("product β must lie in (0, 1), got {b}")));
            }
            return Ok(Oracle::Product(b));
        }
        Err(Error::validation(format!(
            "unknown oracle `{name}`; expected cusp(γ), product(β) or smooth_parabola"
        )))
    }

    pub fn handle(self) -> FunctionHandle {
        match self {
            Oracle::Cusp(g) => cusp_solution(g),
            Oracle::Product(b) => product_solution(b),
            Oracle::SmoothParabola => smooth_parabola(),
        }
    }

    /// Whether the oracle vanishes at both ends, so it can be manufactured.
    pub fn is_homogeneous(self) -> bool {
        !matches!(self, Oracle::Product(_))
    }
}
