//! Sampled Hölder-space norms and the elementary inequalities between them.
//!
//! Every estimate is a supremum over a finite set of sample pairs and hence a
//! lower bound of the true norm. The checks compare both sides of an
//! inequality on one common sample set and report `(lhs, rhs, margin)`.

use crate::error::{Error, Result};
use crate::function::{uniform_points, FunctionHandle};
use crate::par::Execution;
use crate::CLAMP_TOLERANCE;

/// Default number of uniform samples for norm estimates.
pub const DEFAULT_SAMPLES: usize = 513;

/// Pairs closer than this are skipped (the quotient is 0/0 there).
pub const MIN_PAIR_SEPARATION: f64 = 1e-14;

/// Slack allowed when a sampled inequality is checked.
pub const CHECK_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoelderEstimate {
    pub gamma: f64,
    /// `|f(0)|`
    pub boundary_term: f64,
    pub seminorm: f64,
    /// `boundary_term + seminorm`
    pub norm: f64,
    pub sample_count: usize,
}

/// One sampled inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; negative means violated.
    pub margin: f64,
    pub passed: bool,
}

impl InequalityCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin,
            passed: lhs <= rhs + CHECK_SLACK,
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("Hölder exponent must lie in (0, 1], got {gamma}")))
    }
}

fn check_samples(m: usize) -> Result<()> {
    if m >= 2 {
        Ok(())
    } else {
        Err(Error::validation(format!("need at least 2 samples, got {m}")))
    }
}

pub(crate) fn sample(f: &FunctionHandle, points: &[f64]) -> Result<Vec<f64>> {
    points.iter().map(|&t| f.try_eval(t)).collect()
}

/// Largest `|v_j − v_i| / |t_j − t_i|^γ` over all pairs of `points`, which
/// must be sorted increasingly.
pub fn seminorm_of_samples(points: &[f64], values: &[f64], gamma: f64, exec: Execution) -> f64 {
    assert_eq!(points.len(), values.len());
    let n = points.len();
    exec.max_range(n, |i| {
        let (ti, vi) = (points[i], values[i]);
        let mut best = 0.0_f64;
        for j in i + 1..n {
            let dt = points[j] - ti;
            if dt < MIN_PAIR_SEPARATION {
                continue;
            }
            let denom = if gamma == 1.0 { dt } else { dt.powf(gamma) };
            best = best.max((values[j] - vi).abs() / denom);
        }
        best
    })
}

/// Estimate from precomputed samples; `points[0]` must be 0.
pub fn estimate_from_samples(
    points: &[f64],
    values: &[f64],
    gamma: f64,
    exec: Execution,
) -> HoelderEstimate {
    debug_assert_eq!(points.first(), Some(&0.0));
    let boundary_term = values[0].abs();
    let seminorm = seminorm_of_samples(points, values, gamma, exec);
    HoelderEstimate {
        gamma,
        boundary_term,
        seminorm,
        norm: boundary_term + seminorm,
        sample_count: points.len(),
    }
}

pub fn estimate_hoelder_norm(f: &FunctionHandle, gamma: f64, m: usize) -> Result<HoelderEstimate> {
    estimate_hoelder_norm_with(f, gamma, m, Execution::default())
}

pub fn estimate_hoelder_norm_with(
    f: &FunctionHandle,
    gamma: f64,
    m: usize,
    exec: Execution,
) -> Result<HoelderEstimate> {
    check_gamma(gamma)?;
    check_samples(m)?;
    let points = uniform_points(m);
    let values = sample(f, &points)?;
    Ok(estimate_from_samples(&points, &values, gamma, exec))
}

pub fn estimate_sup_norm(f: &FunctionHandle, m: usize) -> Result<f64> {
    check_samples(m)?;
    let values = sample(f, &uniform_points(m))?;
    Ok(values.iter().fold(0.0, |acc, v| acc.max(v.abs())))
}

/// `|f(0)| + sampled Lipschitz constant`.
pub fn estimate_lipschitz_norm(f: &FunctionHandle, m: usize) -> Result<f64> {
    Ok(estimate_hoelder_norm(f, 1.0, m)?.norm)
}

/// `‖u‖_{1,γ}`, taken as `‖u′‖_γ`.
pub fn estimate_derivative_hoelder_norm(
    f: &FunctionHandle,
    gamma: f64,
    m: usize,
) -> Result<HoelderEstimate> {
    estimate_hoelder_norm(&f.derivative(), gamma, m)
}

#[derive(Clone, Debug)]
pub struct EmbeddingReport {
    /// `‖f‖_γ ≤ ‖f‖_β` (on [0, 1] the constant `max{1, (b−a)^{β−γ}}` is 1).
    pub embedding: InequalityCheck,
    /// `‖f‖_∞ ≤ ‖f‖_γ`.
    pub sup_bound: InequalityCheck,
}

impl EmbeddingReport {
    pub fn passed(&self) -> bool {
        self.embedding.passed && self.sup_bound.passed
    }
}

pub fn check_embedding_inequality(
    f: &FunctionHandle,
    gamma: f64,
    beta: f64,
    m: usize,
) -> Result<EmbeddingReport> {
    check_gamma(beta)?;
    if !(gamma > 0.0 && gamma < beta) {
        return Err(Error::validation(format!(
            "embedding needs 0 < γ < β ≤ 1, got γ = {gamma}, β = {beta}"
        )));
    }
    check_samples(m)?;
    let points = uniform_points(m);
    let values = sample(f, &points)?;
    let exec = Execution::default();
    let low = estimate_from_samples(&points, &values, gamma, exec);
    let high = estimate_from_samples(&points, &values, beta, exec);
    let sup = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    Ok(EmbeddingReport {
        embedding: InequalityCheck::new("‖f‖_γ ≤ ‖f‖_β", low.norm, high.norm),
        sup_bound: InequalityCheck::new("‖f‖_∞ ≤ ‖f‖_γ", sup, low.norm),
    })
}

/// Product bound: `[f·g]_γ ≤ ‖f‖_∞ [g]_γ + ‖g‖_∞ [f]_γ`, where `[·]_γ` is the
/// seminorm (`‖·‖_γ − |·(0)|`). Both sides carry the boundary term
/// `|f(0)·g(0)|` so the check compares full norms.
pub fn check_product_bound(
    f: &FunctionHandle,
    g: &FunctionHandle,
    gamma: f64,
    m: usize,
) -> Result<InequalityCheck> {
    check_gamma(gamma)?;
    check_samples(m)?;
    let exec = Execution::default();
    let points = uniform_points(m);
    let fv = sample(f, &points)?;
    let gv = sample(g, &points)?;
    let fg: Vec<f64> = fv.iter().zip(&gv).map(|(a, b)| a * b).collect();
    let sup = |v: &[f64]| v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let nf = estimate_from_samples(&points, &fv, gamma, exec);
    let ng = estimate_from_samples(&points, &gv, gamma, exec);
    let boundary = (fv[0] * gv[0]).abs();
    let lhs = boundary + seminorm_of_samples(&points, &fg, gamma, exec);
    let rhs = boundary
        + sup(&fv) * (ng.norm - ng.boundary_term)
        + sup(&gv) * (nf.norm - nf.boundary_term);
    Ok(InequalityCheck::new("‖f·g‖_γ ≤ ‖f‖_∞[g]_γ + ‖g‖_∞[f]_γ", lhs, rhs))
}

#[derive(Clone, Debug)]
pub struct CompositionReport {
    /// Sampled `‖f∘φ‖_γ`.
    pub composed_norm: f64,
    /// (i): the composed norm is finite.
    pub finite: bool,
    /// (ii): `‖f∘φ‖_γ ≤ |f(φ(0))| + [f]_γ·(‖φ‖₁ − |φ(0)|)^γ`.
    pub norm_bound: InequalityCheck,
    /// (iii): `max |f(φ(t))| ≤ ‖f‖_γ·‖φ‖₁^γ`; only checked when `f(0) = 0`.
    pub pointwise: Option<InequalityCheck>,
}

impl CompositionReport {
    pub fn passed(&self) -> bool {
        self.finite && self.norm_bound.passed && self.pointwise.as_ref().is_none_or(|c| c.passed)
    }
}

/// Checks the composition-operator bounds for `f ∘ φ`, with `φ` mapping
/// [0, 1] into itself. The norm of `f` is estimated on the union of the
/// uniform grid and its image under `φ`, so that every value of `f` entering
/// the left-hand sides is also seen by the right-hand sides.
pub fn check_composition_bound(
    f: &FunctionHandle,
    phi: &FunctionHandle,
    gamma: f64,
    m: usize,
) -> Result<CompositionReport> {
    check_gamma(gamma)?;
    check_samples(m)?;
    let exec = Execution::default();
    let points = uniform_points(m);
    let phi_values = sample(phi, &points)?
        .into_iter()
        .map(|x| clamp_unit(x, phi.label()))
        .collect::<Result<Vec<_>>>()?;

    let composed = phi_values
        .iter()
        .map(|&x| f.try_eval(x))
        .collect::<Result<Vec<_>>>()?;
    let composed_norm = estimate_from_samples(&points, &composed, gamma, exec).norm;

    let mut union: Vec<f64> = points.iter().chain(&phi_values).copied().collect();
    union.sort_by(f64::total_cmp);
    union.dedup();
    let f_union = sample(f, &union)?;
    let nf = estimate_from_samples(&union, &f_union, gamma, exec);
    let phi_lip = estimate_from_samples(&points, &phi_values, 1.0, exec);

    let rhs_ii = composed[0].abs() + nf.seminorm * phi_lip.seminorm.powf(gamma);
    let norm_bound = InequalityCheck::new("‖C_φ f‖_γ ≤ |f(φ(0))| + [f]_γ[φ]_1^γ", composed_norm, rhs_ii);

    let pointwise = (f_union[0].abs() <= CLAMP_TOLERANCE).then(|| {
        let lhs = composed.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        InequalityCheck::new("|C_φ f(t)| ≤ ‖f‖_γ‖φ‖_1^γ", lhs, nf.norm * phi_lip.norm.powf(gamma))
    });

    Ok(CompositionReport {
        composed_norm,
        finite: composed_norm.is_finite(),
        norm_bound,
        pointwise,
    })
}

/// Clamps `x` into [0, 1] when it is outside by at most [`CLAMP_TOLERANCE`].
pub(crate) fn clamp_unit(x: f64, what: &str) -> Result<f64> {
    if (-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&x) {
        Ok(x.clamp(0.0, 1.0))
    } else {
        Err(Error::Domain {
            what: format!("value of `{what}`"),
            value: x,
            lower: 0.0,
            upper: 1.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::cusp_solution;

    fn sqrt_fn() -> FunctionHandle {
        FunctionHandle::new("sqrt", f64::sqrt)
    }

    #[test]
    fn identity_has_unit_norm() {
        let est = estimate_hoelder_norm(&FunctionHandle::identity(), 0.5, 101).unwrap();
        assert_eq!(est.norm, 1.0);
        assert_eq!(est.boundary_term, 0.0);
        assert_eq!(est.sample_count, 101);
    }

    #[test]
    fn constant_has_zero_seminorm() {
        let est = estimate_hoelder_norm(&FunctionHandle::constant(-3.5), 0.3, 50).unwrap();
        assert_eq!(est.seminorm, 0.0);
        assert_eq!(est.norm, 3.5);
    }

    #[test]
    fn sqrt_half_norm_is_one() {
        let est = estimate_hoelder_norm(&sqrt_fn(), 0.5, 1001).unwrap();
        assert!((est.norm - 1.0).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn sup_norm_examples() {
        let parabola = FunctionHandle::new("t(1-t)", |t| t * (1.0 - t));
        assert_eq!(estimate_sup_norm(&parabola, 101).unwrap(), 0.25);
        assert_eq!(estimate_sup_norm(&FunctionHandle::constant(-1.0), 2).unwrap(), 1.0);
        let cusp = cusp_solution(0.5);
        assert!((estimate_sup_norm(&cusp, 101).unwrap() - 0.5_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_norm_of_delays() {
        let phi2 = FunctionHandle::affine(0.2, 0.0);
        assert!((estimate_lipschitz_norm(&phi2, 101).unwrap() - 0.2).abs() < 1e-12);
        let phi1 = FunctionHandle::affine(0.3, 0.7);
        assert!((estimate_lipschitz_norm(&phi1, 101).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(estimate_lipschitz_norm(&FunctionHandle::constant(2.0), 7).unwrap(), 2.0);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let f = FunctionHandle::identity();
        assert!(matches!(estimate_hoelder_norm(&f, 0.0, 10), Err(Error::Validation(_))));
        assert!(matches!(estimate_hoelder_norm(&f, 1.5, 10), Err(Error::Validation(_))));
        assert!(matches!(estimate_hoelder_norm(&f, 0.5, 1), Err(Error::Validation(_))));
        assert!(check_embedding_inequality(&f, 0.5, 0.5, 10).is_err());
    }

    #[test]
    fn evaluation_errors_carry_location() {
        let bad = FunctionHandle::new("log", f64::ln);
        match estimate_sup_norm(&bad, 5) {
            Err(Error::Evaluation { t, .. }) => assert_eq!(t, 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn embedding_examples() {
        let r = check_embedding_inequality(&FunctionHandle::identity(), 0.25, 0.75, 101).unwrap();
        assert!(r.passed());
        assert_eq!(r.embedding.lhs, 1.0);
        assert_eq!(r.embedding.rhs, 1.0);
        let r = check_embedding_inequality(&FunctionHandle::zero(), 0.25, 0.75, 11).unwrap();
        assert!(r.passed());
        assert_eq!(r.embedding.margin, 0.0);
        let r = check_embedding_inequality(&cusp_solution(0.5), 0.25, 0.5, 501).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn product_examples() {
        let t = FunctionHandle::identity();
        let c = check_product_bound(&t, &t, 0.5, 201).unwrap();
        assert!(c.passed);
        // [t²]_{1/2} is attained at (1, 1/3): (4/3)·(2/3)^{1/2}
        assert!((c.lhs - 4.0 / 3.0 * (2.0f64 / 3.0).sqrt()).abs() < 1e-4, "{c:?}");
        assert!((c.rhs - 2.0).abs() < 1e-12);

        let c = check_product_bound(&FunctionHandle::zero(), &t, 0.5, 51).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));

        let one_minus = FunctionHandle::affine(-1.0, 1.0);
        let c = check_product_bound(&t, &one_minus, 1.0, 201).unwrap();
        assert!(c.passed);
        // largest chord slope of t − t² between grid points, next to an endpoint
        assert!((c.lhs - 1.0).abs() < 0.01, "{c:?}");
        assert!((c.rhs - 2.0).abs() < 1e-12);
    }

    #[test]
    fn composition_examples() {
        let t = FunctionHandle::identity();
        let r = check_composition_bound(&t, &FunctionHandle::affine(0.2, 0.0), 1.0, 101).unwrap();
        assert!(r.passed());
        let pw = r.pointwise.unwrap();
        assert!((pw.lhs - 0.2).abs() < 1e-15);
        assert!((pw.rhs - 0.2).abs() < 1e-12);

        let r = check_composition_bound(&FunctionHandle::zero(), &t, 0.5, 11).unwrap();
        assert!(r.passed());
        assert_eq!(r.norm_bound.lhs, 0.0);

        let r = check_composition_bound(&sqrt_fn(), &FunctionHandle::affine(0.5, 0.0), 0.5, 1001)
            .unwrap();
        assert!(r.passed(), "{r:?}");
        let pw = r.pointwise.unwrap();
        assert!((pw.lhs - 0.5_f64.sqrt()).abs() < 1e-12);
        assert!(pw.margin.abs() < 1e-9, "equality case, margin {}", pw.margin);
    }

    #[test]
    fn composition_rejects_out_of_range_phi() {
        let r = check_composition_bound(
            &FunctionHandle::identity(),
            &FunctionHandle::affine(2.0, 0.0),
            0.5,
            11,
        );
        assert!(matches!(r, Err(Error::Domain { .. })));
    }

    #[test]
    fn sequential_and_parallel_scans_agree() {
        let f = cusp_solution(0.3);
        let a = estimate_hoelder_norm_with(&f, 0.3, 257, Execution::Sequential).unwrap();
        let b = estimate_hoelder_norm_with(&f, 0.3, 257, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
