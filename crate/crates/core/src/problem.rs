//! Problem definition, the homogeneous/nonhomogeneous reformulation and the
//! contraction certificate of the substitution operator
//! `Tf(t) = φ(t)f(φ₁(t)) + (1 − φ(t))f(φ₂(t))`.

use crate::error::{Error, Result};
use crate::function::{uniform_points, FunctionHandle};
use crate::holder::{self, clamp_unit, DEFAULT_SAMPLES};
use crate::CLAMP_TOLERANCE;

/// The coefficient triple `(φ, φ₁, φ₂)`.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub phi: FunctionHandle,
    pub phi1: FunctionHandle,
    pub phi2: FunctionHandle,
    /// Analytic norms, when the family knows them.
    pub exact_norms: Option<ExactNorms>,
    pub label: String,
}

/// Analytic norm data of a coefficient family that does not depend on `γ`
/// except through `‖φ‖_γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactNorms {
    /// `‖φ‖_γ`, assumed the same for every `γ` (true for `φ(t) = t`).
    pub phi_gamma: f64,
    pub phi1_lip: f64,
    pub phi2_lip: f64,
    pub phi1_at_zero: f64,
}

impl Coefficients {
    pub fn new(phi: FunctionHandle, phi1: FunctionHandle, phi2: FunctionHandle) -> Self {
        let label = format!("φ={}, φ1={}, φ2={}", phi.label(), phi1.label(), phi2.label());
        Self {
            phi,
            phi1,
            phi2,
            exact_norms: None,
            label,
        }
    }

    /// Learning model: `φ(t) = t`, `φ₁(t) = αt + 1 − α`, `φ₂(t) = βt`.
    pub fn paradise_fish(alpha: f64, beta: f64) -> Self {
        Self {
            phi: FunctionHandle::identity(),
            phi1: FunctionHandle::affine(alpha, 1.0 - alpha),
            phi2: FunctionHandle::affine(beta, 0.0),
            exact_norms: Some(ExactNorms {
                phi_gamma: 1.0,
                phi1_lip: 1.0,
                phi2_lip: beta,
                phi1_at_zero: 1.0 - alpha,
            }),
            label: format!("paradise_fish(alpha={alpha}, beta={beta})"),
        }
    }

    /// Symmetric family `φ(t) = t`, `φ₁(t) = 1 − (α/2)(1 − t)`, `φ₂(t) = (α/2)t`.
    pub fn section5(alpha: f64) -> Self {
        let half = alpha / 2.0;
        Self {
            phi: FunctionHandle::identity(),
            phi1: FunctionHandle::new(format!("1-{half}*(1-t)"), move |t| 1.0 - half * (1.0 - t))
                .with_derivative(move |_| half),
            phi2: FunctionHandle::affine(half, 0.0),
            exact_norms: Some(ExactNorms {
                phi_gamma: 1.0,
                phi1_lip: 1.0,
                phi2_lip: half,
                phi1_at_zero: 1.0 - half,
            }),
            label: format!("section5(alpha={alpha})"),
        }
    }

    pub fn exact_norms_for(&self, _gamma: f64) -> Option<CoefficientNorms> {
        self.exact_norms.map(|n| CoefficientNorms {
            phi_gamma: n.phi_gamma,
            phi1_lip: n.phi1_lip,
            phi2_lip: n.phi2_lip,
            phi1_at_zero: n.phi1_at_zero,
        })
    }
}

/// Largest admissible `α` of the symmetric family for which the collocation
/// hypothesis `2^{2−γ}α^γ < (1 + 2^{1−γ})⁻¹` holds.
pub fn section5_alpha_bound(gamma: f64) -> f64 {
    (2f64.powf(2.0 - gamma) * (1.0 + 2f64.powf(1.0 - gamma))).powf(-1.0 / gamma)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemForm {
    /// `f(0) = 0`, `f(1) = 1`, no source.
    Original,
    /// `f(0) = f(1) = 0`, source with `k(0) = k(1) = 0`.
    Nonhomogeneous,
}

/// `f = Tf + k` on [0, 1] with prescribed boundary values.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub coefficients: Coefficients,
    pub source: FunctionHandle,
    /// Marks `source` as identically zero (set by the original-form constructors).
    pub source_is_zero: bool,
    pub boundary_left: f64,
    pub boundary_right: f64,
    pub gamma: f64,
    pub label: String,
}

impl ProblemSpec {
    /// Original form: boundary values 0 and 1, no source.
    pub fn original(coefficients: Coefficients, gamma: f64) -> Self {
        let label = coefficients.label.clone();
        Self {
            coefficients,
            source: FunctionHandle::zero(),
            source_is_zero: true,
            boundary_left: 0.0,
            boundary_right: 1.0,
            gamma,
            label,
        }
    }

    /// Nonhomogeneous form with zero boundary values.
    pub fn nonhomogeneous(coefficients: Coefficients, source: FunctionHandle, gamma: f64) -> Self {
        let label = format!("{} + k={}", coefficients.label, source.label());
        Self {
            coefficients,
            source,
            source_is_zero: false,
            boundary_left: 0.0,
            boundary_right: 0.0,
            gamma,
            label,
        }
    }

    pub fn paradise_fish(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self::original(Coefficients::paradise_fish(alpha, beta), gamma)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn phi(&self) -> &FunctionHandle {
        &self.coefficients.phi
    }

    pub fn phi1(&self) -> &FunctionHandle {
        &self.coefficients.phi1
    }

    pub fn phi2(&self) -> &FunctionHandle {
        &self.coefficients.phi2
    }

    pub fn form(&self) -> Option<ProblemForm> {
        match (self.boundary_left, self.boundary_right) {
            (l, r) if l == 0.0 && r == 1.0 => Some(ProblemForm::Original),
            (l, r) if l == 0.0 && r == 0.0 => Some(ProblemForm::Nonhomogeneous),
            _ => None,
        }
    }

    /// Checks the coefficient and boundary invariants on `m` uniform samples,
    /// collecting every violation.
    pub fn validate(&self, m: usize) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            problems.push(format!("γ must lie in (0, 1], got {}", self.gamma));
        }
        let points = uniform_points(m.max(2));
        for (name, f) in [("φ1", self.phi1()), ("φ2", self.phi2())] {
            for &t in &points {
                match f.try_eval(t) {
                    Ok(x) if (-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&x) => {}
                    Ok(x) => {
                        problems.push(format!("{name}({t}) = {x} leaves [0, 1]"));
                        break;
                    }
                    Err(e) => {
                        problems.push(e.to_string());
                        break;
                    }
                }
            }
        }
        for &t in &points {
            if let Err(e) = self.phi().try_eval(t).and_then(|_| self.source.try_eval(t)) {
                problems.push(e.to_string());
                break;
            }
        }
        let phi1_one = self.phi1().eval(1.0);
        if (phi1_one - 1.0).abs() > CLAMP_TOLERANCE {
            problems.push(format!("φ1(1) = {phi1_one}, expected 1"));
        }
        let phi2_zero = self.phi2().eval(0.0);
        if phi2_zero.abs() > CLAMP_TOLERANCE {
            problems.push(format!("φ2(0) = {phi2_zero}, expected 0"));
        }
        match self.form() {
            Some(ProblemForm::Original) => {
                if let Some(t) = points.iter().find(|&&t| self.source.eval(t) != 0.0) {
                    problems.push(format!("original form needs k ≡ 0, but k({t}) ≠ 0"));
                }
            }
            Some(ProblemForm::Nonhomogeneous) => {
                for t in [0.0, 1.0] {
                    let k = self.source.eval(t);
                    if k.abs() > CLAMP_TOLERANCE {
                        problems.push(format!("nonhomogeneous form needs k({t}) = 0, got {k}"));
                    }
                }
            }
            None => problems.push(format!(
                "boundary values ({}, {}) match neither (0, 1) nor (0, 0)",
                self.boundary_left, self.boundary_right
            )),
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// `(Tf)(t)`, clamping the delayed arguments into [0, 1].
    pub fn apply_operator(&self, f: &FunctionHandle, t: f64) -> Result<f64> {
        let w = self.phi().try_eval(t)?;
        let x1 = clamp_unit(self.phi1().try_eval(t)?, self.phi1().label())?;
        let x2 = clamp_unit(self.phi2().try_eval(t)?, self.phi2().label())?;
        Ok(w * f.try_eval(x1)? + (1.0 - w) * f.try_eval(x2)?)
    }

    /// Sup over `m` uniform samples of `|f − Tf − k|`.
    pub fn residual(&self, f: &FunctionHandle, m: usize) -> Result<f64> {
        let mut worst = 0.0_f64;
        for t in uniform_points(m.max(2)) {
            let defect = f.try_eval(t)? - self.apply_operator(f, t)? - self.source.try_eval(t)?;
            worst = worst.max(defect.abs());
        }
        Ok(worst)
    }

    /// Rewrites the original form for `g(t) = f(t) − t`: zero boundary values
    /// and source `k = Tι − ι` with `ι` the identity.
    pub fn to_homogeneous(&self) -> Result<ProblemSpec> {
        if self.form() != Some(ProblemForm::Original) || !self.source_is_zero {
            return Err(Error::State(format!(
                "`{}` is not in original form (boundary 0 and 1, k ≡ 0)",
                self.label
            )));
        }
        let (phi, phi1, phi2) = (self.phi().clone(), self.phi1().clone(), self.phi2().clone());
        let source = FunctionHandle::new("Tι−ι", move |t| {
            let w = phi.eval(t);
            w * phi1.eval(t) + (1.0 - w) * phi2.eval(t) - t
        });
        Ok(ProblemSpec::nonhomogeneous(self.coefficients.clone(), source, self.gamma)
            .with_label(format!("{} (shifted by t)", self.label)))
    }
}

/// Norm data entering the contraction factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientNorms {
    /// `‖φ‖_γ`
    pub phi_gamma: f64,
    /// `‖φ₁‖₁`
    pub phi1_lip: f64,
    /// `‖φ₂‖₁`
    pub phi2_lip: f64,
    /// `φ₁(0)`
    pub phi1_at_zero: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionCertificate {
    pub gamma: f64,
    pub norm_phi_gamma: f64,
    pub norm_phi1_lip: f64,
    pub norm_phi2_lip: f64,
    pub phi1_at_zero: f64,
    /// `2‖φ‖_γ(‖φ₂‖₁^γ + (‖φ₁‖₁ − φ₁(0))^γ)`, the Lipschitz constant of `T`.
    pub lipschitz_factor: f64,
    /// `‖φ‖_γ(2‖φ₂‖₁^γ + (‖φ₁‖₁ − φ₁(0))^γ + ‖φ₁‖₁^γ)`, the bound on `‖T‖`
    /// over the boundary-constrained set.
    pub fixed_point_factor: f64,
    /// `(1 + 2^{1−γ})⁻¹`
    pub collocation_threshold: f64,
    /// `T` is a contraction: `lipschitz_factor < 1`.
    pub satisfies_existence: bool,
    /// `fixed_point_factor < 1`.
    pub satisfies_norm_bound: bool,
    /// `lipschitz_factor < collocation_threshold`.
    pub satisfies_collocation: bool,
    /// Whether the norms came from samples (lower bounds) rather than exact values.
    pub sampled: bool,
}

impl ContractionCertificate {
    pub fn from_norms(gamma: f64, norms: CoefficientNorms, sampled: bool) -> Self {
        let CoefficientNorms {
            phi_gamma,
            phi1_lip,
            phi2_lip,
            phi1_at_zero,
        } = norms;
        let phi1_slope = (phi1_lip - phi1_at_zero).max(0.0);
        let lipschitz_factor = 2.0 * phi_gamma * (phi2_lip.powf(gamma) + phi1_slope.powf(gamma));
        let fixed_point_factor = phi_gamma
            * (2.0 * phi2_lip.powf(gamma) + phi1_slope.powf(gamma) + phi1_lip.powf(gamma));
        let collocation_threshold = 1.0 / (1.0 + 2f64.powf(1.0 - gamma));
        Self {
            gamma,
            norm_phi_gamma: phi_gamma,
            norm_phi1_lip: phi1_lip,
            norm_phi2_lip: phi2_lip,
            phi1_at_zero,
            lipschitz_factor,
            fixed_point_factor,
            collocation_threshold,
            satisfies_existence: lipschitz_factor < 1.0,
            satisfies_norm_bound: fixed_point_factor < 1.0,
            satisfies_collocation: lipschitz_factor < collocation_threshold,
            sampled,
        }
    }

    /// `key=value` lines, one per field.
    pub fn summary(&self) -> String {
        format!(
            "gamma={}\nnorm_phi_gamma={}\nnorm_phi1_lip={}\nnorm_phi2_lip={}\nphi1_at_zero={}\n\
             lipschitz_factor={}\nfixed_point_factor={}\ncollocation_threshold={}\n\
             satisfies_existence={}\nsatisfies_norm_bound={}\nsatisfies_collocation={}\nnorms={}\n",
            self.gamma,
            self.norm_phi_gamma,
            self.norm_phi1_lip,
            self.norm_phi2_lip,
            self.phi1_at_zero,
            self.lipschitz_factor,
            self.fixed_point_factor,
            self.collocation_threshold,
            self.satisfies_existence,
            self.satisfies_norm_bound,
            self.satisfies_collocation,
            if self.sampled { "sampled" } else { "exact" },
        )
    }
}

/// Sampled coefficient norms on `m` uniform points.
pub fn sampled_norms(p: &ProblemSpec, m: usize) -> Result<CoefficientNorms> {
    Ok(CoefficientNorms {
        phi_gamma: holder::estimate_hoelder_norm(p.phi(), p.gamma, m)?.norm,
        phi1_lip: holder::estimate_lipschitz_norm(p.phi1(), m)?,
        phi2_lip: holder::estimate_lipschitz_norm(p.phi2(), m)?,
        phi1_at_zero: p.phi1().try_eval(0.0)?,
    })
}

/// Builds the contraction certificate, from sampled norms unless `overrides`
/// supplies exact ones.
pub fn certify(
    p: &ProblemSpec,
    m: usize,
    overrides: Option<CoefficientNorms>,
) -> Result<ContractionCertificate> {
    p.validate(m)?;
    Ok(match overrides {
        Some(norms) => ContractionCertificate::from_norms(p.gamma, norms, false),
        None => ContractionCertificate::from_norms(p.gamma, sampled_norms(p, m)?, true),
    })
}

pub fn certify_default(p: &ProblemSpec) -> Result<ContractionCertificate> {
    certify(p, DEFAULT_SAMPLES, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorollaryReport {
    /// `α^γ + β^γ < 1/2`
    pub condition_a: bool,
    /// `0 < β < 4^{−1/γ}`
    pub condition_b: bool,
    /// `(b) ⇒ (a)` holds for these parameters.
    pub b_implies_a: bool,
}

/// Parameter conditions under which the learning model has a unique solution.
pub fn check_corollary_conditions(alpha: f64, beta: f64, gamma: f64) -> Result<CorollaryReport> {
    if !(alpha > 0.0 && alpha <= beta && beta <= 1.0) {
        return Err(Error::validation(format!(
            "need 0 < α ≤ β ≤ 1, got α = {alpha}, β = {beta}"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::validation(format!("γ must lie in (0, 1], got {gamma}")));
    }
    let condition_a = alpha.powf(gamma) + beta.powf(gamma) < 0.5;
    let condition_b = beta < 4f64.powf(-1.0 / gamma);
    Ok(CorollaryReport {
        condition_a,
        condition_b,
        b_implies_a: !condition_b || condition_a,
    })
}
