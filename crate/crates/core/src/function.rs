//! Evaluatable real functions on [0, 1].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Step of the central difference used when no analytic derivative is known.
pub const DERIVATIVE_STEP: f64 = 1e-6;

/// A labelled, cheaply clonable real function on [0, 1].
///
/// Coefficients, source terms, exact solutions and candidate solutions all
/// travel as `FunctionHandle`s. An analytic derivative may be attached; it is
/// used by the `H^{1,γ}` norm estimates.
#[derive(Clone)]
pub struct FunctionHandle {
    label: Arc<str>,
    eval: RealFn,
    derivative: Option<RealFn>,
}

impl fmt::Debug for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionHandle")
            .field("label", &self.label)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl FunctionHandle {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: Arc::from(label.into()),
            eval: Arc::new(f),
            derivative: None,
        }
    }

    pub fn with_derivative<F>(mut self, df: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(df));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_| c).with_derivative(|_| 0.0)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn identity() -> Self {
        Self::new("t", |t| t).with_derivative(|_| 1.0)
    }

    /// `t ↦ slope·t + intercept`.
    pub fn affine(slope: f64, intercept: f64) -> Self {
        Self::new(format!("{slope}*t+{intercept}"), move |t| slope * t + intercept)
            .with_derivative(move |_| slope)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = Arc::from(label.into());
        self
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// Raw evaluation, no finiteness check.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn try_eval(&self, t: f64) -> Result<f64> {
        let value = (self.eval)(t);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Evaluation {
                label: self.label.to_string(),
                t,
                value,
            })
        }
    }

    /// Derivative at `t`: the analytic one if attached, otherwise a central
    /// difference with step [`DERIVATIVE_STEP`] (one-sided at the ends).
    pub fn derivative_at(&self, t: f64) -> f64 {
        match &self.derivative {
            Some(df) => df(t),
            None => {
                let lo = (t - DERIVATIVE_STEP).max(0.0);
                let hi = (t + DERIVATIVE_STEP).min(1.0);
                (self.eval(hi) - self.eval(lo)) / (hi - lo)
            }
        }
    }

    /// The derivative as a handle of its own.
    pub fn derivative(&self) -> FunctionHandle {
        let this = self.clone();
        FunctionHandle::new(format!("d/dt[{}]", self.label), move |t| this.derivative_at(t))
    }

    pub fn scale(&self, c: f64) -> FunctionHandle {
        let f = self.eval.clone();
        let mut out = FunctionHandle::new(format!("{c}*({})", self.label), move |t| c * f(t));
        if let Some(df) = self.derivative.clone() {
            out = out.with_derivative(move |t| c * df(t));
        }
        out
    }

    pub fn add(&self, other: &FunctionHandle) -> FunctionHandle {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let mut out = FunctionHandle::new(format!("({})+({})", self.label, other.label), move |t| {
            f(t) + g(t)
        });
        if let (Some(df), Some(dg)) = (self.derivative.clone(), other.derivative.clone()) {
            out = out.with_derivative(move |t| df(t) + dg(t));
        }
        out
    }

    pub fn sub(&self, other: &FunctionHandle) -> FunctionHandle {
        self.add(&other.scale(-1.0))
            .relabel(format!("({})-({})", self.label, other.label))
    }

    pub fn mul(&self, other: &FunctionHandle) -> FunctionHandle {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let mut out = FunctionHandle::new(format!("({})*({})", self.label, other.label), move |t| {
            f(t) * g(t)
        });
        if let (Some(df), Some(dg)) = (self.derivative.clone(), other.derivative.clone()) {
            let (f, g) = (self.eval.clone(), other.eval.clone());
            out = out.with_derivative(move |t| df(t) * g(t) + f(t) * dg(t));
        }
        out
    }

    /// `t ↦ self(inner(t))`.
    pub fn compose(&self, inner: &FunctionHandle) -> FunctionHandle {
        let (f, g) = (self.eval.clone(), inner.eval.clone());
        FunctionHandle::new(format!("({})∘({})", self.label, inner.label), move |t| f(g(t)))
    }
}

/// Uniform sample points `i/(m−1)`, `i = 0..m`.
pub fn uniform_points(m: usize) -> Vec<f64> {
    let denom = (m - 1) as f64;
    (0..m).map(|i| i as f64 / denom).collect()
}
