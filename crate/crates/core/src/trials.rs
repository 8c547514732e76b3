//! Seeded random trial functions with analytic over-estimates of their
//! Hölder norms.
//!
//! Each trial is a short sum of terms `a·sin(ωt + θ)` and `a·|t − c|^e`
//! (`k = 0`) or `a·|t − c|^{1+e}` (`k = 1`) with `γ ≤ e ≤ 1`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::function::FunctionHandle;

#[derive(Clone, Debug)]
pub struct TrialFunction {
    pub handle: FunctionHandle,
    /// Regularity index: 0 for `H^γ`, 1 for `H^{1,γ}`.
    pub k: u8,
    pub gamma: f64,
    /// Upper bound on `‖u‖_γ` (`k = 0`) or `‖u'‖_γ` (`k = 1`).
    pub norm_bound: f64,
}

#[derive(Clone, Copy, Debug)]
enum Term {
    Sine { a: f64, omega: f64, theta: f64 },
    Power { a: f64, c: f64, e: f64 },
}

impl Term {
    fn eval(self, k: u8, t: f64) -> f64 {
        match self {
            Term::Sine { a, omega, theta } => a * (omega * t + theta).sin(),
            Term::Power { a, c, e } => a * (t - c).abs().powf(e + f64::from(k)),
        }
    }

    fn derivative(self, k: u8, t: f64) -> f64 {
        match self {
            Term::Sine { a, omega, theta } => a * omega * (omega * t + theta).cos(),
            Term::Power { a, c, e } => {
                let p = e + f64::from(k);
                let x = t - c;
                if x == 0.0 {
                    0.0
                } else {
                    a * p * x.signum() * x.abs().powf(p - 1.0)
                }
            }
        }
    }

    /// Bound on `‖term‖_γ` or `‖term'‖_γ`.
    fn bound(self, k: u8, gamma: f64) -> f64 {
        let spread = 2f64.powf(1.0 - gamma);
        match (self, k) {
            (Term::Sine { a, omega, theta }, 0) => (a * theta.sin()).abs() + a.abs() * spread * omega.powf(gamma),
            (Term::Sine { a, omega, theta }, _) => {
                (a * omega * theta.cos()).abs() + a.abs() * omega * spread * omega.powf(gamma)
            }
            (Term::Power { a, c, e }, 0) => a.abs() * (c.powf(e) + 1.0),
            (Term::Power { a, c, e }, _) => a.abs() * (1.0 + e) * (c.powf(e) + spread),
        }
    }
}

pub struct TrialGenerator {
    rng: ChaCha8Rng,
}

impl TrialGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn term(&mut self, gamma: f64) -> Term {
        let a = self.rng.gen_range(-2.0..2.0);
        if self.rng.gen_bool(0.5) {
            Term::Sine {
                a,
                omega: self.rng.gen_range(0.5..4.0 * PI),
                theta: self.rng.gen_range(0.0..2.0 * PI),
            }
        } else {
            Term::Power {
                a,
                c: self.rng.gen_range(0.0..1.0),
                e: self.rng.gen_range(gamma..=1.0),
            }
        }
    }

    pub fn function(&mut self, gamma: f64, k: u8) -> TrialFunction {
        assert!(gamma > 0.0 && gamma <= 1.0 && k <= 1);
        let count = self.rng.gen_range(1..=3);
        let terms: Vec<Term> = (0..count).map(|_| self.term(gamma)).collect();
        let norm_bound = terms.iter().map(|t| t.bound(k, gamma)).sum();
        let label = format!("trial(k={k}, terms={count})");
        let eval_terms = terms.clone();
        let handle = FunctionHandle::new(label, move |t| eval_terms.iter().map(|term| term.eval(k, t)).sum())
            .with_derivative(move |t| terms.iter().map(|term| term.derivative(k, t)).sum());
        TrialFunction {
            handle,
            k,
            gamma,
            norm_bound,
        }
    }

    pub fn functions(&mut self, count: usize, gamma: f64, k: u8) -> Vec<TrialFunction> {
        (0..count).map(|_| self.function(gamma, k)).collect()
    }

    /// A Lipschitz map of [0, 1] into itself.
    pub fn self_map(&mut self) -> FunctionHandle {
        let lo = self.rng.gen_range(0.0..0.5);
        let hi = self.rng.gen_range(lo + 0.1..=1.0);
        let omega = self.rng.gen_range(0.5..3.0 * PI);
        let theta = self.rng.gen_range(0.0..2.0 * PI);
        let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
        FunctionHandle::new("self_map", move |t| mid + half * (omega * t + theta).sin())
            .with_derivative(move |t| half * omega * (omega * t + theta).cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holder::{estimate_derivative_hoelder_norm, estimate_hoelder_norm};

    #[test]
    fn bounds_dominate_sampled_norms() {
        let mut g = TrialGenerator::new(7);
        for gamma in [0.25, 0.5, 1.0] {
            for f in g.functions(20, gamma, 0) {
                let est = estimate_hoelder_norm(&f.handle, gamma, 257).unwrap();
                assert!(est.norm <= f.norm_bound + 1e-9, "{} > {}", est.norm, f.norm_bound);
            }
            for f in g.functions(20, gamma, 1) {
                let est = estimate_derivative_hoelder_norm(&f.handle, gamma, 257).unwrap();
                assert!(est.norm <= f.norm_bound + 1e-9, "{} > {}", est.norm, f.norm_bound);
            }
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = TrialGenerator::new(3).function(0.5, 0);
        let b = TrialGenerator::new(3).function(0.5, 0);
        assert_eq!(a.norm_bound, b.norm_bound);
        assert_eq!(a.handle.eval(0.3), b.handle.eval(0.3));
    }

    #[test]
    fn self_maps_stay_in_unit_interval() {
        let mut g = TrialGenerator::new(11);
        for _ in 0..20 {
            let phi = g.self_map();
            assert!((0..=200).all(|i| (0.0..=1.0).contains(&phi.eval(f64::from(i) / 200.0))));
        }
    }
}
