use proptest::prelude::*;

use vanishing_delay::collocation::{node_stencils, solve_collocation_with, SolveOptions};
use vanishing_delay::grid::{interp_sup_error, project, sup_error_bound};
use vanishing_delay::holder::{estimate_hoelder_norm, estimate_sup_norm};
use vanishing_delay::oracles::{cusp_solution, manufacture, product_formula};
use vanishing_delay::problem::{certify, Coefficients};
use vanishing_delay::study::{fit_order, power_of_two_ladder, run_study, StudyOptions};
use vanishing_delay::trials::TrialGenerator;
use vanishing_delay::{Execution, FunctionHandle, ProblemSpec, UniformGrid};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fit_is_scale_invariant(
        errors in prop::collection::vec(1e-8f64..1.0, 4..10),
        c in 1e-3f64..1e3,
    ) {
        let pts: Vec<(f64, f64)> = errors.iter().enumerate().map(|(i, &e)| (0.5f64.powi(i as i32 + 1), e)).collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(h, e)| (h, c * e)).collect();
        let a = fit_order(&pts).unwrap();
        let b = fit_order(&scaled).unwrap();
        prop_assert!((a.slope - b.slope).abs() <= 1e-12);
        prop_assert!((b.intercept - a.intercept - c.ln()).abs() <= 1e-9);
    }

    #[test]
    fn sup_norm_is_dominated_by_hoelder_norm(seed in any::<u64>(), gamma in 0.05f64..=1.0) {
        let f = TrialGenerator::new(seed).function(gamma, 0);
        let est = estimate_hoelder_norm(&f.handle, gamma, 129).unwrap();
        prop_assert!(estimate_sup_norm(&f.handle, 129).unwrap() <= est.norm + 1e-12);
        prop_assert!(est.norm <= f.norm_bound + 1e-9);
        let doubled = estimate_hoelder_norm(&f.handle.scale(-2.0), gamma, 129).unwrap();
        prop_assert!((doubled.norm - 2.0 * est.norm).abs() <= 1e-9 * (1.0 + est.norm));
    }

    #[test]
    fn interpolant_matches_nodes_and_error_bound(seed in any::<u64>(), gamma in 0.1f64..=1.0, n in 1usize..200, k in 0u8..=1) {
        let f = TrialGenerator::new(seed).function(gamma, k);
        let grid = UniformGrid::new(n).unwrap();
        let p = project(&f.handle, grid).unwrap();
        for i in 0..=n {
            prop_assert_eq!(p.evaluate(grid.node(i)).unwrap(), f.handle.eval(grid.node(i)));
        }
        let e = interp_sup_error(&f.handle, grid, Some(8 * n + 1)).unwrap();
        prop_assert!(e <= sup_error_bound(f.norm_bound, gamma, k, grid.h()) * (1.0 + 1e-12));
    }

    #[test]
    fn product_formula_identity(beta in 0.01f64..0.99, t in 0.0f64..=1.0) {
        let f = |x: f64| product_formula(beta, x, 1e-16);
        prop_assert!((f(t) - t - (1.0 - t) * f(beta * t)).abs() <= 1e-12);
    }

    #[test]
    fn manufactured_problems_have_zero_residual(alpha in 0.0f64..0.5, gamma in 0.1f64..1.0) {
        let mp = manufacture(&cusp_solution(gamma), &Coefficients::section5(alpha), gamma).unwrap();
        prop_assert!(mp.problem.residual(&mp.exact, 101).unwrap() <= 1e-12);
        prop_assert_eq!(mp.exact.eval(0.0), 0.0);
        prop_assert_eq!(mp.exact.eval(1.0), 0.0);
    }

    #[test]
    fn collocation_solution_is_discrete_fixed_point(alpha in 0.0f64..0.3, beta in 0.05f64..0.5, n in 2usize..160) {
        let p = ProblemSpec::paradise_fish(alpha, beta, 1.0);
        let sol = solve_collocation_with(&p, n, SolveOptions { exec: Execution::Sequential, ..SolveOptions::default() }).unwrap();
        let u = sol.solution.values();
        prop_assert_eq!(u[0], 0.0);
        prop_assert_eq!(u[n], 1.0);
        prop_assert_eq!(sol.solution.evaluate(1.0).unwrap(), 1.0);
        let stencils = node_stencils(&p, sol.grid, Execution::Sequential).unwrap();
        for st in &stencils {
            prop_assert!((u[st.node] - st.apply(u)).abs() <= 1e-9);
        }
        let par = vanishing_delay::solve_collocation(&p, n).unwrap();
        prop_assert_eq!(par.solution.values(), u);
    }

    #[test]
    fn homogeneous_shift_preserves_solution(alpha in 0.0f64..0.3, beta in 0.05f64..0.5, n in 2usize..100) {
        let p = ProblemSpec::paradise_fish(alpha, beta, 1.0);
        let shifted = p.to_homogeneous().unwrap();
        let f = vanishing_delay::solve_collocation(&p, n).unwrap();
        let g = vanishing_delay::solve_collocation(&shifted, n).unwrap();
        for (i, (a, b)) in f.solution.values().iter().zip(g.solution.values()).enumerate() {
            prop_assert!((a - b - f.grid.node(i)).abs() <= 1e-12);
        }
    }

    #[test]
    fn contraction_factor_matches_learning_model(alpha in 0.0f64..1.0, beta in 0.0f64..1.0, gamma in 0.1f64..=1.0) {
        let p = ProblemSpec::paradise_fish(alpha, beta, gamma);
        let cert = certify(&p, 33, p.coefficients.exact_norms_for(gamma)).unwrap();
        let expected = 2.0 * (beta.powf(gamma) + alpha.powf(gamma));
        prop_assert!((cert.lipschitz_factor - expected).abs() <= 1e-12);
        prop_assert_eq!(cert.satisfies_existence, expected < 1.0);
    }
}

#[test]
fn refinement_reduces_error_on_acceptance_problems() {
    let mut cases = Vec::new();
    for (gamma, alpha) in [(0.25, 1e-4), (0.5, 0.02), (0.75, 0.1)] {
        let mp = manufacture(&cusp_solution(gamma), &Coefficients::section5(alpha), gamma).unwrap();
        cases.push((mp.problem, mp.exact, power_of_two_ladder(4, 12)));
    }
    let mp = manufacture(
        &vanishing_delay::oracles::smooth_parabola(),
        &Coefficients::paradise_fish(0.05, 0.2),
        1.0,
    )
    .unwrap();
    cases.push((mp.problem, mp.exact, power_of_two_ladder(4, 10)));
    cases.push((
        ProblemSpec::paradise_fish(0.0, 0.2, 1.0),
        vanishing_delay::oracles::product_solution(0.2),
        power_of_two_ladder(4, 10),
    ));
    for (p, exact, ladder) in cases {
        let r = run_study(&p, &exact, &ladder, StudyOptions::default()).unwrap();
        for w in r.ladder.windows(2) {
            assert!(w[1].sup_error <= w[0].sup_error, "{}: N={} → {}", p.label, w[0].n, w[1].n);
            if w[0].n >= 32 {
                assert!(w[1].sup_error < w[0].sup_error);
            }
        }
        for w in r.ladder.windows(3) {
            assert!(w[2].sup_error <= w[0].sup_error);
        }
    }
}

#[test]
fn zero_problem_stays_zero() {
    let p = ProblemSpec::nonhomogeneous(Coefficients::section5(0.02), FunctionHandle::zero(), 0.5);
    for n in [2, 3, 17, 128] {
        let sol = vanishing_delay::solve_collocation(&p, n).unwrap();
        assert!(sol.solution.values().iter().all(|&v| v == 0.0));
    }
}
