//! Solvers for nonlocal functional equations with two vanishing delays,
//!
//! ```text
//! f(t) = φ(t)·f(φ₁(t)) + (1 − φ(t))·f(φ₂(t)) + k(t),   t ∈ [0, 1],
//! ```
//!
//! posed in Hölder spaces. The crate provides sampled Hölder-norm estimation,
//! contraction certificates for the substitution operator, a piecewise-linear
//! collocation solver, Picard iteration (exact and on a grid), closed-form and
//! manufactured reference solutions, and a convergence-study harness.
//!
//! Data-parallel inner loops (pair scans, row elimination, assembly, ladder
//! rungs) run on rayon when the `parallel` feature is enabled (the default);
//! every such loop has a sequential path selected through [`Execution`].

pub mod cli;
pub mod collocation;
pub mod error;
pub mod function;
pub mod grid;
pub mod holder;
pub mod linalg;
pub mod oracles;
pub mod par;
pub mod picard;
pub mod problem;
pub mod study;
pub mod svg;
pub mod trials;

pub use collocation::{assemble, solve_collocation, CollocationSolution};
pub use error::{Error, Result};
pub use function::FunctionHandle;
pub use grid::{PiecewiseLinear, UniformGrid};
pub use holder::HoelderEstimate;
pub use linalg::DenseMatrix;
pub use par::Execution;
pub use problem::{CoefficientNorms, Coefficients, ContractionCertificate, ProblemSpec};
pub use study::{fit_order, run_study, ConvergenceReport};

/// Relative slack used when a coefficient value lands just outside [0, 1].
pub const CLAMP_TOLERANCE: f64 = 1e-12;
