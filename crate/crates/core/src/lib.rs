//! Mean-norm stability analysis for stochastic skew-evolution semiflows.
//!
//! A skew-evolution semiflow is a pair of a two-time semiflow `ζ(t, s, v)` on a
//! probability space and an operator cocycle `Φ(t, s, v)` over it. This crate
//! evaluates the averaged orbit norm `∫‖Φ(t,s,y)g(y)‖dP(y)` and the Datko-type
//! functionals built from it, which characterize polynomial stability and
//! polynomial instability in mean.
//!
//! Modules:
//! - [`flow`]: semiflows, cocycles, algebraic law checks and the example gallery.
//! - [`measure`]: probability spaces, observables and mean estimation.
//! - [`spaces`]: weighted sequence/function norms, class-H margins and `S(a,b)`.
//! - [`datko`]: Datko traces, growth fits, contraction certificates, classifier.
//! - [`cli`]: config-driven batch runner used by the `skewflow` binary.

#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod datko;
pub mod error;
pub mod flow;
pub mod measure;
pub mod spaces;

pub use error::{Error, Result};

/// Euclidean norm of a state vector.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn distance2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
