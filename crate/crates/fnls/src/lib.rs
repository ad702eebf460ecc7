//! Normalized ground states of the critical fractional nonlinear Schrödinger equation
//! (−Δ)^s u = λu + μ|u|^{q−2}u + |u|^{2*_s−2}u with ∫u² = a² on ℝ^N, discretized on a
//! periodic box.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod epstein;
pub mod par;
pub mod params;
pub mod roots;
pub mod spectral;
pub mod extremals;
pub mod fiber;
pub mod fields;
pub mod functionals;
pub mod solvers;
