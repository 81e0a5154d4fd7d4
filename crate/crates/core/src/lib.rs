//! Numerical toolkit for the double phase N-function
//! `H(x,t) = ∫₀ᵗ (s^{p(x,s)-1} + μ(x) s^{q(x,s)-1}) ds`
//! with exponents depending on the solution: modulars and Luxemburg norms,
//! conjugates, the Sobolev conjugate, embedding probes, existence certificates
//! and a radial critical-point solver.

pub mod certificate;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod model;
pub mod nfunction;
pub mod numerics;
pub mod record;
pub mod sobolev;
pub mod solver;

pub use error::{Error, Result};
pub use nfunction::{EvalMode, NFunctionHandle};
