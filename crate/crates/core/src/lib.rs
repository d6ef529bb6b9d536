//! Linear and weakly nonlinear analysis, plus a finite-volume solver, for a
//! two-species chemotaxis system with Lotka-Volterra competition.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod bifurcation;
pub mod config;
pub mod diagnostics;
pub mod experiment;
pub mod linalg;
pub mod linear_analysis;
pub mod model;
pub mod oracles;
pub mod output;
pub mod solver;
