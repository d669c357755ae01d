//! Finite-element solver for the two-phase obstacle problem
//!
//! ```text
//! min J(v) = int |grad v|^2 / 2 + a+ max(v, 0) + a- max(-v, 0),   v = g on the Dirichlet boundary,
//! ```
//!
//! computed through the box-constrained dual problem for the Lagrange
//! multiplier, together with a fully computable upper bound (majorant) of
//! `J(v) - J(u)` for any conforming approximation `v`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod dual_solver;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod io;
pub mod linalg;
pub mod majorant;
pub mod mesh;
pub mod problems;

pub use dual_solver::{solve_two_phase, DualSolveOptions, DualSolveResult};
pub use error::{Error, Result};
pub use fields::{P0Field, P1Field, Rt0Field};
pub use majorant::{
    energy_bounds, optimize_majorant, EnergyBounds, MajorantBreakdown, MajorantOptions,
};
pub use mesh::{Rect, SplitPattern, TriMesh};
pub use problems::{example1_spec, example2_spec, ProblemSpec};
