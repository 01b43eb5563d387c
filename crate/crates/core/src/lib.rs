//! Vanishing-viscosity laboratory for a generalized Camassa-Holm equation.

// `!(a < b)` is used on purpose so NaN lands on the failing side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod entropy;
pub mod error;
pub mod estimates;
pub mod grid;
pub mod helmholtz;
pub mod initialdata;
pub mod io;
pub mod selftest;
pub mod solver;
pub mod sweep;
pub mod trajectory;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use helmholtz::HelmholtzSolver;
pub use initialdata::{InitialNorms, MollifierKernel};
pub use solver::{Formulation, SnapshotSchedule, Solver, SolverConfig, StepStats};
pub use trajectory::Trajectory;
