//! Exact rational arithmetic, dense matrices and the simplex solver.

pub mod lp;
pub mod matrix;
pub mod rational;

pub use lp::{lp_solve, Farkas, LpProblem, LpResult, Sense};
pub use matrix::{dot, mat_rank, RationalMatrix};
pub use rational::{format_rational, parse_rational, rat, ratio, Rational};
