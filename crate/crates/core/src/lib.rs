//! Numerical laboratory for the Riesz fractional gradient and the
//! fractional p-Laplacian on an interval.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: uniform lattices, regions `Ω_λ`/`Ω^λ`, nodal functions and `L^p` norms;
//! * [`fracops`]: `μ(N,s)`, the dense `∇^s` operator and `div_s`;
//! * [`translations`]: cut-offs, admissible steps, localized translations and the commutator;
//! * [`besov`]: second-difference seminorms and exponent fits;
//! * [`solver`]: the energy, its gradient and the Dirichlet minimiser;
//! * [`harness`]: predicted exponents, verification suites, sweeps and the CLI plumbing.

// `!(x >= lo)` is used on purpose: it rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod besov;
pub mod error;
pub mod field;
pub mod fracops;
pub mod grid;
pub mod harness;
pub mod profile;
pub mod solver;
pub mod translations;

pub use error::{Error, Result};
pub use field::Field;
pub use fracops::{FracConstant, FracGradOperator};
pub use grid::{DiscreteFunction, Grid, Region};
pub use solver::{Problem, ProblemSpec, Solution};
