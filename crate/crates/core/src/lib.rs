//! Simulation and invariant auditing for a one-dimensional swelling
//! free-boundary problem on `[a, s(t)]`.
//!
//! Two independent solvers integrate the same system:
//!
//! * [`frontfix`] maps the moving interval onto `[0, 1]` and solves the
//!   transformed equation implicitly;
//! * [`oracle`] tracks the front on a remeshed physical grid with explicit
//!   time stepping.
//!
//! [`verify`] audits any [`RunResult`] against the comparison bounds, the
//! front bounds, the integral mass identity and discrete equation residuals.
//! [`harness`] wires everything to the `swellfront` command line tool.

// `!(x > y)` guards are meant to catch NaN; stencil loops index several arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod convergence;
pub mod error;
pub mod frontfix;
pub mod harness;
pub mod landau;
pub mod model;
pub mod oracle;
pub mod result;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    compute_delta, compute_sstar, make_ramp, validate_assumptions, InitialData, InitialProfile,
    ModelParams, MoistureHistory, MoistureKind, ProblemInstance, RampFunction, ValidationReport,
};
pub use result::{Coupling, Forcing, RunResult, SchemeConfig, Snapshot, SolverKind};
