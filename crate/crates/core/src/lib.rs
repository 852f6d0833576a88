//! Solvers for fractional and parametric optimization problems built around
//! a common concave root-finding engine.
//!
//! The engine ([`newton`]) performs damped Newton iteration with a geometric
//! look-ahead step on concave functions presented through value/supergradient
//! oracles, and every solver records an audit trace whose convergence
//! invariants can be re-checked independently ([`newton::verify_trace`]).
//!
//! On top of it sit four problem families:
//!
//! * [`fraccomb`] — minimum-ratio optimization over finite 0/1 domains,
//! * [`m2vpi`] — feasibility of monotone two-variable-per-inequality systems
//!   (and general two-variable systems via a reduction), modeled as gain
//!   graphs ([`gaingraph`], [`grapevine`]),
//! * [`dmdp`] — total-reward optimality for deterministic Markov decision
//!   processes with discount factors up to one,
//! * [`sfm`] — the parametric line search used in submodular function
//!   minimization decompositions.
//!
//! Everything runs in one of two arithmetic modes ([`numerics`]): exact
//! arbitrary-precision rationals or tolerance-governed doubles. The [`fm`]
//! module provides an independent elimination-based feasibility oracle used
//! to cross-check the graph solvers, and [`generate`] produces seeded random
//! instances for differential testing.

pub mod dmdp;
pub mod fm;
pub mod fraccomb;
pub mod gaingraph;
pub mod generate;
pub mod grapevine;
pub mod m2vpi;
pub mod numerics;
pub mod newton;
pub mod sfm;

pub use numerics::{ArithMode, ExtScalar, Scalar, Sign, Tolerance};
pub use newton::{
    solve_root, ConcaveOracle, Method, NewtonConfig, NewtonError, NewtonOutcome, NewtonResult,
    OracleReply, TraceRecord,
};
