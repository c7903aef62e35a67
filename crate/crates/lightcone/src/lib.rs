//! Lightcone differential geometry of world sheets in Lorentz-Minkowski space.
//!
//! A *world sheet* is a one-parameter family of spacelike submanifolds
//! `X(u, t)` sweeping out a timelike manifold in `R^{n+1}_1`. This crate
//! evaluates such families from symbolic coordinate expressions and computes
//! the associated lightcone geometry:
//!
//! * the future-directed timelike normal and a pseudo-orthonormal frame of
//!   the momentary normal bundle ([`frame`]),
//! * lightcone Gauss maps, second fundamental forms, principal and
//!   Lipschitz-Killing curvatures ([`curvature`]),
//! * the family of Lorentzian height functions and its extended version,
//!   together with the Morse-family rank certificate ([`height`]),
//! * lightcone pedal maps, big wave fronts and their singular loci
//!   ([`front`]).
//!
//! Numerical work is done in plain `f64`. Every analytic formula exposed
//! here is cross-checked in the test suite against an independent oracle
//! (finite differences, brute-force determinants, or hand-derived closed
//! forms on the built-in fixtures).

// Indexed loops are kept wherever they mirror tensor index notation.
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod frame;
pub mod front;
pub mod height;
pub mod jet;
pub mod minkowski;
pub mod run;
pub mod worldsheet;

pub use error::{Error, Result};
