//! Choreographies of the n-body problem on surfaces of constant negative
//! curvature.
//!
//! The shared orbit is a trigonometric polynomial on the Poincaré disk of
//! radius `R`. Choreographies are found by minimizing the hyperbolic action
//! (BFGS, then Newton with the exact Hessian) and checked against the
//! equations of motion projected onto the disk.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, timing and the
//! command-line front end live in the `hyperchoreo-cli` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod action;
pub mod continuation;
mod error;
pub mod geometry;
pub mod linalg;
pub mod optimizer;
pub mod trigpath;
pub mod verify;

pub use action::{ActionEvaluation, ActionFunctional, Configuration, Curvature};
pub use error::{ChoreoError, Result};
pub use geometry::{CurvatureRadius, DiskPoint, HyperboloidPoint};
pub use optimizer::{Choreography, Phase1Options, Phase2Options};
pub use trigpath::{NodeValues, TrigPath};
pub use verify::{PhaseReport, SolveReport};

pub(crate) const TWO_PI: f64 = 2.0 * core::f64::consts::PI;
