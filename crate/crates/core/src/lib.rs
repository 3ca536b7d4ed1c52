//! Steady-state simulation of a strongly driven cyclic (Δ-type) three-level
//! atom coupled to an open transmission line: master-equation solver,
//! closed-form cross-checks, line observables and figure datasets.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod liouvillian;
pub mod model;
pub mod steady;
pub mod waveguide;

pub use error::{Error, Result};
pub use liouvillian::{build_liouvillian, Liouvillian};
pub use model::{AtomParams, Config, DensityMatrix, DriveConfig, Rabi};
pub use steady::{evolve, solve_steady};
