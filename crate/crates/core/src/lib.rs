//! Numerical laboratory for the two-phase Mullins–Sekerka flow written as an
//! evolution of a height function over a reference circle, together with the
//! linear stability analysis of the coupled Stokes/Mullins–Sekerka system
//! around circular equilibria.
//!
//! Module map:
//!
//! * [`refgeom`]: reference circle, height fields, Hanzawa transform and
//!   interface measurements.
//! * [`curvature`]: curvature operator `K(h) = P(h)h + Q(h)` and its
//!   linearization at the reference circle.
//! * [`potential`]: transformed two-phase harmonic problem for the chemical
//!   potential and the jump of its normal derivative.
//! * [`msflow`]: IMEX time integration of the height-function evolution.
//! * [`linstab`]: modal pencils of the linearized coupled system, eigenvalues,
//!   energy identity and semisimplicity of the zero eigenvalue.
//! * [`config`], [`snapshot`], [`commands`]: batch front end used by the
//!   `mslab` binary.

pub mod commands;
pub mod config;
pub mod curvature;
mod error;
pub mod fourier;
pub mod linstab;
pub mod msflow;
pub mod par;
pub mod potential;
pub mod refgeom;
pub mod snapshot;

pub use error::{Error, Result};
pub use par::Exec;
pub use refgeom::{GeometryParams, HeightField, PhysParams};
