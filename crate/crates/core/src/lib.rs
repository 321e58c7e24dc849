//! Decay-rate correction functions for an atom near a spherical aggregate of
//! randomly placed absorbing dielectric spheres, computed through two
//! independent representations (multipole triple sums and radial integrals).

pub mod error;
pub mod quad;
pub mod specfun;
pub mod mie;
pub mod hankint;
pub mod aggregate;
pub mod intrep;
pub mod asympt;
pub mod effmed;
pub mod physics;
pub mod selfcheck;
pub mod cli;

pub use error::{Error, Result};
