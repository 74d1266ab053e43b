//! Quasi-Monte Carlo point sets on the unit sphere `S^d`: generators,
//! worst-case errors in Sobolev spaces, cap discrepancies, energy
//! optimization and the experiment pipeline built on them.

pub mod error;
pub mod experiments;
pub mod harmonic;
pub mod io;
pub mod kernels;
pub mod optimize;
pub mod pointgen;
pub mod quality;
mod pairs;
pub mod rng;
pub mod special;
pub mod sphere;
pub mod sum;

pub use error::{Error, Result};
pub use sphere::{Cap, PointSet};
