//! Age-dependent random Hawkes processes (ADRHP), their mean-field limit and
//! the age-structured PPS system.
//!
//! The crate is organized the way a coupling experiment flows:
//!
//! - [`model`]: kernels, random-kernel laws, intensity maps, initial and past laws;
//! - [`thinning`]: reproducible Poisson grain streams and the thinning sampler;
//! - [`particle`]: exact simulation of the n-particle system;
//! - [`pde`]: the PPS system along characteristics;
//! - [`limit`]: the limit mean intensity and limit-process sampler;
//! - [`analysis`]: coupled runs, distances, rate fits and bounds;
//! - [`config`]: config files and the assumption report.

pub mod analysis;
pub mod config;
pub mod error;
pub mod limit;
pub mod model;
pub mod numeric;
pub mod particle;
pub mod pde;
pub mod rng;
pub mod stats;
pub mod thinning;

pub use error::{Error, Result};
