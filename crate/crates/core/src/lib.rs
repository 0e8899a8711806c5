//! Lagrangian fluid-dynamics toolkit: a weakly-compressible SPH solver with a
//! seven-case benchmark library, temporally coarse-grained dataset generation,
//! fixed-radius neighbor search, optimal-transport evaluation metrics, and an
//! autoregressive rollout harness for pluggable particle-dynamics predictors.

pub mod cases;
pub mod dataio;
pub mod domain;
pub mod error;
pub mod kernel;
pub mod metrics;
pub mod neighbors;
pub mod rollout;
pub mod sph;
pub mod state;
pub mod validation;

pub use domain::Domain;
pub use error::{Result, SphError};
pub use kernel::QuinticKernel;
pub use state::{ParticleState, ParticleType};
