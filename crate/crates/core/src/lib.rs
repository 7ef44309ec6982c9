//! Exact pathwise solutions of stochastic KdV–Burgers equations driven by
//! space-uniform white noise, with numerical oracles and verification tools.

pub mod coeffs;
pub mod csvio;
pub mod det;
pub mod error;
pub mod field;
pub mod ito;
pub mod paths;
pub mod processes;
pub mod rng;
pub mod scenario;
pub mod spde_exact;
pub mod spde_numeric;
pub mod verify;

pub use coeffs::{CoeffFn, Integrand};
pub use det::{Profile, SpatialGrid, WaveParams};
pub use error::{Error, Result};
pub use field::{FieldTrajectory, Provenance};
pub use paths::{BrownianPath, TimeGrid};
