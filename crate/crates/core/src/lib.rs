//! Distributed compressive CSIT estimation for FDD multi-user massive MIMO.
//!
//! The library covers the whole simulation pipeline:
//!
//! - [`numeric`]: complex matrix primitives (DFT, least squares, projections).
//! - [`channel`]: joint-sparse angular-domain channel generation.
//! - [`sensing`]: Rademacher pilot design, downlink observation, and the
//!   transformation to the standard compressed-sensing model.
//! - [`recovery`]: the J-OMP joint recovery algorithm and LS/OMP/SOMP/genie
//!   baselines.
//! - [`bounds`]: restricted-isometry estimation and closed-form support
//!   recovery / NMAE bound evaluation.
//! - [`metrics`]: NMSE/NMAE and support-recovery event detection.
//! - [`harness`]: Monte Carlo sweep runner with CSV/JSON output.

pub mod bounds;
pub mod channel;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod numeric;
pub mod recovery;
pub mod rng;
pub mod sensing;

pub use error::{Error, Result};
pub use numeric::{CMat, IndexSet};
