//! Range-of-motion boundary learning for the human arm.
//!
//! The crate turns motion-capture skeleton frames into joint angles, fits a
//! one-class SVM whose decision function `Γ(q)` is positive inside the
//! feasible range of motion and negative outside, tunes `(ν, σ)` with a
//! constrained grid search, and derives area-based impairment metrics.
//!
//! - [`kinematics`]: quaternions, ZXY Euler extraction, kinematic chain
//! - [`dataset`]: CSV ingestion, dataset assembly, subsampling, synthetic shapes
//! - [`ocsvm`]: RBF one-class SVM training (SMO), `Γ`, `∇Γ`, model files
//! - [`tuning`]: test inclusion, edge-SV overfit check, negative samples, grid search
//! - [`metrics`]: pair areas, weighted volume, impairment index
//! - [`cli`]: the `rom-boundary` command line front end

pub mod cli;
pub mod dataset;
mod error;
pub mod kinematics;
pub mod metrics;
pub mod ocsvm;
pub mod tuning;

pub use error::{Error, Result};
pub use kinematics::JointVector;
