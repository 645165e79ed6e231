//! Brute-force ground truth: exact enumeration of small Ising models,
//! seeded samplers, and the true moments and tables a fit should recover.
//!
//! Nothing here is used by the fitting path; the hidden task values it
//! produces exist for evaluation only.

mod canonical;
mod joint;
mod multiclass;
mod sample;

pub use canonical::CanonicalParameters;
pub use joint::{enumerate_joint, exact_statistics, ExactJoint, ExactStatistics, ObservableJoint, MAX_ENUMERATED_VARS};
pub use multiclass::{ClassSource, ClassStarModel};
pub use sample::{sample, Sample, StarModel, StarSource};
