//! Observable moments and closed-form accuracy recovery.
//!
//! For observed variables that are conditionally independent given their
//! task, `E[v_i v_j] = a_i a_j`, so any three of them pin down `|a_i|` from
//! agreement rates alone. Signs come from a sign assumption or anchors.

mod accuracy;
mod stats;
mod triplets;

pub use accuracy::{
    conditional_accuracy, estimate_accuracies, ratio_accuracy, resolve_signs, Accuracies, AccuracyConfig,
    AccuracyOrigin, AccuracyReport, SignStrategy,
};
pub use stats::{estimate_moments, ConditionedMoments, ConditionedSums, MomentEstimates, StatsLayout, SufficientStats};
pub use triplets::{
    aggregate, combine, enumerate_triplets, solve_triplet, try_solve_triplet, Aggregation, Magnitudes, Tolerances,
    TripletMode, TripletPlan,
};
