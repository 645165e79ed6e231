//! Parameter recovery: turns accuracies and observable statistics into
//! marginal tables over every clique and separator of the junction tree.
//!
//! Each source clique's table solves a small linear system whose right-hand
//! side holds event probabilities that are either observable or follow from
//! the recovered accuracies.

mod fit;
mod rhs;
mod transform;

pub use fit::{
    recover_from_moments, recover_parameters, Diagnostics, FitConfig, FittedModel, LabelModel, Recovery,
};
pub use rhs::{assemble_rhs, clique_expectation, CliqueExpectation, PairConditionals, RhsVector};
pub use transform::{build_transform, solve_marginal, SolvedTable, TransformPair};
