//! Closed-form label model for weak supervision.
//!
//! Noisy labeling sources vote `+1`, `-1` or abstain (`0`) on each example.
//! The crate estimates source accuracies from agreement rates alone, turns
//! them into marginal tables of a binary Ising model and fuses votes into
//! probabilistic labels, in batch or over a sliding window.
//!
//! The usual entry point is [`LabelModel`]:
//!
//! ```
//! use weaklabel::oracle::{StarModel, StarSource};
//! use weaklabel::{ClassPrior, DependencyGraph, LabelModel};
//!
//! // simulated votes from three sources of known quality
//! let sources = [0.9, 0.8, 0.7].iter().map(|&c| StarSource { abstain: 0.2, correct: c }).collect();
//! let votes = StarModel::new(0.5, sources).unwrap().sample(5000, 1).labels;
//!
//! let model = LabelModel::new(DependencyGraph::star(3), ClassPrior::balance(0.5).unwrap())
//!     .unwrap()
//!     .fit(&votes)
//!     .unwrap();
//! let labels = model.predict_proba(&votes).unwrap();
//! assert_eq!(labels.n_rows(), 5000);
//! ```

pub mod augment;
pub mod cli;
mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod moments;
pub mod multiclass;
pub mod online;
pub mod oracle;
pub mod recovery;

pub use augment::{augment_graph, augment_matrix, AbstainPolicy, AugmentedGraph, AugmentedLabelMatrix};
pub use error::{Error, ErrorKind, Result};
pub use inference::{joint_probability, posterior, predict_proba, PosteriorLabels};
pub use model::{
    build_junction_tree, validate_graph, ClassPrior, DependencyGraph, JunctionTree, LabelMatrix,
    LabelModelParameters, MarginalTable, Vertex,
};
pub use moments::{estimate_moments, Accuracies, MomentEstimates, SufficientStats};
pub use recovery::{recover_parameters, FitConfig, FittedModel, LabelModel};
