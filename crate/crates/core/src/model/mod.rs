//! Shared domain types: votes, dependency structure, junction trees, priors
//! and the label model parameter tables.

mod graph;
mod junction;
mod label_matrix;
mod params;
mod prior;

pub use graph::{validate_graph, DependencyGraph, GraphBuilder, Vertex};
pub use junction::{build_junction_tree, JunctionTree, Separator};
pub use label_matrix::{LabelMatrix, Vote};
pub use params::{arity, code_value, value_code, LabelModelParameters, MarginalTable, SeparatorTable};
pub use prior::{task_value, ClassPrior, MAX_JOINT_TASKS};

pub(crate) use graph::describe;
