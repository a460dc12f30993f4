//! Score-based structure learning.
//!
//! Local scores are Gaussian BIC on the standardized data. The search is a
//! greedy insert-then-delete hill climb over DAGs, followed by deletions
//! evaluated over the whole equivalence class, and reports its result as a
//! CPDAG. [`bic_delta`] previews the score impact of a user edit.

mod cpdag;
mod delta;
mod score;
mod search;

pub use cpdag::{dag_to_cpdag, Pdag};
pub use delta::{apply_edit, bic_delta, bic_delta_cached, total_bic, total_bic_cached, BicDelta, Edit, NodeDelta};
pub use score::{local_bic, ScoreCache};
pub use search::{ges_search, search_indices, Move, RawSearch, SearchResult, TraceStep};

use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum DiscoverError {
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("'{0}' cannot be its own parent")]
    SelfParent(String),
    #[error("'{node}' has {parents} parents but only {n} rows; need more rows than parents + 1")]
    TooManyParents { node: String, parents: usize, n: usize },
    #[error("singular design regressing '{node}' on {{{}}}: parents are collinear", .parents.join(", "))]
    Singular { node: String, parents: Vec<String> },
    #[error("inconsistent constraints: {0}")]
    InconsistentConstraints(String),
    #[error("no data for '{0}': it is hypothesized or has no dataset column")]
    NoData(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
