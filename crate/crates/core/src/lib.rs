//! Causal-model workbench core: data ingestion, structure learning, SEM,
//! LLM prompt batteries and their parsers, chart data, persistence and the
//! service layer behind the HTTP API.

pub mod api;
pub mod charts;
pub mod discover;
pub mod graph;
pub mod hash;
pub mod ids;
pub mod ingest;
pub mod linalg;
pub mod llm;
pub mod prompts;
pub mod sem;
pub mod store;
pub mod synth;

pub use discover::{bic_delta, ges_search, local_bic, SearchResult};
pub use graph::{CausalModel, Edge, ModelTree, Variable};
pub use ids::Id;
pub use ingest::{load_csv, Dataset, Kind};
