//! Knowledge-graph enrichment driven by structural sparsity metrics.
//!
//! The pipeline answers a question, builds a small knowledge graph from
//! retrieved text, scores every node with seven graph metrics, flags the
//! sparse regions each metric exposes, asks targeted follow-up questions,
//! ingests what the searches return, and then measures whether the final
//! answer improved.
//!
//! Modules mirror the moving parts:
//!
//! - [`graph_store`]: the labelled knowledge graph and its JSONL persistence
//! - [`metrics`]: the seven node metrics, the median sparsity rule, and the
//!   metric registry
//! - [`providers`]: chat / search / embedding backends, offline and live
//! - [`ingest`]: chunking, entity extraction, and the vector index
//! - [`qa`]: question generation, answering, and verdict judging
//! - [`pipeline`]: the per-query enrichment loop and run-level reports
//! - [`config`] and [`cli`]: TOML configuration and the command-line surface
//!
//! With the default `parallel` feature the heavy metric kernels run on
//! rayon; `metrics::seq` always exposes the sequential versions, and both
//! produce identical scores for identical inputs.

pub mod cli;
pub mod config;
pub mod graph_store;
pub mod ingest;
pub mod metrics;
mod par;
pub mod pipeline;
pub mod providers;
pub mod qa;
mod textutil;

pub use graph_store::{Edge, EdgeLabel, KnowledgeGraph, Node, NodeId, NodeKind, Stage};
pub use metrics::{MetricKey, MetricRegistry, MetricScores, SparseNodeSet};
pub use pipeline::{QueryRunRecord, RunReport};
