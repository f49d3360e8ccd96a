//! The seven node metrics, the median sparsity rule, and the registry that
//! fixes their cycle order and prompt labels.
//!
//! Each metric maps every node of an undirected projection to a finite
//! non-negative score. Low scores mark the regions worth asking about; the
//! per-metric orientation switch lets a deployment flip that reading.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph_store::{NodeId, Projection};

mod betweenness;
mod clique;
mod diameter;
mod local;
mod louvain;

pub use louvain::{louvain, LouvainOutcome};

/// Always-sequential kernels, kept public so benchmarks can compare them
/// against the feature-dispatched entry points.
pub mod seq {
    use super::*;

    pub fn clique_score(p: &Projection) -> MetricScores {
        clique::compute_seq(p)
    }

    pub fn betweenness(p: &Projection) -> MetricScores {
        betweenness::compute_seq(p)
    }

    pub fn component_diameter_score(p: &Projection) -> MetricScores {
        diameter::compute_seq(p)
    }
}

// ====== keys and registry ======

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum MetricKey {
    Clique,
    NonClique,
    Clustering,
    Degree,
    Betweenness,
    Diameter,
    Louvain,
}

impl MetricKey {
    /// Cycle order; every run visits metrics in exactly this sequence.
    pub const ALL: [MetricKey; 7] = [
        MetricKey::Clique,
        MetricKey::NonClique,
        MetricKey::Clustering,
        MetricKey::Degree,
        MetricKey::Betweenness,
        MetricKey::Diameter,
        MetricKey::Louvain,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKey::Clique => "Clique",
            MetricKey::NonClique => "NonClique",
            MetricKey::Clustering => "Clustering",
            MetricKey::Degree => "Degree",
            MetricKey::Betweenness => "Betweenness",
            MetricKey::Diameter => "Diameter",
            MetricKey::Louvain => "Louvain",
        }
    }
}

impl std::str::FromStr for MetricKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKey::ALL
            .iter()
            .copied()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown metric key: {s}"))
    }
}

impl std::fmt::Display for MetricKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One registry row: the metric plus the two strings the question-generation
/// prompt leans on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricEntry {
    pub key: MetricKey,
    /// What a low score says about the graph's knowledge.
    pub cognitive_label: &'static str,
    /// Short name for the reading habit the metric probes.
    pub shortcoming: &'static str,
}

/// Fixed-order table of the seven metrics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricRegistry {
    entries: [MetricEntry; 7],
}

impl Default for MetricRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl MetricRegistry {
    pub fn standard() -> Self {
        MetricRegistry {
            entries: [
                MetricEntry {
                    key: MetricKey::Clique,
                    cognitive_label: "Over-confidence in tight clusters",
                    shortcoming: "Deduction; connecting known concepts",
                },
                MetricEntry {
                    key: MetricKey::NonClique,
                    cognitive_label: "Isolated \u{201c}unknown unknowns\u{201d}",
                    shortcoming: "New, unconnected information",
                },
                MetricEntry {
                    key: MetricKey::Clustering,
                    cognitive_label: "Over-specialisation without breadth",
                    shortcoming: "Over-specialization",
                },
                MetricEntry {
                    key: MetricKey::Degree,
                    cognitive_label: "Misleading fluency/popularity cues",
                    shortcoming: "Fluency illusion",
                },
                MetricEntry {
                    key: MetricKey::Betweenness,
                    cognitive_label: "Missing bridges across topics",
                    shortcoming: "Bridging concepts",
                },
                MetricEntry {
                    key: MetricKey::Diameter,
                    cognitive_label: "Fragmented global monitoring",
                    shortcoming: "Global awareness",
                },
                MetricEntry {
                    key: MetricKey::Louvain,
                    cognitive_label: "Poor strategy transfer between modules",
                    shortcoming: "Modular transfer",
                },
            ],
        }
    }

    pub fn entries(&self) -> &[MetricEntry] {
        &self.entries
    }

    pub fn entry(&self, key: MetricKey) -> &MetricEntry {
        self.entries
            .iter()
            .find(|e| e.key == key)
            .expect("registry covers every key")
    }
}

// ====== scores ======

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

/// Per-node scores for one metric run. Iteration order is ascending node id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricScores {
    values: BTreeMap<NodeId, f64>,
}

impl MetricScores {
    pub fn from_indexed(p: &Projection, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), p.node_count());
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                debug_assert!(v.is_finite() && v >= 0.0, "score must be finite and >= 0");
                (p.id(i).clone(), v)
            })
            .collect();
        MetricScores { values }
    }

    pub fn from_map(values: BTreeMap<NodeId, f64>) -> Self {
        MetricScores { values }
    }

    pub fn get(&self, id: &NodeId) -> Option<f64> {
        self.values.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, f64)> {
        self.values.iter().map(|(id, &v)| (id, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Size of the largest maximal clique containing each node (isolates score 1).
pub fn clique_score(p: &Projection) -> MetricScores {
    clique::compute(p)
}

/// 1 for connected nodes, 0 for isolates.
pub fn isolate_indicator(p: &Projection) -> MetricScores {
    local::isolate_indicator(p)
}

/// Local clustering coefficient; nodes of degree < 2 score 0.
pub fn local_clustering(p: &Projection) -> MetricScores {
    local::local_clustering(p)
}

/// Degree divided by (n - 1); a single-node graph scores 0.
pub fn degree_centrality(p: &Projection) -> MetricScores {
    local::degree_centrality(p)
}

/// Unnormalized shortest-path betweenness, endpoints excluded.
pub fn betweenness(p: &Projection) -> MetricScores {
    betweenness::compute(p)
}

/// Hop diameter of each node's connected component (isolates score 0).
pub fn component_diameter_score(p: &Projection) -> MetricScores {
    diameter::compute(p)
}

/// Size of each node's Louvain community.
pub fn louvain_community_size(p: &Projection, seed: u64) -> MetricScores {
    louvain::community_size(p, seed)
}

/// Newman modularity of a partition of the projection's nodes. An edgeless
/// graph scores 0; the partition must cover every node exactly once.
pub fn modularity(p: &Projection, partition: &[Vec<NodeId>]) -> Result<f64, MetricError> {
    louvain::modularity_of(p, partition)
}

/// Dispatches one metric by key. `louvain_seed` only matters for
/// [`MetricKey::Louvain`].
pub fn compute(p: &Projection, key: MetricKey, louvain_seed: u64) -> MetricScores {
    match key {
        MetricKey::Clique => clique_score(p),
        MetricKey::NonClique => isolate_indicator(p),
        MetricKey::Clustering => local_clustering(p),
        MetricKey::Degree => degree_centrality(p),
        MetricKey::Betweenness => betweenness(p),
        MetricKey::Diameter => component_diameter_score(p),
        MetricKey::Louvain => louvain_community_size(p, louvain_seed),
    }
}

// ====== sparsity rule ======

/// Which side of the median a metric flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    #[default]
    Below,
    Above,
}

/// Midpoint of a score sample: the central element for odd lengths, the mean
/// of the two central elements for even lengths.
pub fn median(values: &[f64]) -> Result<f64, MetricError> {
    if values.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

/// One flagged node with its score and a text preview for prompts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseEntry {
    pub id: NodeId,
    pub score: f64,
    pub preview: String,
}

/// Nodes a metric flags as sparse, sorted ascending by `(score, id)` and
/// capped at [`SparseNodeSet::CAP`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseNodeSet {
    pub metric: MetricKey,
    pub entries: Vec<SparseEntry>,
}

impl SparseNodeSet {
    pub const CAP: usize = 50;
    pub const PREVIEW_CHARS: usize = 160;

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

fn preview_of(text: &str) -> String {
    text.chars().take(SparseNodeSet::PREVIEW_CHARS).collect()
}

/// Applies the median rule to one metric's scores.
///
/// `NonClique` flags exactly the zero-scored nodes; every other metric flags
/// scores at or below the median (or at or above it when the orientation is
/// flipped). Errors on an empty score map.
pub fn detect_sparse(
    scores: &MetricScores,
    key: MetricKey,
    p: &Projection,
    orientation: Orientation,
) -> Result<SparseNodeSet, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut entries: Vec<SparseEntry> = if key == MetricKey::NonClique {
        scores
            .iter()
            .filter(|&(_, v)| v == 0.0)
            .map(|(id, v)| to_entry(id, v, p))
            .collect()
    } else {
        let all: Vec<f64> = scores.iter().map(|(_, v)| v).collect();
        let mid = median(&all)?;
        scores
            .iter()
            .filter(|&(_, v)| match orientation {
                Orientation::Below => v <= mid,
                Orientation::Above => v >= mid,
            })
            .map(|(id, v)| to_entry(id, v, p))
            .collect()
    };
    entries.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| a.id.cmp(&b.id))
    });
    entries.truncate(SparseNodeSet::CAP);
    Ok(SparseNodeSet { metric: key, entries })
}

fn to_entry(id: &NodeId, score: f64, p: &Projection) -> SparseEntry {
    let preview = p
        .index_of(id)
        .map(|i| preview_of(p.text(i)))
        .unwrap_or_default();
    SparseEntry {
        id: id.clone(),
        score,
        preview,
    }
}
