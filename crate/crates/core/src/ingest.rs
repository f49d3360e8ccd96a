//! Document ingestion: chunking, entity extraction, graph wiring, and the
//! brute-force vector index.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph_store::{EdgeLabel, GraphError, KnowledgeGraph, NodeId, NodeKind, Stage};
use crate::metrics::MetricKey;
use crate::providers::{ProviderError, ProviderGateway};
use crate::textutil;

/// Fixed chunk span in Unicode scalar values.
pub const CHUNK_CHARS: usize = 500;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Embed(#[from] ProviderError),
}

/// Splits text into consecutive spans of exactly [`CHUNK_CHARS`] characters
/// (the last may be shorter). Concatenating the chunks reconstructs the
/// input; empty input yields no chunks.
pub fn chunk_text(text: &str) -> Vec<String> {
    let mut chunks = Vec::new();
    let mut start = 0usize;
    let mut count = 0usize;
    for (pos, _) in text.char_indices() {
        if count == CHUNK_CHARS {
            chunks.push(text[start..pos].to_string());
            start = pos;
            count = 0;
        }
        count += 1;
    }
    if start < text.len() {
        chunks.push(text[start..].to_string());
    }
    chunks
}

const JOINERS: [&str; 3] = ["of", "the", "and"];

/// Maximal runs of capitalized words, optionally joined by "of"/"the"/"and",
/// deduplicated case-sensitively in first-occurrence order.
pub fn extract_entities(text: &str) -> Vec<String> {
    let mut entities: Vec<String> = Vec::new();
    let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut run: Vec<String> = Vec::new();
    let mut pending_joiner: Option<String> = None;

    let mut close = |run: &mut Vec<String>, pending: &mut Option<String>| {
        if !run.is_empty() {
            let entity = run.join(" ");
            if seen.insert(entity.clone()) {
                entities.push(entity);
            }
            run.clear();
        }
        *pending = None;
    };

    for raw in text.split_whitespace() {
        let core = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if core.is_empty() {
            close(&mut run, &mut pending_joiner);
            continue;
        }
        let leading_punct = raw.chars().next().map(|c| !c.is_alphanumeric()) == Some(true);
        let trailing_punct = raw.chars().last().map(|c| !c.is_alphanumeric()) == Some(true);
        let capitalized = core.chars().next().map(char::is_uppercase) == Some(true);

        if leading_punct {
            close(&mut run, &mut pending_joiner);
        }
        if capitalized {
            if let Some(joiner) = pending_joiner.take() {
                run.push(joiner);
            }
            run.push(core.to_string());
            if trailing_punct {
                close(&mut run, &mut pending_joiner);
            }
        } else if !run.is_empty()
            && pending_joiner.is_none()
            && JOINERS.contains(&core)
            && !trailing_punct
        {
            pending_joiner = Some(core.to_string());
        } else {
            close(&mut run, &mut pending_joiner);
        }
    }
    close(&mut run, &mut pending_joiner);
    entities
}

/// One document to ingest with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentItem {
    pub text: String,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestCounts {
    pub chunks_added: usize,
    pub entities_added: usize,
    pub edges_added: usize,
}

impl IngestCounts {
    pub fn nodes_added(&self) -> usize {
        self.chunks_added + self.entities_added
    }
}

/// Chunks each document, wires `Mentions` and `CoOccurs` edges, and indexes
/// every new chunk. Idempotent: re-ingesting identical content adds nothing.
/// An embedder failure aborts the batch without rolling back earlier items.
pub fn ingest_documents(
    graph: &mut KnowledgeGraph,
    index: &mut VectorIndex,
    gateway: &mut dyn ProviderGateway,
    items: &[DocumentItem],
    stage: Stage,
    metric_origin: Option<MetricKey>,
) -> Result<IngestCounts, IngestError> {
    let mut counts = IngestCounts::default();
    for item in items {
        for chunk in chunk_text(&item.text) {
            let before = graph.node_count();
            let chunk_id = graph.add_node(NodeKind::Chunk, chunk.clone(), stage, metric_origin)?;
            if graph.node_count() > before {
                counts.chunks_added += 1;
            }
            if !index.contains(&chunk_id) {
                let vector = gateway.embed(&chunk)?;
                index.insert(chunk_id.clone(), vector);
            }
            let mut entity_ids: Vec<NodeId> = Vec::new();
            for entity in extract_entities(&chunk) {
                let before = graph.node_count();
                let eid = graph.add_node(NodeKind::Entity, entity, stage, metric_origin)?;
                if graph.node_count() > before {
                    counts.entities_added += 1;
                }
                if graph.add_edge(&chunk_id, &eid, EdgeLabel::Mentions, &item.provenance)? {
                    counts.edges_added += 1;
                }
                entity_ids.push(eid);
            }
            for i in 0..entity_ids.len() {
                for j in i + 1..entity_ids.len() {
                    let (a, b) = if entity_ids[i] <= entity_ids[j] {
                        (&entity_ids[i], &entity_ids[j])
                    } else {
                        (&entity_ids[j], &entity_ids[i])
                    };
                    if graph.add_edge(a, b, EdgeLabel::CoOccurs, &item.provenance)? {
                        counts.edges_added += 1;
                    }
                }
            }
        }
    }
    Ok(counts)
}

// ====== vector index ======

#[derive(Debug, Serialize, Deserialize)]
struct IndexRecord {
    node: NodeId,
    vector: Vec<f64>,
}

/// Cosine similarity; zero vectors score 0 against everything.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Exact brute-force nearest-chunk index keyed by node id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorIndex {
    entries: BTreeMap<NodeId, Vec<f64>>,
}

impl VectorIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.entries.contains_key(id)
    }

    pub fn insert(&mut self, id: NodeId, vector: Vec<f64>) {
        self.entries.insert(id, vector);
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Exact top-k by cosine, scored against every entry; ties break on
    /// ascending node id.
    pub fn top_k(&self, query: &[f64], k: usize) -> Vec<(NodeId, f64)> {
        let mut scored: Vec<(NodeId, f64)> = self
            .entries
            .iter()
            .map(|(id, v)| (id.clone(), cosine(query, v)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
    }

    /// One JSONL record per entry, ascending node id.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (node, vector) in &self.entries {
            let record = IndexRecord {
                node: node.clone(),
                vector: vector.clone(),
            };
            out.push_str(&serde_json::to_string(&record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(input: &str) -> Result<Self, String> {
        let mut index = VectorIndex::new();
        for (lineno, line) in input.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: IndexRecord = serde_json::from_str(line)
                .map_err(|e| format!("index line {}: {e}", lineno + 1))?;
            index.insert(record.node, record.vector);
        }
        Ok(index)
    }
}

/// Token sets shared between a question and document text; used to pick
/// fixture search hits and exposed for diagnostics.
pub fn overlap_score(query: &str, text: &str) -> usize {
    textutil::token_overlap(query, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{PlainGateway, ProviderSet};
    use crate::config::{Config, ProviderMode};

    #[test]
    fn chunking_is_exact_spans_with_short_tail() {
        let text = "a".repeat(1200);
        let chunks = chunk_text(&text);
        let lens: Vec<usize> = chunks.iter().map(|c| c.chars().count()).collect();
        assert_eq!(lens, vec![500, 500, 200]);
        assert_eq!(chunks.concat(), text);
    }

    #[test]
    fn chunking_respects_code_points() {
        let text = "é".repeat(501);
        let chunks = chunk_text(&text);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].chars().count(), 500);
        assert_eq!(chunks[1].chars().count(), 1);
        assert_eq!(chunks.concat(), text);
    }

    #[test]
    fn empty_input_yields_no_chunks() {
        assert!(chunk_text("").is_empty());
    }

    #[test]
    fn entity_extraction_examples() {
        assert_eq!(
            extract_entities("Alice is friends with Bob"),
            vec!["Alice", "Bob"]
        );
        assert_eq!(extract_entities("the quick brown fox"), Vec::<String>::new());
        assert_eq!(
            extract_entities("The Tuskegee Airmen trained at Moton Field."),
            vec!["The Tuskegee Airmen", "Moton Field"]
        );
        assert_eq!(
            extract_entities("University of Toronto sits in Toronto"),
            vec!["University of Toronto", "Toronto"]
        );
    }

    #[test]
    fn entity_runs_join_across_listed_joiners_only() {
        assert_eq!(extract_entities("Alice and Bob"), vec!["Alice and Bob"]);
        assert_eq!(extract_entities("Alice with Bob"), vec!["Alice", "Bob"]);
        // punctuation ends a run even before a joiner
        assert_eq!(extract_entities("Alice, and Bob"), vec!["Alice", "Bob"]);
    }

    #[test]
    fn entity_dedup_is_case_sensitive_first_occurrence() {
        assert_eq!(
            extract_entities("Paris then Paris then PARIS"),
            vec!["Paris", "PARIS"]
        );
    }

    fn offline_set() -> ProviderSet {
        let mut config = Config::parse("").unwrap();
        config.providers.mode = ProviderMode::Offline;
        ProviderSet::from_config(&config).unwrap()
    }

    #[test]
    fn ingest_wires_mentions_and_cooccurs_and_indexes_chunks() {
        let set = offline_set();
        let mut gateway = PlainGateway { set: &set };
        let mut graph = KnowledgeGraph::new();
        let mut index = VectorIndex::new();
        let items = vec![DocumentItem {
            text: "Alice is friends with Bob".to_string(),
            provenance: "seed".to_string(),
        }];
        let counts = ingest_documents(
            &mut graph,
            &mut index,
            &mut gateway,
            &items,
            Stage::Seed,
            None,
        )
        .unwrap();
        assert_eq!(counts.chunks_added, 1);
        assert_eq!(counts.entities_added, 2);
        // two Mentions plus one CoOccurs
        assert_eq!(counts.edges_added, 3);
        assert_eq!(index.len(), 1);
        assert_eq!(graph.node_count(), 3);
    }

    #[test]
    fn reingesting_the_same_document_adds_nothing() {
        let set = offline_set();
        let mut gateway = PlainGateway { set: &set };
        let mut graph = KnowledgeGraph::new();
        let mut index = VectorIndex::new();
        let items = vec![DocumentItem {
            text: "Alice is friends with Bob".to_string(),
            provenance: "seed".to_string(),
        }];
        ingest_documents(&mut graph, &mut index, &mut gateway, &items, Stage::Seed, None)
            .unwrap();
        let before_nodes = graph.node_count();
        let before_edges = graph.edge_count();
        let counts = ingest_documents(
            &mut graph,
            &mut index,
            &mut gateway,
            &items,
            Stage::Enrichment,
            Some(MetricKey::Clique),
        )
        .unwrap();
        assert_eq!(counts, IngestCounts::default());
        assert_eq!(graph.node_count(), before_nodes);
        assert_eq!(graph.edge_count(), before_edges);
    }

    #[test]
    fn top_k_orders_by_score_then_id() {
        let mut index = VectorIndex::new();
        index.insert(NodeId::from("b"), vec![1.0, 0.0]);
        index.insert(NodeId::from("a"), vec![1.0, 0.0]);
        index.insert(NodeId::from("c"), vec![0.0, 1.0]);
        let hits = index.top_k(&[1.0, 0.0], 2);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].0, NodeId::from("a"));
        assert_eq!(hits[1].0, NodeId::from("b"));
        assert!((hits[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_query_vector_scores_zero_everywhere() {
        let mut index = VectorIndex::new();
        index.insert(NodeId::from("a"), vec![1.0, 0.0]);
        let hits = index.top_k(&[0.0, 0.0], 1);
        assert_eq!(hits[0].1, 0.0);
    }

    #[test]
    fn index_round_trips_bit_exactly() {
        let mut index = VectorIndex::new();
        index.insert(NodeId::from("a"), vec![0.1, 0.2, 0.30000000000000004]);
        index.insert(NodeId::from("b"), vec![1.0 / 3.0]);
        let first = index.to_jsonl();
        let loaded = VectorIndex::from_jsonl(&first).unwrap();
        assert_eq!(loaded, index);
        assert_eq!(loaded.to_jsonl(), first);
    }
}
