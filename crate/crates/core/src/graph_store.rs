//! Labelled knowledge graph with content-addressed nodes and JSONL
//! persistence.
//!
//! Node ids are derived from `(kind, text)`, so re-adding the same content
//! is a no-op and a cleared-then-reseeded graph regenerates identical ids.
//! Records persist one JSON object per line in insertion order, which makes
//! round-trips bit-exact.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::metrics::MetricKey;

/// Stable identifier for a graph node.
///
/// Rendered as hex; derived from the node content, with an insertion-ordinal
/// suffix only if two distinct contents ever hash alike.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Chunk,
    Entity,
}

/// Which phase of a run introduced a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Seed,
    Enrichment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub text: String,
    pub stage: Stage,
    #[serde(default)]
    pub metric_origin: Option<MetricKey>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeLabel {
    Mentions,
    CoOccurs,
    RelatedThrough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub label: EdgeLabel,
    pub provenance: String,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("node text must be non-empty")]
    EmptyText,
    #[error("unknown node: {0}")]
    UnknownNode(NodeId),
    #[error("self-loops are rejected: {0}")]
    SelfLoop(NodeId),
    #[error("malformed graph input: {0}")]
    MalformedInput(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Record {
    Node(Node),
    Edge(Edge),
}

/// Directed labelled multigraph (at most one edge per `(src, dst, label)`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    by_id: HashMap<NodeId, usize>,
    edge_keys: HashSet<(NodeId, NodeId, EdgeLabel)>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Nodes in insertion order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.by_id.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.by_id.contains_key(id)
    }

    /// Drops every node and edge.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.edges.clear();
        self.by_id.clear();
        self.edge_keys.clear();
    }

    fn content_id(kind: NodeKind, text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update([match kind {
            NodeKind::Chunk => 0u8,
            NodeKind::Entity => 1u8,
        }]);
        hasher.update([0x1f]);
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        hex::encode(&digest[..16])
    }

    /// Adds a node, or returns the existing id when the same `(kind, text)`
    /// is already present. Ids never depend on wall clock.
    pub fn add_node(
        &mut self,
        kind: NodeKind,
        text: impl Into<String>,
        stage: Stage,
        metric_origin: Option<MetricKey>,
    ) -> Result<NodeId, GraphError> {
        let text = text.into();
        if text.is_empty() {
            return Err(GraphError::EmptyText);
        }
        let base = Self::content_id(kind, &text);
        let mut candidate = NodeId(base.clone());
        let mut ordinal = 0usize;
        loop {
            match self.by_id.get(&candidate) {
                Some(&i) if self.nodes[i].kind == kind && self.nodes[i].text == text => {
                    return Ok(candidate);
                }
                Some(_) => {
                    ordinal += 1;
                    candidate = NodeId(format!("{base}-{ordinal}"));
                }
                None => break,
            }
        }
        self.by_id.insert(candidate.clone(), self.nodes.len());
        self.nodes.push(Node {
            id: candidate.clone(),
            kind,
            text,
            stage,
            metric_origin,
        });
        self.debug_check();
        Ok(candidate)
    }

    /// Adds an edge; returns `false` when the `(src, dst, label)` triple
    /// already exists.
    pub fn add_edge(
        &mut self,
        src: &NodeId,
        dst: &NodeId,
        label: EdgeLabel,
        provenance: impl Into<String>,
    ) -> Result<bool, GraphError> {
        if !self.contains(src) {
            return Err(GraphError::UnknownNode(src.clone()));
        }
        if !self.contains(dst) {
            return Err(GraphError::UnknownNode(dst.clone()));
        }
        if src == dst {
            return Err(GraphError::SelfLoop(src.clone()));
        }
        let key = (src.clone(), dst.clone(), label);
        if self.edge_keys.contains(&key) {
            return Ok(false);
        }
        self.edge_keys.insert(key);
        self.edges.push(Edge {
            src: src.clone(),
            dst: dst.clone(),
            label,
            provenance: provenance.into(),
        });
        self.debug_check();
        Ok(true)
    }

    /// Simple undirected view: labels and directions dropped, parallel edges
    /// merged, isolates kept.
    pub fn undirected_projection(&self) -> Projection {
        let mut ids: Vec<NodeId> = self.nodes.iter().map(|n| n.id.clone()).collect();
        ids.sort();
        let index: BTreeMap<&NodeId, usize> =
            ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut neighbor_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ids.len()];
        for e in &self.edges {
            let a = index[&e.src];
            let b = index[&e.dst];
            if a != b {
                neighbor_sets[a].insert(b);
                neighbor_sets[b].insert(a);
            }
        }
        let texts = ids
            .iter()
            .map(|id| self.node(id).expect("projection id").text.clone())
            .collect();
        Projection {
            ids,
            texts,
            adj: neighbor_sets
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
        }
    }

    /// Serializes node records then edge records, one JSON object per line,
    /// in insertion order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&serde_json::to_string(n).expect("node serializes"));
            out.push('\n');
        }
        for e in &self.edges {
            out.push_str(&serde_json::to_string(e).expect("edge serializes"));
            out.push('\n');
        }
        out
    }

    /// Rebuilds a graph from [`Self::to_jsonl`] output. Rejects records that
    /// parse as neither node nor edge, duplicate ids, and dangling edges.
    pub fn from_jsonl(input: &str) -> Result<Self, GraphError> {
        let mut graph = Self::new();
        for (lineno, line) in input.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(line).map_err(|e| {
                GraphError::MalformedInput(format!("line {}: {e}", lineno + 1))
            })?;
            match record {
                Record::Node(node) => {
                    if node.text.is_empty() {
                        return Err(GraphError::MalformedInput(format!(
                            "line {}: empty node text",
                            lineno + 1
                        )));
                    }
                    if graph.by_id.contains_key(&node.id) {
                        return Err(GraphError::MalformedInput(format!(
                            "line {}: duplicate node id {}",
                            lineno + 1,
                            node.id
                        )));
                    }
                    graph.by_id.insert(node.id.clone(), graph.nodes.len());
                    graph.nodes.push(node);
                }
                Record::Edge(edge) => {
                    if !graph.contains(&edge.src) || !graph.contains(&edge.dst) {
                        return Err(GraphError::MalformedInput(format!(
                            "line {}: edge references unknown node",
                            lineno + 1
                        )));
                    }
                    if edge.src == edge.dst {
                        return Err(GraphError::MalformedInput(format!(
                            "line {}: self-loop",
                            lineno + 1
                        )));
                    }
                    graph
                        .edge_keys
                        .insert((edge.src.clone(), edge.dst.clone(), edge.label));
                    graph.edges.push(edge);
                }
            }
        }
        graph.debug_check();
        Ok(graph)
    }

    fn debug_check(&self) {
        #[cfg(debug_assertions)]
        {
            for e in &self.edges {
                debug_assert!(self.contains(&e.src), "dangling edge src");
                debug_assert!(self.contains(&e.dst), "dangling edge dst");
                debug_assert!(e.src != e.dst, "self-loop");
            }
            debug_assert_eq!(self.by_id.len(), self.nodes.len());
            debug_assert_eq!(self.edge_keys.len(), self.edges.len());
        }
    }
}

/// Index-addressed undirected adjacency snapshot used by the metric kernels.
///
/// Node order is ascending id, so index positions are stable for a given
/// graph content.
#[derive(Debug, Clone)]
pub struct Projection {
    ids: Vec<NodeId>,
    texts: Vec<String>,
    adj: Vec<Vec<usize>>,
}

impl Projection {
    /// Builds a projection straight from id/edge lists; handy in tests.
    pub fn from_parts(ids: Vec<NodeId>, texts: Vec<String>, edges: &[(usize, usize)]) -> Self {
        assert_eq!(ids.len(), texts.len());
        let mut neighbor_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ids.len()];
        for &(a, b) in edges {
            if a != b {
                neighbor_sets[a].insert(b);
                neighbor_sets[b].insert(a);
            }
        }
        Projection {
            ids,
            texts,
            adj: neighbor_sets
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn id(&self, i: usize) -> &NodeId {
        &self.ids[i]
    }

    pub fn text(&self, i: usize) -> &str {
        &self.texts[i]
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.ids.binary_search(id).ok()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Connected components, each sorted ascending, ordered by smallest
    /// member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut queue = std::collections::VecDeque::from([start]);
            seen[start] = true;
            let mut comp = vec![start];
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}
