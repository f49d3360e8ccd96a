//! Louvain community detection at resolution 1.0, plus the modularity
//! functional it optimizes.
//!
//! Determinism contract: node visit order is ascending id permuted by a
//! ChaCha shuffle of the caller's seed, equal-gain moves resolve to the
//! lowest community id, and aggregation renumbers communities in ascending
//! order of their old ids. Identical `(projection, seed)` always yields the
//! identical partition.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph_store::{NodeId, Projection};

use super::{MetricError, MetricScores};

/// Final partition with its modularity and the per-level modularity trail
/// (one entry per completed local-moving pass).
#[derive(Debug, Clone, PartialEq)]
pub struct LouvainOutcome {
    /// Blocks sorted by smallest member id; members ascending.
    pub partition: Vec<Vec<NodeId>>,
    pub modularity: f64,
    pub level_modularity: Vec<f64>,
}

/// Weighted undirected graph used across aggregation levels. Self-loop
/// weight counts once toward the total and twice toward a degree.
struct WGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_w: Vec<f64>,
    degree: Vec<f64>,
    total: f64,
}

impl WGraph {
    fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn from_projection(p: &Projection) -> Self {
        let n = p.node_count();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|v| p.neighbors(v).iter().map(|&w| (w, 1.0)).collect())
            .collect();
        let self_w = vec![0.0; n];
        let degree: Vec<f64> = adj.iter().map(|nb| nb.len() as f64).collect();
        let total = p.edge_count() as f64;
        WGraph {
            adj,
            self_w,
            degree,
            total,
        }
    }
}

/// One local-moving phase. Returns the dense community assignment and
/// whether any node moved.
fn local_move(g: &WGraph, order: &[usize]) -> (Vec<usize>, bool) {
    let n = g.node_count();
    let mut node_comm: Vec<usize> = (0..n).collect();
    let mut comm_tot: Vec<f64> = g.degree.clone();
    let mut moved_any = false;
    loop {
        let mut moved_this_sweep = false;
        for &v in order {
            let old = node_comm[v];
            comm_tot[old] -= g.degree[v];
            // Links from v to each adjacent community; the old community is
            // always a candidate so staying is an option.
            let mut k_in: std::collections::BTreeMap<usize, f64> =
                std::collections::BTreeMap::new();
            k_in.insert(old, 0.0);
            for &(w, wt) in &g.adj[v] {
                *k_in.entry(node_comm[w]).or_insert(0.0) += wt;
            }
            let mut best_comm = old;
            let mut best_gain = f64::NEG_INFINITY;
            for (&c, &k) in &k_in {
                let gain = k - comm_tot[c] * g.degree[v] / (2.0 * g.total);
                if gain > best_gain {
                    best_gain = gain;
                    best_comm = c;
                }
            }
            node_comm[v] = best_comm;
            comm_tot[best_comm] += g.degree[v];
            if best_comm != old {
                moved_this_sweep = true;
                moved_any = true;
            }
        }
        if !moved_this_sweep {
            break;
        }
    }
    (node_comm, moved_any)
}

/// Renumbers community labels densely, preserving ascending label order.
fn renumber(node_comm: &[usize]) -> (Vec<usize>, usize) {
    let mut used: Vec<usize> = node_comm.to_vec();
    used.sort_unstable();
    used.dedup();
    let lookup: HashMap<usize, usize> =
        used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    (node_comm.iter().map(|c| lookup[c]).collect(), used.len())
}

/// Collapses communities into super-nodes, merging edge weights.
fn aggregate(g: &WGraph, dense: &[usize], k: usize) -> WGraph {
    let mut self_w = vec![0.0f64; k];
    let mut between: Vec<HashMap<usize, f64>> = vec![HashMap::new(); k];
    for v in 0..g.node_count() {
        let cv = dense[v];
        self_w[cv] += g.self_w[v];
        for &(w, wt) in &g.adj[v] {
            if w < v {
                continue;
            }
            let cw = dense[w];
            if cv == cw {
                self_w[cv] += wt;
            } else {
                *between[cv].entry(cw).or_insert(0.0) += wt;
                *between[cw].entry(cv).or_insert(0.0) += wt;
            }
        }
    }
    let adj: Vec<Vec<(usize, f64)>> = between
        .into_iter()
        .map(|m| {
            let mut pairs: Vec<(usize, f64)> = m.into_iter().collect();
            pairs.sort_by_key(|&(c, _)| c);
            pairs
        })
        .collect();
    let degree: Vec<f64> = (0..k)
        .map(|c| adj[c].iter().map(|&(_, wt)| wt).sum::<f64>() + 2.0 * self_w[c])
        .collect();
    let total = self_w.iter().sum::<f64>()
        + adj
            .iter()
            .flat_map(|nb| nb.iter().map(|&(_, wt)| wt))
            .sum::<f64>()
            / 2.0;
    WGraph {
        adj,
        self_w,
        degree,
        total,
    }
}

fn blocks_from_membership(p: &Projection, membership: &[usize], k: usize) -> Vec<Vec<NodeId>> {
    let mut blocks: Vec<Vec<NodeId>> = vec![Vec::new(); k];
    for v in 0..p.node_count() {
        blocks[membership[v]].push(p.id(v).clone());
    }
    for b in &mut blocks {
        b.sort();
    }
    blocks.retain(|b| !b.is_empty());
    blocks.sort_by(|a, b| a[0].cmp(&b[0]));
    blocks
}

/// Full Louvain run.
pub fn louvain(p: &Projection, seed: u64) -> LouvainOutcome {
    let n = p.node_count();
    if n == 0 {
        return LouvainOutcome {
            partition: Vec::new(),
            modularity: 0.0,
            level_modularity: Vec::new(),
        };
    }
    let mut membership: Vec<usize> = (0..n).collect();
    let base = WGraph::from_projection(p);
    if base.total <= 0.0 {
        // Edgeless: every node is its own community, modularity 0 by rule.
        let partition = blocks_from_membership(p, &membership, n);
        return LouvainOutcome {
            partition,
            modularity: 0.0,
            level_modularity: Vec::new(),
        };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = base;
    let mut level_modularity = Vec::new();
    loop {
        let mut order: Vec<usize> = (0..g.node_count()).collect();
        order.shuffle(&mut rng);
        let (node_comm, moved) = local_move(&g, &order);
        if !moved {
            break;
        }
        let (dense, k) = renumber(&node_comm);
        membership = membership.iter().map(|&c| dense[c]).collect();
        let blocks = blocks_from_membership(p, &membership, k);
        level_modularity
            .push(modularity_of(p, &blocks).expect("induced partition is a cover"));
        if k == g.node_count() {
            break;
        }
        g = aggregate(&g, &dense, k);
    }

    let k = membership.iter().copied().max().unwrap_or(0) + 1;
    let partition = blocks_from_membership(p, &membership, k);
    let modularity = modularity_of(p, &partition).expect("final partition is a cover");
    LouvainOutcome {
        partition,
        modularity,
        level_modularity,
    }
}

/// Community-size score per node.
pub(super) fn community_size(p: &Projection, seed: u64) -> MetricScores {
    let outcome = louvain(p, seed);
    let mut values = vec![0.0f64; p.node_count()];
    for block in &outcome.partition {
        for id in block {
            let i = p.index_of(id).expect("partition id in projection");
            values[i] = block.len() as f64;
        }
    }
    MetricScores::from_indexed(p, values)
}

/// Direct modularity of a partition: sum over blocks of
/// `intra_edges / edges - (block_degree / (2 * edges))^2`.
pub(super) fn modularity_of(
    p: &Projection,
    partition: &[Vec<NodeId>],
) -> Result<f64, MetricError> {
    let n = p.node_count();
    let mut block_of: Vec<Option<usize>> = vec![None; n];
    for (bi, block) in partition.iter().enumerate() {
        for id in block {
            let i = p.index_of(id).ok_or_else(|| {
                MetricError::InvalidPartition(format!("unknown node {id}"))
            })?;
            if block_of[i].is_some() {
                return Err(MetricError::InvalidPartition(format!(
                    "node {id} appears twice"
                )));
            }
            block_of[i] = Some(bi);
        }
    }
    if block_of.iter().any(Option::is_none) {
        return Err(MetricError::InvalidPartition(
            "partition does not cover every node".into(),
        ));
    }
    let l = p.edge_count() as f64;
    if l == 0.0 {
        return Ok(0.0);
    }
    let mut intra = vec![0.0f64; partition.len()];
    let mut deg = vec![0.0f64; partition.len()];
    for v in 0..n {
        let bv = block_of[v].unwrap();
        deg[bv] += p.degree(v) as f64;
        for &w in p.neighbors(v) {
            if w > v && block_of[w] == Some(bv) {
                intra[bv] += 1.0;
            }
        }
    }
    Ok(intra
        .iter()
        .zip(&deg)
        .map(|(&lc, &dc)| lc / l - (dc / (2.0 * l)).powi(2))
        .sum())
}
