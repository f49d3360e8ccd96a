//! Hop diameter of each node's connected component.
//!
//! Every node in a component shares the component's diameter (the maximum
//! eccentricity inside it); isolates score 0. Eccentricities are integers,
//! so the parallel and sequential paths agree exactly.

use std::collections::VecDeque;

use crate::graph_store::Projection;

use super::MetricScores;

/// Longest BFS distance from `s` to anything reachable.
fn eccentricity(p: &Projection, s: usize) -> u64 {
    let mut dist = vec![u64::MAX; p.node_count()];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    let mut ecc = 0;
    while let Some(v) = queue.pop_front() {
        for &w in p.neighbors(v) {
            if dist[w] == u64::MAX {
                dist[w] = dist[v] + 1;
                ecc = ecc.max(dist[w]);
                queue.push_back(w);
            }
        }
    }
    ecc
}

fn from_eccentricities(p: &Projection, ecc: Vec<u64>) -> MetricScores {
    let mut values = vec![0.0f64; p.node_count()];
    for comp in p.components() {
        let diameter = comp.iter().map(|&v| ecc[v]).max().unwrap_or(0);
        for &v in &comp {
            values[v] = diameter as f64;
        }
    }
    MetricScores::from_indexed(p, values)
}

pub(super) fn compute(p: &Projection) -> MetricScores {
    let ecc = crate::par::map_indices(p.node_count(), |v| eccentricity(p, v));
    from_eccentricities(p, ecc)
}

pub(super) fn compute_seq(p: &Projection) -> MetricScores {
    let ecc = (0..p.node_count()).map(|v| eccentricity(p, v)).collect();
    from_eccentricities(p, ecc)
}
