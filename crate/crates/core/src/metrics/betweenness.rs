//! Shortest-path betweenness via one BFS plus dependency back-propagation
//! per source.
//!
//! Scores are unnormalized, endpoints are excluded, and each unordered pair
//! counts once (the directed accumulation is halved). The parallel path
//! collects per-source contribution vectors in source order and folds them
//! sequentially, so it is bit-identical to the sequential path.

use std::collections::VecDeque;

use crate::graph_store::Projection;

use super::MetricScores;

/// Dependency vector contributed by a single source, per Brandes.
fn source_dependencies(p: &Projection, s: usize) -> Vec<f64> {
    let n = p.node_count();
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    let mut queue = VecDeque::new();

    sigma[s] = 1.0;
    dist[s] = 0;
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        stack.push(v);
        for &w in p.neighbors(v) {
            if dist[w] < 0 {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }

    let mut delta = vec![0.0f64; n];
    while let Some(w) = stack.pop() {
        for &v in &preds[w] {
            delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w]);
        }
    }
    delta[s] = 0.0;
    delta
}

fn fold(p: &Projection, contributions: Vec<Vec<f64>>) -> MetricScores {
    let n = p.node_count();
    let mut acc = vec![0.0f64; n];
    for contribution in contributions {
        for (a, c) in acc.iter_mut().zip(contribution) {
            *a += c;
        }
    }
    for a in &mut acc {
        *a /= 2.0;
    }
    MetricScores::from_indexed(p, acc)
}

pub(super) fn compute(p: &Projection) -> MetricScores {
    let contributions = crate::par::map_indices(p.node_count(), |s| source_dependencies(p, s));
    fold(p, contributions)
}

pub(super) fn compute_seq(p: &Projection) -> MetricScores {
    let contributions = (0..p.node_count())
        .map(|s| source_dependencies(p, s))
        .collect();
    fold(p, contributions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_store::NodeId;

    fn p(n: usize, edges: &[(usize, usize)]) -> Projection {
        let ids = (0..n)
            .map(|i| NodeId::from(format!("n{i:02}").as_str()))
            .collect();
        let texts = (0..n).map(|i| format!("t{i}")).collect();
        Projection::from_parts(ids, texts, edges)
    }

    fn score(s: &MetricScores, i: usize) -> f64 {
        s.get(&NodeId::from(format!("n{i:02}").as_str())).unwrap()
    }

    #[test]
    fn empty_and_singleton() {
        assert!(compute(&p(0, &[])).is_empty());
        let s = compute(&p(1, &[]));
        assert_eq!(score(&s, 0), 0.0);
    }

    #[test]
    fn path_center_carries_the_single_pair() {
        let s = compute(&p(3, &[(0, 1), (1, 2)]));
        assert_eq!(score(&s, 0), 0.0);
        assert_eq!(score(&s, 1), 1.0);
        assert_eq!(score(&s, 2), 0.0);
    }

    #[test]
    fn star_center_carries_all_leaf_pairs() {
        let s = compute(&p(4, &[(0, 1), (0, 2), (0, 3)]));
        assert_eq!(score(&s, 0), 3.0);
        for i in 1..4 {
            assert_eq!(score(&s, i), 0.0);
        }
    }

    #[test]
    fn square_splits_credit_between_two_shortest_paths() {
        // cycle 0-1-2-3-0: for each opposite pair, two shortest paths
        let s = compute(&p(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]));
        for i in 0..4 {
            assert!((score(&s, i) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn disconnected_pairs_contribute_nothing() {
        let s = compute(&p(4, &[(0, 1), (2, 3)]));
        for i in 0..4 {
            assert_eq!(score(&s, i), 0.0);
        }
    }

    #[test]
    fn parallel_and_sequential_agree_exactly() {
        let g = p(
            7,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (2, 6)],
        );
        let a = compute(&g);
        let b = compute_seq(&g);
        assert_eq!(a, b);
    }
}
