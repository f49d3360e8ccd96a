//! Largest-maximal-clique score via Bron-Kerbosch enumeration with pivoting.
//!
//! Each node's score is the size of the largest maximal clique it belongs
//! to; an isolate sits in the singleton clique and scores 1. Components are
//! independent, so the parallel path fans out per component and merges by
//! max, which is order-insensitive.

use crate::graph_store::Projection;

use super::MetricScores;

/// Fixed-capacity bitset over component-local vertex indices.
#[derive(Clone, PartialEq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn full(n: usize) -> Self {
        let mut s = Self::new(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1u64 << (i % 64));
    }

    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn intersection(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    fn intersection_count(&self, other: &BitSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter_map(move |b| {
                if w & (1u64 << b) != 0 {
                    Some(wi * 64 + b)
                } else {
                    None
                }
            })
        })
    }
}

/// Runs Bron-Kerbosch over one component (given in projection indices) and
/// returns the per-node best clique size, aligned with `comp`.
fn component_best(p: &Projection, comp: &[usize]) -> Vec<usize> {
    let k = comp.len();
    let local: std::collections::HashMap<usize, usize> =
        comp.iter().enumerate().map(|(li, &gi)| (gi, li)).collect();
    let mut adj: Vec<BitSet> = (0..k).map(|_| BitSet::new(k)).collect();
    for (li, &gi) in comp.iter().enumerate() {
        for &nb in p.neighbors(gi) {
            adj[li].insert(local[&nb]);
        }
    }
    let mut best = vec![0usize; k];
    let mut r: Vec<usize> = Vec::new();
    let p_set = BitSet::full(k);
    let x_set = BitSet::new(k);
    expand(&adj, &mut r, p_set, x_set, &mut best);
    best
}

fn expand(
    adj: &[BitSet],
    r: &mut Vec<usize>,
    mut p_set: BitSet,
    mut x_set: BitSet,
    best: &mut Vec<usize>,
) {
    if p_set.is_empty() && x_set.is_empty() {
        for &v in r.iter() {
            if r.len() > best[v] {
                best[v] = r.len();
            }
        }
        return;
    }
    // Tomita pivot: the candidate from P union X covering most of P.
    let pivot = p_set
        .ones()
        .chain(x_set.ones())
        .max_by_key(|&u| p_set.intersection_count(&adj[u]))
        .expect("p or x non-empty");
    let todo: Vec<usize> = p_set
        .ones()
        .filter(|&v| !adj[pivot].contains(v))
        .collect();
    for v in todo {
        r.push(v);
        expand(
            adj,
            r,
            p_set.intersection(&adj[v]),
            x_set.intersection(&adj[v]),
            best,
        );
        r.pop();
        p_set.remove(v);
        x_set.insert(v);
    }
}

fn merge(p: &Projection, per_component: Vec<(Vec<usize>, Vec<usize>)>) -> MetricScores {
    let mut values = vec![0.0f64; p.node_count()];
    for (comp, best) in per_component {
        for (li, &gi) in comp.iter().enumerate() {
            values[gi] = best[li] as f64;
        }
    }
    MetricScores::from_indexed(p, values)
}

pub(super) fn compute(p: &Projection) -> MetricScores {
    let comps = p.components();
    let per: Vec<(Vec<usize>, Vec<usize>)> =
        crate::par::map_indices(comps.len(), |ci| {
            let best = component_best(p, &comps[ci]);
            (comps[ci].clone(), best)
        });
    merge(p, per)
}

pub(super) fn compute_seq(p: &Projection) -> MetricScores {
    let per = p
        .components()
        .into_iter()
        .map(|comp| {
            let best = component_best(p, &comp);
            (comp, best)
        })
        .collect();
    merge(p, per)
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
    fn isolate_scores_one() {
        let s = compute(&p(1, &[]));
        assert_eq!(score(&s, 0), 1.0);
    }

    #[test]
    fn path_scores_two_then_triangle_scores_three() {
        // path 0-1, 1-2
        let s = compute(&p(3, &[(0, 1), (1, 2)]));
        for i in 0..3 {
            assert_eq!(score(&s, i), 2.0);
        }
        // close the triangle
        let s = compute(&p(3, &[(0, 1), (1, 2), (0, 2)]));
        for i in 0..3 {
            assert_eq!(score(&s, i), 3.0);
        }
    }

    #[test]
    fn largest_containing_clique_wins() {
        // K4 on 0..4 plus pendant 4 attached to 0
        let s = compute(&p(
            5,
            &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (0, 4)],
        ));
        for i in 0..4 {
            assert_eq!(score(&s, i), 4.0);
        }
        assert_eq!(score(&s, 4), 2.0);
    }

    #[test]
    fn two_components_score_independently() {
        let s = compute(&p(5, &[(0, 1), (2, 3), (3, 4), (2, 4)]));
        assert_eq!(score(&s, 0), 2.0);
        assert_eq!(score(&s, 1), 2.0);
        for i in 2..5 {
            assert_eq!(score(&s, i), 3.0);
        }
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let g = p(
            8,
            &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 4)],
        );
        assert_eq!(compute(&g), compute_seq(&g));
    }
}
