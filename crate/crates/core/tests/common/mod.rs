//! Brute-force oracles for the graph kernels, written from the definitions
//! rather than from the library code. Everything here is exponential or
//! cubic and only meant for graphs of a dozen nodes or so.

// Index-based loops mirror the pencil-and-paper definitions on purpose.
#![allow(clippy::needless_range_loop)]

use mkge::graph_store::{NodeId, Projection};
use rand::rngs::StdRng;
use rand::Rng;

pub fn node_id(i: usize) -> NodeId {
    NodeId::from(format!("n{i:03}").as_str())
}

/// Projection over `n` synthetic nodes with the given undirected edges.
pub fn projection(n: usize, edges: &[(usize, usize)]) -> Projection {
    let ids = (0..n).map(node_id).collect();
    let texts = (0..n).map(|i| format!("synthetic node {i}")).collect();
    Projection::from_parts(ids, texts, edges)
}

/// G(n, p) graph with n drawn from 0..=max_nodes.
pub fn random_graph(rng: &mut StdRng, max_nodes: usize) -> (usize, Vec<(usize, usize)>) {
    let n = rng.gen_range(0..=max_nodes);
    let p: f64 = rng.gen_range(0.05..0.9);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    (n, edges)
}

fn matrix(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for &(a, b) in edges {
        if a != b {
            m[a][b] = true;
            m[b][a] = true;
        }
    }
    m
}

/// Size of the largest clique containing each vertex, by checking every
/// vertex subset. Requires n <= 20 or so; intended for n <= 12.
pub fn oracle_clique(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let adj = matrix(n, edges);
    let mut best = vec![0u32; n];
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
        let is_clique = members
            .iter()
            .enumerate()
            .all(|(i, &a)| members[i + 1..].iter().all(|&b| adj[a][b]));
        if is_clique {
            let size = members.len() as u32;
            for &v in &members {
                best[v] = best[v].max(size);
            }
        }
    }
    best.into_iter().map(f64::from).collect()
}

/// Local clustering coefficient straight from the neighbor-pair definition.
pub fn oracle_clustering(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let adj = matrix(n, edges);
    (0..n)
        .map(|v| {
            let nbrs: Vec<usize> = (0..n).filter(|&w| adj[v][w]).collect();
            let k = nbrs.len();
            if k < 2 {
                return 0.0;
            }
            let mut closed = 0usize;
            let mut pairs = 0usize;
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    pairs += 1;
                    if adj[a][b] {
                        closed += 1;
                    }
                }
            }
            closed as f64 / pairs as f64
        })
        .collect()
}

/// All-pairs shortest distances by BFS; usize::MAX marks unreachable.
fn bfs_dist(n: usize, adj: &[Vec<bool>], s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; n];
    dist[s] = 0;
    let mut queue = std::collections::VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for w in 0..n {
            if adj[v][w] && dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Betweenness by explicit enumeration of every shortest path: for each
/// unordered pair {s, t} the count of shortest s-t paths through v, divided
/// by the total count, summed over pairs. Endpoints get no credit.
pub fn oracle_betweenness(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let adj = matrix(n, edges);
    let dist: Vec<Vec<usize>> = (0..n).map(|s| bfs_dist(n, &adj, s)).collect();

    // paths_through[v] over all shortest s-t paths, via DFS along the
    // distance gradient.
    fn walk(
        v: usize,
        t: usize,
        adj: &[Vec<bool>],
        dist_t: &[usize],
        on_path: &mut Vec<usize>,
        hits: &mut Vec<f64>,
        total: &mut f64,
    ) {
        if v == t {
            *total += 1.0;
            for &u in on_path.iter() {
                hits[u] += 1.0;
            }
            return;
        }
        for w in 0..adj.len() {
            if adj[v][w] && dist_t[w] + 1 == dist_t[v] {
                if w != t {
                    on_path.push(w);
                }
                walk(w, t, adj, dist_t, on_path, hits, total);
                if w != t {
                    on_path.pop();
                }
            }
        }
    }

    let mut scores = vec![0.0f64; n];
    for s in 0..n {
        for t in (s + 1)..n {
            if dist[s][t] == usize::MAX {
                continue;
            }
            let mut hits = vec![0.0f64; n];
            let mut total = 0.0f64;
            walk(s, t, &adj, &dist[t], &mut Vec::new(), &mut hits, &mut total);
            if total > 0.0 {
                for v in 0..n {
                    if v != s && v != t {
                        scores[v] += hits[v] / total;
                    }
                }
            }
        }
    }
    scores
}

/// Each node scores the diameter of its connected component (max finite
/// pairwise BFS distance); isolates score 0.
pub fn oracle_component_diameter(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let adj = matrix(n, edges);
    let dist: Vec<Vec<usize>> = (0..n).map(|s| bfs_dist(n, &adj, s)).collect();
    (0..n)
        .map(|v| {
            let mut d = 0usize;
            for a in 0..n {
                if dist[v][a] == usize::MAX {
                    continue;
                }
                for b in 0..n {
                    if dist[a][b] != usize::MAX {
                        d = d.max(dist[a][b]);
                    }
                }
            }
            d as f64
        })
        .collect()
}

/// Newman modularity of a labeled partition, from the definition:
/// Q = sum_c [ L_c / L - (D_c / 2L)^2 ] with unit edge weights.
pub fn oracle_modularity(n: usize, edges: &[(usize, usize)], label: &[usize]) -> f64 {
    assert_eq!(label.len(), n);
    let adj = matrix(n, edges);
    let l: f64 = edges
        .iter()
        .filter(|&&(a, b)| a != b)
        .collect::<std::collections::BTreeSet<_>>()
        .len() as f64;
    if l == 0.0 {
        return 0.0;
    }
    let blocks = label.iter().copied().max().map_or(0, |m| m + 1);
    let mut intra = vec![0.0f64; blocks];
    let mut deg = vec![0.0f64; blocks];
    for v in 0..n {
        let d = (0..n).filter(|&w| adj[v][w]).count() as f64;
        deg[label[v]] += d;
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if adj[a][b] && label[a] == label[b] {
                intra[label[a]] += 1.0;
            }
        }
    }
    (0..blocks)
        .map(|c| intra[c] / l - (deg[c] / (2.0 * l)).powi(2))
        .sum()
}

/// Exhaustive maximum-modularity partition over all set partitions of
/// 0..n (restricted-growth-string enumeration). Feasible for n <= 8
/// (Bell(8) = 4140). Returns the best labeling and its modularity.
pub fn oracle_best_partition(n: usize, edges: &[(usize, usize)]) -> (Vec<usize>, f64) {
    assert!(n <= 10, "exhaustive partition search needs a small n");
    let mut best_label = vec![0usize; n];
    let mut best_q = f64::NEG_INFINITY;
    let mut label = vec![0usize; n];

    fn rec(
        i: usize,
        max_used: usize,
        n: usize,
        edges: &[(usize, usize)],
        label: &mut Vec<usize>,
        best_label: &mut Vec<usize>,
        best_q: &mut f64,
    ) {
        if i == n {
            let q = oracle_modularity(n, edges, label);
            if q > *best_q + 1e-15 {
                *best_q = q;
                best_label.clone_from(label);
            }
            return;
        }
        for c in 0..=max_used + 1 {
            label[i] = c;
            rec(
                i + 1,
                max_used.max(c),
                n,
                edges,
                label,
                best_label,
                best_q,
            );
        }
    }

    if n > 0 {
        label[0] = 0;
        rec(1, 0, n, edges, &mut label, &mut best_label, &mut best_q);
    } else {
        best_q = 0.0;
    }
    (best_label, best_q)
}

/// Canonical form of a labeling: the set of member sets, each sorted.
pub fn canonical_blocks(label: &[usize]) -> Vec<Vec<usize>> {
    let blocks = label.iter().copied().max().map_or(0, |m| m + 1);
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); blocks];
    for (v, &c) in label.iter().enumerate() {
        out[c].push(v);
    }
    out.retain(|b| !b.is_empty());
    for b in &mut out {
        b.sort_unstable();
    }
    out.sort();
    out
}

/// Full-sort retrieval oracle: cosine against every stored vector, sorted
/// by descending score with ascending id breaking ties, truncated to k.
pub fn oracle_top_k(
    stored: &[(String, Vec<f64>)],
    query: &[f64],
    k: usize,
) -> Vec<(String, f64)> {
    fn cos(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }
    let mut rows: Vec<(String, f64)> = stored
        .iter()
        .map(|(id, v)| (id.clone(), cos(query, v)))
        .collect();
    rows.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
    });
    rows.truncate(k);
    rows
}
