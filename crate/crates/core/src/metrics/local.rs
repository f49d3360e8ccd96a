//! Closed-form per-node metrics: isolate indicator, local clustering, and
//! degree centrality.

use crate::graph_store::Projection;

use super::MetricScores;

pub(super) fn isolate_indicator(p: &Projection) -> MetricScores {
    let values = (0..p.node_count())
        .map(|i| if p.degree(i) == 0 { 0.0 } else { 1.0 })
        .collect();
    MetricScores::from_indexed(p, values)
}

pub(super) fn local_clustering(p: &Projection) -> MetricScores {
    let values = (0..p.node_count())
        .map(|v| {
            let d = p.degree(v);
            if d < 2 {
                return 0.0;
            }
            let neighbors = p.neighbors(v);
            let mut triangles = 0usize;
            for (i, &a) in neighbors.iter().enumerate() {
                for &b in &neighbors[i + 1..] {
                    if p.has_edge(a, b) {
                        triangles += 1;
                    }
                }
            }
            (2.0 * triangles as f64) / (d as f64 * (d as f64 - 1.0))
        })
        .collect();
    MetricScores::from_indexed(p, values)
}

pub(super) fn degree_centrality(p: &Projection) -> MetricScores {
    let n = p.node_count();
    let values = (0..n)
        .map(|v| {
            if n <= 1 {
                0.0
            } else {
                p.degree(v) as f64 / (n as f64 - 1.0)
            }
        })
        .collect();
    MetricScores::from_indexed(p, values)
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

    #[test]
    fn isolate_indicator_splits_connected_from_isolated() {
        let g = p(3, &[(0, 1)]);
        let s = isolate_indicator(&g);
        assert_eq!(s.get(&NodeId::from("n00")), Some(1.0));
        assert_eq!(s.get(&NodeId::from("n01")), Some(1.0));
        assert_eq!(s.get(&NodeId::from("n02")), Some(0.0));
    }

    #[test]
    fn triangle_clusters_fully() {
        let g = p(3, &[(0, 1), (1, 2), (0, 2)]);
        let s = local_clustering(&g);
        for i in 0..3 {
            assert_eq!(s.get(&NodeId::from(format!("n{i:02}").as_str())), Some(1.0));
        }
    }

    #[test]
    fn path_center_has_zero_clustering() {
        let g = p(3, &[(0, 1), (1, 2)]);
        let s = local_clustering(&g);
        assert_eq!(s.get(&NodeId::from("n01")), Some(0.0));
        assert_eq!(s.get(&NodeId::from("n00")), Some(0.0));
    }

    #[test]
    fn triangle_plus_pendant_clusters_one_third() {
        // center 0 joined to 1, 2 (triangle 0-1-2) and pendant 3
        let g = p(4, &[(0, 1), (1, 2), (0, 2), (0, 3)]);
        let s = local_clustering(&g);
        let got = s.get(&NodeId::from("n00")).unwrap();
        assert!((got - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degree_centrality_on_star() {
        let g = p(4, &[(0, 1), (0, 2), (0, 3)]);
        let s = degree_centrality(&g);
        assert_eq!(s.get(&NodeId::from("n00")), Some(1.0));
        for i in 1..4 {
            let got = s
                .get(&NodeId::from(format!("n{i:02}").as_str()))
                .unwrap();
            assert!((got - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node_graph_scores_zero_centrality() {
        let g = p(1, &[]);
        let s = degree_centrality(&g);
        assert_eq!(s.get(&NodeId::from("n00")), Some(0.0));
    }
}
