use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mkge::graph_store::{NodeId, Projection};
use mkge::metrics;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_projection(nodes: usize, edge_prob: f64, seed: u64) -> Projection {
    let mut rng = StdRng::seed_from_u64(seed);
    let ids: Vec<NodeId> = (0..nodes).map(|i| NodeId::from(format!("n{i:04}").as_str())).collect();
    let texts: Vec<String> = (0..nodes).map(|i| format!("node {i}")).collect();
    let mut edges = Vec::new();
    for a in 0..nodes {
        for b in (a + 1)..nodes {
            if rng.gen_bool(edge_prob) {
                edges.push((a, b));
            }
        }
    }
    Projection::from_parts(ids, texts, &edges)
}

fn bench_kernels(c: &mut Criterion) {
    for &n in &[60usize, 150] {
        let p = random_projection(n, 0.08, 17);
        let mut group = c.benchmark_group(format!("n{n}"));

        group.bench_with_input(BenchmarkId::new("betweenness/parallel", n), &p, |b, p| {
            b.iter(|| metrics::betweenness(p))
        });
        group.bench_with_input(BenchmarkId::new("betweenness/seq", n), &p, |b, p| {
            b.iter(|| metrics::seq::betweenness(p))
        });

        group.bench_with_input(BenchmarkId::new("diameter/parallel", n), &p, |b, p| {
            b.iter(|| metrics::component_diameter_score(p))
        });
        group.bench_with_input(BenchmarkId::new("diameter/seq", n), &p, |b, p| {
            b.iter(|| metrics::seq::component_diameter_score(p))
        });

        group.bench_with_input(BenchmarkId::new("clique/parallel", n), &p, |b, p| {
            b.iter(|| metrics::clique_score(p))
        });
        group.bench_with_input(BenchmarkId::new("clique/seq", n), &p, |b, p| {
            b.iter(|| metrics::seq::clique_score(p))
        });

        group.finish();
    }
}

criterion_group!(benches, bench_kernels);
criterion_main!(benches);
