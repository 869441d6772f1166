use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use orbroute_bench::{default_scenario, unfiltered_scenario};
use orbroute_core::orbital::propagate_constellation;
use orbroute_core::rl::{encode, q_scores, PolicyParams, RlHyperParams};
use orbroute_core::routing::shortest_path;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn propagation(c: &mut Criterion) {
    let s = default_scenario();
    c.bench_function("propagate 1000 satellites", |b| {
        b.iter(|| propagate_constellation(black_box(&s.constellation), black_box(1234.5)))
    });
}

fn graph_build(c: &mut Criterion) {
    let corridor = default_scenario();
    let full = unfiltered_scenario();
    c.bench_function("instantiate corridor snapshot", |b| {
        b.iter(|| corridor.instantiate(black_box(1234.5), 7).unwrap())
    });
    c.bench_function("instantiate full snapshot", |b| {
        b.iter(|| full.instantiate(black_box(1234.5), 7).unwrap())
    });
}

fn dijkstra(c: &mut Criterion) {
    let corridor = default_scenario().instantiate(1234.5, 7).unwrap();
    let full = unfiltered_scenario().instantiate(1234.5, 7).unwrap();
    c.bench_function("dijkstra corridor graph", |b| {
        b.iter(|| {
            shortest_path(&corridor.graph, corridor.source_sat(), corridor.dest_sat()).unwrap()
        })
    });
    c.bench_function("dijkstra full graph", |b| {
        b.iter(|| shortest_path(&full.graph, full.source_sat(), full.dest_sat()).unwrap())
    });
}

fn policy_forward(c: &mut Criterion) {
    let inst = default_scenario().instantiate(1234.5, 7).unwrap();
    let hyper = RlHyperParams::default();
    let p = PolicyParams::init(&hyper, &mut ChaCha8Rng::seed_from_u64(1));
    let src = inst.source_sat();
    let dst = inst.dest_sat();
    let d0 = inst
        .graph
        .position(src)
        .unwrap()
        .distance(inst.graph.position(dst).unwrap());
    let visited: BTreeSet<_> = [src].into_iter().collect();
    let k_cap = orbroute_core::RoutingParams::default().k_cap;
    let (state, cands) = encode(&inst.graph, src, dst, &visited, d0, k_cap);
    let feats: Vec<_> = cands.iter().map(|c| c.features).collect();
    c.bench_function("encode + score one decision", |b| {
        b.iter(|| {
            let (s, cs) = encode(&inst.graph, src, dst, &visited, d0, k_cap);
            let f: Vec<_> = cs.iter().map(|c| c.features).collect();
            q_scores(&p, &s, &f)
        })
    });
    c.bench_function("score candidates", |b| {
        b.iter(|| q_scores(&p, black_box(&state), black_box(&feats)))
    });
}

criterion_group!(benches, propagation, graph_build, dijkstra, policy_forward);
criterion_main!(benches);
