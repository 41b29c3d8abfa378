use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use netmfg::field::PairField;
use netmfg::flow::{apply_psi, PsiConfig};
use netmfg::network::EdgeSpec;
use netmfg::scenario::ScenarioFile;
use netmfg::value::value_backward;
use netmfg::{Exec, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const THREE_ROUTE: &str = include_str!("../../../scenarios/three_route.toml");

fn three_route(steps: usize) -> Problem {
    Problem::from_toml(THREE_ROUTE)
        .unwrap()
        .with_steps(steps)
        .unwrap()
}

/// Fully connected consecutive layers plus a few random skip edges.
fn layered(layers: usize, width: usize, steps: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut names = vec![vec!["o".to_string()]];
    for l in 0..layers {
        names.push((0..width).map(|j| format!("v{l}_{j}")).collect());
    }
    names.push(vec!["d".to_string()]);
    let mut edges = Vec::new();
    let mut add = |tail: &str, head: &str, length: f64| {
        edges.push(EdgeSpec {
            id: format!("e{}", edges.len() + 1),
            tail: tail.into(),
            head: head.into(),
            length,
            capacity: 50.0,
        });
    };
    for l in 0..names.len() - 1 {
        for a in &names[l] {
            for b in &names[l + 1] {
                add(a, b, rng.gen_range(0.8..1.2));
            }
        }
    }
    for _ in 0..width {
        let l = rng.gen_range(1..layers);
        let a = names[l - 1][rng.gen_range(0..names[l - 1].len())].clone();
        let b = names[l + 1][rng.gen_range(0..width.min(names[l + 1].len()))].clone();
        add(&a, &b, 2.0);
    }
    let mut file = ScenarioFile::from_toml(THREE_ROUTE).unwrap();
    file.network.vertices = names.into_iter().flatten().collect();
    file.network.edges = edges;
    file.model.steps = steps;
    file.model.horizon = 2.0 * (layers + 1) as f64;
    file.model.rho_max = 200.0;
    Problem::from_file(file).unwrap()
}

fn modes() -> [(&'static str, Exec); 2] {
    [
        ("sequential", Exec::Sequential),
        ("parallel", Exec::Parallel),
    ]
}

fn bench_values(c: &mut Criterion) {
    let mut group = c.benchmark_group("value_backward");
    for (name, p) in [
        ("three_route", three_route(1000)),
        ("layered", layered(3, 3, 400)),
    ] {
        let mass = PairField::filled(p.paths.pairs().len(), p.grid().nodes(), 0.1);
        for (mode, exec) in modes() {
            group.bench_with_input(BenchmarkId::new(mode, name), &exec, |b, &exec| {
                b.iter(|| value_backward(black_box(&p), black_box(&mass), exec))
            });
        }
    }
    group.finish();
}

fn bench_psi(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_psi");
    group.sample_size(20);
    for (name, p) in [
        ("three_route", three_route(1000)),
        ("layered", layered(3, 3, 400)),
    ] {
        let mass = PairField::zeros(p.paths.pairs().len(), p.grid().nodes());
        for (mode, exec) in modes() {
            let config = PsiConfig::for_problem(&p).with_exec(exec);
            group.bench_with_input(BenchmarkId::new(mode, name), &config, |b, &config| {
                b.iter(|| apply_psi(black_box(&p), black_box(&mass), config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_values, bench_psi);
criterion_main!(benches);
