use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use graphmlp::graph::{extract_submatrix, sparse_power};
use graphmlp::loss::{ncontrast_loss, NContrastBatch};
use graphmlp::tensor::{matmul, matmul_nt};
use graphmlp::{ModelKind, Rng, SplitKind};
use graphmlp_bench::{cora_like, model, normalized, power, random_tensor};

fn bench_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    group.sample_size(10);
    for &(m, k, n) in &[(256, 256, 256), (1000, 1433, 256)] {
        let a = random_tensor(m, k, 1);
        let b = random_tensor(k, n, 2);
        group.bench_with_input(
            BenchmarkId::new("nn", format!("{m}x{k}x{n}")),
            &(),
            |bench, _| bench.iter(|| matmul(black_box(&a), black_box(&b)).unwrap()),
        );
    }
    let z = random_tensor(1000, 256, 3);
    group.bench_function("gram_1000x256", |bench| {
        bench.iter(|| matmul_nt(black_box(&z), black_box(&z)).unwrap())
    });
    group.finish();
}

fn bench_sparse_power(c: &mut Criterion) {
    let g = cora_like();
    let a_hat = normalized(&g);
    let mut group = c.benchmark_group("sparse_power");
    group.sample_size(10);
    for r in 1..=4u32 {
        group.bench_with_input(BenchmarkId::from_parameter(r), &r, |bench, &r| {
            bench.iter(|| sparse_power(black_box(&a_hat), r).unwrap())
        });
    }
    group.finish();
}

fn bench_ncontrast(c: &mut Criterion) {
    let g = cora_like();
    let a_r = power(&g, 2);
    let mut group = c.benchmark_group("ncontrast");
    group.sample_size(10);
    for &b in &[500usize, 2000] {
        let ids = Rng::new(5).sample_distinct(g.n(), b);
        let gamma = extract_submatrix(&a_r, &ids).unwrap();
        let z = random_tensor(b, 256, 6);
        group.bench_with_input(BenchmarkId::from_parameter(b), &b, |bench, _| {
            bench.iter(|| {
                ncontrast_loss(NContrastBatch {
                    z: black_box(&z),
                    gamma: &gamma,
                    tau: 1.0,
                    alpha: 1.0,
                })
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_inference(c: &mut Criterion) {
    let g = cora_like();
    let x = g.features().clone();
    let a_hat = normalized(&g);
    let test = g.splits().get(SplitKind::Test).to_vec();
    let mlp = model(ModelKind::GraphMlp, &g, 256);
    let gcn = model(ModelKind::Gcn, &g, 256);
    let mut group = c.benchmark_group("inference");
    group.sample_size(10);
    group.bench_function("graphmlp_test_rows", |bench| {
        bench.iter(|| mlp.predict_classes(black_box(&x), None, &test).unwrap())
    });
    group.bench_function("gcn_full_graph", |bench| {
        bench.iter(|| {
            gcn.predict_classes(black_box(&x), Some(&a_hat), &test)
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_matmul,
    bench_sparse_power,
    bench_ncontrast,
    bench_inference
);
criterion_main!(benches);
