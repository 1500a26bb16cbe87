use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Array1;

use rome_core::dro::{estimate_gram, project_simplex, solve_v, DroConfig};
use rome_core::em::{fit, EmConfig};
use rome_core::moe::{backward, init_model, MoeConfig, Rows};
use rome_core::simgen::{generate, SimSpec};

fn em_fit(c: &mut Criterion) {
    let spec = SimSpec::benchmark(1000, 42);
    let (data, _) = generate(&spec).unwrap();
    let cfg = EmConfig::new(4);
    c.bench_function("em_fit_n1000_g4", |b| {
        b.iter(|| fit(&data, &cfg, None).unwrap())
    });
}

fn dro_solve(c: &mut Criterion) {
    let spec = SimSpec::benchmark(1000, 7);
    let (data, _) = generate(&spec).unwrap();
    let em = fit(&data, &EmConfig::new(4), None).unwrap();
    let gram = estimate_gram(&em.params, &data).unwrap();
    let cfg = DroConfig::new(0.3);
    c.bench_function("solve_v_g4_c03", |b| b.iter(|| solve_v(&gram, &cfg).unwrap()));
}

fn simplex_projection(c: &mut Criterion) {
    let u = Array1::from_vec(vec![0.9, -0.3, 0.4, 0.2, -0.1, 0.6, 0.05, 0.15]);
    c.bench_function("project_simplex_g8", |b| b.iter(|| project_simplex(&u)));
}

fn moe_batch_backward(c: &mut Criterion) {
    let spec = SimSpec::benchmark(64, 3);
    let (data, _) = generate(&spec).unwrap();
    let cfg = MoeConfig::new(4);
    let model = init_model(&cfg, data.a.ncols(), data.s.ncols()).unwrap();
    c.bench_function("moe_backward_batch64_g4", |b| {
        b.iter_batched(
            || (),
            |_| {
                let rows = Rows { a: data.a.view(), s: data.s.view() };
                backward(&model, &cfg, &rows, data.y.view()).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, em_fit, dro_solve, simplex_projection, moe_batch_backward);
criterion_main!(benches);
