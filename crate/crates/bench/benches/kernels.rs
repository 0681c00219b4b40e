use criterion::{black_box, criterion_group, criterion_main, Criterion};

use gensol_bench::scenario;
use gensol_core::characteristics::trace_characteristic;
use gensol_core::mollifier::Mollifier;
use gensol_core::solver::solve;

fn mollifier(c: &mut Criterion) {
    c.bench_function("mollifier_build_q4", |b| b.iter(|| Mollifier::build(black_box(4), 1.0).unwrap()));
    let m = Mollifier::build(3, 1.0).unwrap();
    c.bench_function("mollifier_eval_q3", |b| b.iter(|| m.eval(black_box(0.37))));
}

fn trace(c: &mut Criterion) {
    let cfg = scenario("nonlinear_smooth.json", 100);
    let sys = cfg.freeze().unwrap();
    c.bench_function("trace_nonlinear", |b| {
        b.iter(|| trace_characteristic(&sys, 0, black_box(0.4), 0.9, cfg.numerics.trace_tol).unwrap())
    });
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for (name, nx) in [("exponential_reaction.json", 200), ("cavity_echo.json", 200), ("nonlinear_smooth.json", 100)] {
        let cfg = scenario(name, nx);
        let sys = cfg.freeze().unwrap();
        let solve_cfg = cfg.solve_config();
        group.bench_function(name.trim_end_matches(".json"), |b| {
            b.iter(|| solve(&sys, cfg.horizon(), &solve_cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, mollifier, trace, solver);
criterion_main!(benches);
