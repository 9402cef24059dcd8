use cablebarrier::integrator::integrate_all;
use cablebarrier::intersection::find_stopping_points;
use cablebarrier::pipeline::{self, MAX_SHIFT};
use cablebarrier::setassembly::assemble;
use cablebarrier::tangency::all_endpoints;
use cablebarrier::{ReducedState, RunConfig};
use cablebarrier_bench::configurations;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn stages(c: &mut Criterion) {
    for (name, params) in configurations() {
        let cfg = RunConfig { params, ..Default::default() };
        let opts = cfg.integrator_options();
        let eps = all_endpoints(&params, &[0]).unwrap();
        let (_, _, raw, _, arcs) = pipeline::barrier(&cfg).unwrap();
        let theta2_max = cfg.window().theta2_max;

        c.bench_with_input(BenchmarkId::new("endpoints", name), &params, |b, p| b.iter(|| all_endpoints(p, &[-1, 0, 1]).unwrap()));
        c.bench_with_input(BenchmarkId::new("integrate_arcs", name), &params, |b, p| b.iter(|| integrate_all(p, &eps, &opts).unwrap()));
        c.bench_with_input(BenchmarkId::new("stopping_points", name), &params, |b, p| b.iter(|| find_stopping_points(p, &raw, MAX_SHIFT)));

        let mut g = c.benchmark_group("assemble");
        g.sample_size(10);
        g.bench_with_input(BenchmarkId::from_parameter(name), &params, |b, p| b.iter(|| assemble(p, &arcs, theta2_max, cfg.resolution).unwrap()));
        g.finish();

        let model = assemble(&params, &arcs, theta2_max, cfg.resolution).unwrap();
        let queries: Vec<ReducedState> = (0..1000).map(|i| ReducedState::new(-3.1 + 0.0062 * i as f64, -4.0 + 0.008 * i as f64)).collect();
        c.bench_function(&format!("membership_1000/{name}"), |b| {
            b.iter(|| queries.iter().filter(|s| model.membership(**s).map(|v| v.tag.is_admissible()).unwrap_or(false)).count())
        });
        black_box(&model);
    }
}

criterion_group!(benches, stages);
criterion_main!(benches);
