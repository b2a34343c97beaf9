use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use freeharm_bench::half_box_problem;
use freeharm_core::diagnostics::{normalized_energy, BallFamily};
use freeharm_core::energy::{first_variation, regularized_energy};
use freeharm_core::solver::{descent_step, StepRule};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    for (dim, h) in [(2, 1.0 / 64.0), (3, 1.0 / 12.0)] {
        let (spec, u) = half_box_problem(dim, 3.0, h);
        let id = format!("{dim}d_{}nodes", u.mesh().num_nodes());
        g.bench_with_input(BenchmarkId::new("energy", &id), &u, |b, u| b.iter(|| regularized_energy(u, spec.p, 1e-4).total));
        g.bench_with_input(BenchmarkId::new("first_variation", &id), &u, |b, u| b.iter(|| first_variation(u, spec.p, 1e-4)));
    }
    g.finish();
}

fn step(c: &mut Criterion) {
    let mut g = c.benchmark_group("descent_step");
    g.sample_size(10);
    let (spec, u) = half_box_problem(2, 3.0, 1.0 / 32.0);
    let rules = [("residual", StepRule { direction: freeharm_core::solver::DescentDirection::Residual, ..StepRule::default() }), ("newton", StepRule::default())];
    for (name, rule) in rules {
        g.bench_function(name, |b| b.iter(|| descent_step(&u, spec.p, 1e-4, &rule).unwrap().1));
    }
    g.finish();
}

fn diagnostics(c: &mut Criterion) {
    let (spec, u) = half_box_problem(2, 3.0, 1.0 / 64.0);
    let family = BallFamily::default_for(u.mesh(), 0.25, 5).unwrap();
    c.bench_function("normalized_energy_family", |b| {
        b.iter(|| {
            family
                .centers()
                .iter()
                .flat_map(|x| family.radii().iter().map(move |&r| (x, r)))
                .map(|(x, r)| normalized_energy(&u, spec.p, x, r))
                .fold(0.0, f64::max)
        })
    });
}

criterion_group!(benches, assembly, step, diagnostics);
criterion_main!(benches);
