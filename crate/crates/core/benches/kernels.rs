use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use parea_core::*;
use std::hint::black_box;

fn problem(n: usize) -> ProblemSpec {
    let dom = GridDomain::rectangle(n, n, 1.0 / n as f64).unwrap();
    let norm = NormSpec::uniform_anisotropic(n, n, 1.0, Sym2 { xx: 2.0, xy: 0.3, yy: 1.0 }).unwrap();
    let drift = heisenberg_drift(&dom);
    let source = ScalarField::from_fn(&dom, |i, j| if (i + j) % 2 == 0 { 0.1 } else { -0.1 });
    ProblemSpec::new(dom, norm, drift, source, BoundaryCondition::Neumann).unwrap()
}

fn pdhg(c: &mut Criterion) {
    let mut group = c.benchmark_group("pdhg_step");
    for n in [64usize, 256] {
        let spec = problem(n);
        for (name, par) in [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)] {
            let mut params = SolverParams::for_domain(spec.dom());
            params.par = par;
            let mut state = PrimalDualState::new(&spec);
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| pdhg_step(black_box(&mut state), &spec, &params).unwrap())
            });
        }
    }
    group.finish();
}

fn gap(c: &mut Criterion) {
    let mut group = c.benchmark_group("duality_gap");
    let spec = problem(256);
    let params = SolverParams::for_domain(spec.dom());
    let mut state = PrimalDualState::new(&spec);
    for _ in 0..10 {
        pdhg_step(&mut state, &spec, &params).unwrap();
    }
    group.sample_size(10);
    group.bench_function("256", |b| b.iter(|| duality_gap(black_box(&state), &spec).unwrap()));
    group.finish();
}

criterion_group!(benches, pdhg, gap);
criterion_main!(benches);
