use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qrewind::oracles::KeyedUnitaryFamily;
use qrewind::prs::PrsInstance;
use qrewind::qpke::{correctness_experiment, SchemeParams};
use qrewind::rewinding::{build_p, eigen_decompose, rewind_until_success, spread_instance};
use qrewind::statevector::haar_state;
use qrewind::SimRng;

fn prs_instance(m: usize) -> PrsInstance {
    let fam = KeyedUnitaryFamily::haar(3, 3, &mut SimRng::new(1)).unwrap();
    PrsInstance::new(Arc::new(fam), m, m).unwrap()
}

fn apply_u_prs(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply_u_prs");
    for m in 1..=3 {
        let inst = prs_instance(m);
        let psi = haar_state(3, &mut SimRng::new(2)).unwrap();
        let state = inst.amplifier().embed(&inst.challenge_copies(&psi).unwrap()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &state, |b, s| {
            b.iter(|| inst.u_prs().apply(black_box(s)).unwrap())
        });
    }
    g.finish();
}

fn rewind(c: &mut Criterion) {
    let mut g = c.benchmark_group("rewind_eigenvector");
    for q in [0.5, 0.125] {
        let spread = spread_instance(2, &[q; 4], &mut SimRng::new(3)).unwrap();
        let input = spread.eigenvectors[0].clone();
        let mut rng = SimRng::new(4);
        g.bench_with_input(BenchmarkId::from_parameter(q), &input, |b, s| {
            b.iter(|| rewind_until_success(&spread.instance, black_box(s), 100_000, &mut rng).unwrap())
        });
    }
    g.finish();
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_p_and_eigen");
    for m in 1..=2 {
        let inst = prs_instance(m);
        g.bench_function(BenchmarkId::from_parameter(m), |b| {
            b.iter(|| {
                let p = build_p(inst.amplifier()).unwrap();
                eigen_decompose(inst.amplifier(), &p).unwrap()
            })
        });
    }
    g.finish();
}

fn correctness(c: &mut Criterion) {
    let params = SchemeParams::toy(4, 12, 5).unwrap();
    let rng = SimRng::new(6);
    c.bench_function("qpke_correctness_100", |b| {
        b.iter(|| correctness_experiment(&params, 100, &rng).unwrap())
    });
}

criterion_group!(benches, apply_u_prs, rewind, spectral, correctness);
criterion_main!(benches);
