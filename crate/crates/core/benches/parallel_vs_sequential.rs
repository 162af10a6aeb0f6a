//! One worker thread against the default rayon pool on the three
//! data-parallel workloads: a classification sweep, a bound table and a
//! witness verification.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use osserman_lab::criteria;
use osserman_lab::envelopes::{Nonlinearity, Profile, ProblemSpec};
use osserman_lab::estimates::{BoundKind, EstimateOptions, GrowthBound};
use osserman_lab::par;
use osserman_lab::powerlog::{q, qi, PowerLogTerm, Rational};
use osserman_lab::radial::{self, RadialCandidate};
use num_traits::Zero;

fn spec(lambda: Rational, l: Rational) -> ProblemSpec {
    let t = |a| PowerLogTerm::new(1.0, a, Rational::zero(), Rational::zero()).unwrap();
    ProblemSpec::new(qi(2), Profile::term(t(qi(0))), Profile::term(t(l)), Nonlinearity::Power { lambda })
}

fn sweep(grid: &[(Rational, Rational)]) -> usize {
    par::map(grid, |&(lambda, l)| criteria::evaluate(&spec(lambda, l)).outcome)
        .into_iter()
        .filter(|o| *o == criteria::Outcome::Trivial)
        .count()
}

fn table(bound: &GrowthBound, radii: &[f64]) -> f64 {
    par::map(radii, |&r| bound.invert(r).ok().and_then(|v| v.ln_m()).unwrap_or(0.0)).iter().sum()
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("1 thread", one), ("default pool", all)]
}

fn bench(c: &mut Criterion) {
    let grid: Vec<_> = (0..16)
        .flat_map(|i| (0..16).map(move |j| (q(i, 4), q(j - 12, 4))))
        .collect();
    let lower = spec(q(1, 2), qi(0));
    let v = criteria::evaluate(&lower);
    let bound = GrowthBound::from_spec(&lower, BoundKind::Lower, &EstimateOptions::default(), v.stabilized_at).unwrap();
    let radii = radial::geometric_radii(bound.r_star, 1e6, 400);
    let witness_spec = spec(qi(2), qi(-2));
    let witness = RadialCandidate::ClosedForm(criteria::sharpness_witness(&witness_spec).unwrap());

    for (name, pool) in pools() {
        let mut g = c.benchmark_group(name);
        g.sample_size(10);
        g.bench_function(BenchmarkId::new("sweep", grid.len()), |b| b.iter(|| pool.install(|| sweep(black_box(&grid)))));
        g.bench_function(BenchmarkId::new("bounds table", radii.len()), |b| {
            b.iter(|| pool.install(|| table(black_box(&bound), &radii)))
        });
        g.bench_function(BenchmarkId::new("verify", 10_000), |b| {
            b.iter(|| pool.install(|| radial::verify_witness(&witness, &witness_spec, 1.0, 1e6, 10_000, 1e-9).unwrap()))
        });
        g.finish();
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
