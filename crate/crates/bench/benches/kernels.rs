use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nswlab::rng::SampleKey;
use nswlab::{distinct_tuple_sum, inner_inf_matrix, solve, Crs, Family, MatroidSpec, Procedure, Rounder, SolveConfig};
use nswlab_bench::{fixture, matrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn inner(c: &mut Criterion) {
    let mut g = c.benchmark_group("inner_inf");
    let cfg = SolveConfig::default();
    for (n, m) in [(2, 4), (3, 6), (4, 8)] {
        let a = matrix(n, m, 1);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{m}")), &a, |b, a| {
            b.iter(|| inner_inf_matrix(black_box(a), &cfg).unwrap())
        });
    }
    g.finish();
}

fn distinct(c: &mut Criterion) {
    let mut g = c.benchmark_group("distinct_tuple_sum");
    for n in [3, 6, 9] {
        let a = matrix(n, 2 * n, 2);
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| b.iter(|| distinct_tuple_sum(black_box(a)).unwrap()));
    }
    g.finish();
}

fn outer(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    g.sample_size(20);
    for (fam, name) in [(Family::Rank, "rank"), (Family::Matching, "matching"), (Family::KMatching, "kmatching")] {
        let f = fixture(fam, 3, 6, 5);
        g.bench_function(name, |b| b.iter(|| solve(black_box(&f.program), &SolveConfig::default()).unwrap()));
    }
    g.finish();
}

fn crs(c: &mut Criterion) {
    let mut g = c.benchmark_group("crs_resolve");
    let all: Vec<usize> = (0..8).collect();
    let cases = [
        ("uniform_quota", MatroidSpec::Uniform { ground_size: 8, rank: 3 }),
        (
            "graphic_greedy",
            MatroidSpec::Graphic {
                vertex_count: 5,
                edges: vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2), (1, 3), (2, 4)],
            },
        ),
    ];
    for (name, spec) in cases {
        let crs = Crs::auto(spec.build().unwrap(), vec![0.25; 8], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        g.bench_function(name, |b| b.iter(|| crs.resolve(black_box(&all), &mut rng).unwrap()));
    }
    g.finish();
}

fn rounding(c: &mut Criterion) {
    let mut g = c.benchmark_group("round_sample");
    for (fam, p) in [
        (Family::Rank, Procedure::P1),
        (Family::SumRank, Procedure::P2),
        (Family::Matching, Procedure::P3),
        (Family::KMatching, Procedure::P4),
    ] {
        let f = fixture(fam, 3, 6, 7);
        let r = Rounder::new(&f.instance, &f.program, &f.solution, p).unwrap();
        let mut k = 0u64;
        g.bench_function(format!("procedure_{p}"), |b| {
            b.iter(|| {
                k += 1;
                r.sample(SampleKey::new(0, k))
            })
        });
    }
    g.finish();
}

criterion_group!(benches, inner, distinct, outer, crs, rounding);
criterion_main!(benches);
