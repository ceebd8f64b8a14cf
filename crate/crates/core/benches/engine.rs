use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use shelf_lab::montecarlo::{run_experiment, ExperimentConfig};
use shelf_lab::oracle::enumerate_distribution_with_threads;
use shelf_lab::stats::{inversions_fast, inversions_naive, Statistic};
use shelf_lab::{sample_word, word_to_permutation, ShuffleSpec};

// threads = 1 takes the sequential path; threads = 0 the rayon pool (or the
// sequential fallback when built without the `parallel` feature).
const MODES: [(&str, usize); 2] = [("sequential", 1), ("parallel", 0)];

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    for (statistic, n) in [(Statistic::Inversions, 1000), (Statistic::Descents, 1000)] {
        let spec = ShuffleSpec::new(n, 2).unwrap();
        let samples = 20_000;
        group.throughput(Throughput::Elements(samples));
        for (mode, threads) in MODES {
            let config = ExperimentConfig::new(spec.clone(), statistic, samples, 1)
                .with_chunk_size(1_000)
                .with_threads(threads);
            group.bench_with_input(
                BenchmarkId::new(format!("{statistic}/{mode}"), n),
                &config,
                |b, config| b.iter(|| run_experiment(black_box(config)).unwrap()),
            );
        }
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let spec = ShuffleSpec::new(8, 2).unwrap();
    for (mode, threads) in MODES {
        group.bench_function(BenchmarkId::new(mode, "n8_m2"), |b| {
            b.iter(|| {
                enumerate_distribution_with_threads(&spec, Statistic::Inversions, 1_000_000, threads)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn inversion_counters(c: &mut Criterion) {
    let mut group = c.benchmark_group("inversions");
    let mut rng = shelf_lab::montecarlo::substream(42, 0);
    for n in [64usize, 512, 4096] {
        let spec = ShuffleSpec::new(n, 4).unwrap();
        let perm = word_to_permutation(&sample_word(&spec, &mut rng));
        group.bench_with_input(BenchmarkId::new("naive", n), &perm, |b, p| {
            b.iter(|| inversions_naive(black_box(p)))
        });
        group.bench_with_input(BenchmarkId::new("fenwick", n), &perm, |b, p| {
            b.iter(|| inversions_fast(black_box(p)))
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, oracle, inversion_counters);
criterion_main!(benches);
