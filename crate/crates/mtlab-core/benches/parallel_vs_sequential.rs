//! Wall-time comparison of the data-parallel reduction against a single
//! worker on the two hot paths: Gram-matrix assembly and Monte-Carlo
//! sampling batches. Results are bitwise identical across all variants (the
//! reduction tree is fixed); only the timing differs.
//!
//! With `--no-default-features` the same benchmarks run in their sequential
//! build, so the suite doubles as a regression harness for the fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mtlab_core::funcspace::{self, FamilyDescriptor};
use mtlab_core::sphere::QuadratureRule;
use mtlab_core::{gram, montecarlo};
use std::hint::black_box;
use std::sync::Arc;

/// Run `f` on a scoped pool with `threads` workers (parallel build), or
/// directly (sequential build, where the worker count is moot).
#[cfg(feature = "parallel")]
fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("scoped pool")
        .install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R>(_threads: usize, f: impl FnOnce() -> R) -> R {
    f()
}

fn thread_counts() -> Vec<usize> {
    if cfg!(feature = "parallel") {
        vec![1, std::thread::available_parallelism().map_or(4, |n| n.get())]
    } else {
        vec![1]
    }
}

fn bench_gram_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram_assembly_n64");
    group.sample_size(10);
    let n = 64;
    let phi = funcspace::make_family(&FamilyDescriptor::Random {
        l_max: 4,
        energy: 1.0,
        seed: 7,
    })
    .unwrap();
    let rule = Arc::new(QuadratureRule::default_for(n, 4).unwrap());
    let grid = funcspace::evaluate(&phi, &rule).unwrap();
    for threads in thread_counts() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| with_threads(t, || black_box(gram::gram_matrix(black_box(&grid), n))))
        });
    }
    group.finish();
}

fn bench_mc_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("mc_batch_n2_2000");
    group.sample_size(10);
    let phi = funcspace::make_family(&FamilyDescriptor::Random {
        l_max: 2,
        energy: 0.5,
        seed: 3,
    })
    .unwrap();
    for threads in thread_counts() {
        group.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |b, &t| {
            b.iter(|| {
                with_threads(t, || black_box(montecarlo::mc_estimate_b(2, black_box(&phi), 2000, 11)))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gram_assembly, bench_mc_batch);
criterion_main!(benches);
