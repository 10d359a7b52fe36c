//! Hot kernels timed on the rayon pool and on a single thread.
//!
//! Without the `parallel` feature only the sequential group is built.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shdihedral::sh_model::{self, SHParams};
use shdihedral::symmetry::{GroupName, OrbitTable};
use shdihedral::seqspace::SymSequence;
use shdihedral::{Interval, IntervalMatrix};

fn sequence(order: usize, d: f64) -> SymSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(order as u64);
    let table = OrbitTable::shared(GroupName::D2, order).unwrap();
    let c = table
        .reps()
        .iter()
        .map(|&(a, b)| Interval::point(0.8f64.powi(a.abs().max(b.abs())) * rng.gen_range(-1.0..1.0)))
        .collect();
    SymSequence::from_coeffs(table, d, c).unwrap()
}

fn matrix(n: usize) -> IntervalMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let mids: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    IntervalMatrix::from_fn(n, n, |i, j| Interval::mid_rad(mids[i * n + j], 1e-12))
}

/// Runs `body` either directly or inside a one-thread pool.
fn on_pool<R>(sequential: bool, body: impl FnOnce() -> R + Send) -> R
where
    R: Send,
{
    #[cfg(feature = "parallel")]
    {
        if sequential {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            return pool.install(body);
        }
    }
    let _ = sequential;
    body()
}

fn modes() -> Vec<(&'static str, bool)> {
    if cfg!(feature = "parallel") {
        vec![("parallel", false), ("sequential", true)]
    } else {
        vec![("sequential", true)]
    }
}

fn kernels(c: &mut Criterion) {
    let u = sequence(20, 20.0);
    let m = matrix(200);
    let p = SHParams::from_f64(0.24, -1.6, 1.0, 20.0, 2).unwrap();

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (mode, seq) in modes() {
        group.bench_with_input(BenchmarkId::new("convolve_n20", mode), &seq, |b, &seq| {
            b.iter(|| on_pool(seq, || u.convolve(&u, 40).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("residual_n20", mode), &seq, |b, &seq| {
            b.iter(|| on_pool(seq, || sh_model::residual_f(&u, &p).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("conv_operator_n20", mode), &seq, |b, &seq| {
            b.iter(|| on_pool(seq, || u.conv_operator_matrix(15).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("norm2_upper_200", mode), &seq, |b, &seq| {
            b.iter(|| on_pool(seq, || m.norm2_upper()))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
