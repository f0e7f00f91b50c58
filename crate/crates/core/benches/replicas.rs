//! Sequential against rayon replica folds on three kernels of different cost.
//!
//! Without the `parallel` feature both arms run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use mpp_lab::mc::{run_fold_with, Execution, Histogram, McConfig, McEstimate, ReplicaRng};
use mpp_lab::mpp::{sample_mpp_path, MppModel};
use mpp_lab::time_changed::{sample_mfpp, MfppModel};
use mpp_lab::{FracOrders, IndexPoint, RateVector, Result};

fn bench_kernel<K>(c: &mut Criterion, name: &str, replicas: u64, kernel: K)
where
    K: Fn(&mut ReplicaRng) -> Result<f64> + Sync,
{
    let config = McConfig::new(replicas, 1);
    let mut group = c.benchmark_group(name);
    group.throughput(Throughput::Elements(replicas));
    group.sample_size(10);
    for (label, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_with_input(BenchmarkId::new(label, replicas), &exec, |b, &exec| {
            b.iter(|| {
                run_fold_with(&config, exec, McEstimate::new, |rng, _, acc| {
                    acc.push(kernel(rng)?);
                    Ok(())
                })
                .map(black_box)
            })
        });
    }
    group.finish();
}

fn replicas(c: &mut Criterion) {
    let model = MppModel::from_rates(vec![1.0, 2.0]).unwrap();
    let t = IndexPoint::new(vec![1.0, 1.0]).unwrap();
    bench_kernel(c, "mpp_path", 100_000, |rng| {
        Ok(sample_mpp_path(&model, &t, rng)?.eval(&t)? as f64)
    });

    let mfpp = MfppModel::new(
        RateVector::new(vec![1.0, 1.0]).unwrap(),
        FracOrders::new(vec![0.5, 0.5]).unwrap(),
    )
    .unwrap();
    bench_kernel(c, "mfpp_marginal", 100_000, |rng| {
        Ok(sample_mfpp(&mfpp, &t, rng)? as f64)
    });

    let config = McConfig::new(200_000, 2);
    let mut group = c.benchmark_group("histogram_merge");
    group.sample_size(10);
    for (label, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        group.bench_function(label, |b| {
            b.iter(|| {
                run_fold_with(&config, exec, Histogram::new, |rng, _, h| {
                    h.push(sample_mpp_path(&model, &t, rng)?.eval(&t)? as usize);
                    Ok(())
                })
                .map(black_box)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, replicas);
criterion_main!(benches);
