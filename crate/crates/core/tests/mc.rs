use mpp_lab::mc::stats::{
    chi_square_gof, chi_square_homogeneity, chi_square_independence, correlation, ks_one_sample,
    ks_two_sample, normal_cdf,
};
use mpp_lab::mc::{
    replica_rng, replica_seed, run_fold_with, run_histogram, run_map, run_replicas, Execution,
    McConfig, McEstimate,
};
use mpp_lab::mpp::{poisson_pmf, sample_poisson};
use mpp_lab::Error;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn poisson_kernel(
    mean: f64,
) -> impl Fn(&mut mpp_lab::mc::ReplicaRng) -> mpp_lab::Result<f64> + Sync {
    move |rng| Ok(sample_poisson(mean, rng) as f64)
}

#[test]
fn constant_kernel_has_zero_error() {
    let est = run_replicas(&McConfig::new(10_000, 1), |_| Ok(1.0)).unwrap();
    assert_eq!(est.mean, 1.0);
    assert_eq!(est.standard_error(), 0.0);
}

#[test]
fn poisson_kernel_mean() {
    let est = run_replicas(&McConfig::new(1_000_000, 2), poisson_kernel(3.0)).unwrap();
    assert!(est.z_score(3.0).abs() < 4.0, "z {}", est.z_score(3.0));
    assert!((est.variance() - 3.0).abs() < 0.05);
}

#[test]
fn identical_across_worker_counts() {
    let base = McConfig::new(20_000, 77);
    let results: Vec<(McEstimate, Vec<f64>)> = [1usize, 4, 16]
        .iter()
        .map(|&w| {
            let cfg = base.clone().with_workers(w);
            let est = run_replicas(&cfg, poisson_kernel(2.5)).unwrap();
            let draws = run_map(&cfg, |rng, _| Ok(rng.random::<f64>())).unwrap();
            (est, draws)
        })
        .collect();
    for r in &results[1..] {
        assert_eq!(r.0.mean.to_bits(), results[0].0.mean.to_bits());
        assert_eq!(r.0.variance().to_bits(), results[0].0.variance().to_bits());
        assert_eq!(r.1, results[0].1);
    }
}

#[test]
fn sequential_and_parallel_folds_match() {
    let cfg = McConfig::new(9_000, 5);
    let fold = |exec| {
        run_fold_with(&cfg, exec, McEstimate::new, |rng, _, acc| {
            acc.push(rng.sample::<f64, _>(StandardNormal));
            Ok(())
        })
        .unwrap()
    };
    let a = fold(Execution::Sequential);
    let b = fold(Execution::Parallel);
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.n, b.n);
}

#[test]
fn replica_streams_are_keyed_by_index() {
    let draws = run_map(&McConfig::new(5_000, 9), |rng, i| {
        Ok((i, rng.random::<u64>()))
    })
    .unwrap();
    for (i, (idx, v)) in draws.iter().enumerate().step_by(997) {
        assert_eq!(*idx, i as u64);
        assert_eq!(*v, replica_rng(9, i as u64).random::<u64>());
    }
    assert_ne!(replica_seed(9, 0), replica_seed(9, 1));
    assert_ne!(replica_seed(9, 0), replica_seed(10, 0));
}

#[test]
fn kernel_errors_abort() {
    let err = run_replicas(&McConfig::new(5_000, 1), |rng| {
        if rng.random::<f64>() < 1e-3 {
            Err(Error::Statistics("boom".into()))
        } else {
            Ok(0.0)
        }
    });
    assert!(err.is_err());
    assert!(run_replicas(&McConfig::new(0, 1), |_| Ok(0.0)).is_err());
    assert!(run_replicas(&McConfig::new(10, 1).with_workers(0), |_| Ok(0.0)).is_err());
}

#[test]
fn chi_square_accepts_truth_and_rejects_shift() {
    let cfg = McConfig::new(100_000, 13);
    let hist = run_histogram(&cfg, |rng| Ok(sample_poisson(3.0, rng) as usize)).unwrap();
    let same = chi_square_gof(&hist.counts, |k| Ok(poisson_pmf(3.0, k as u64)), 5.0).unwrap();
    assert!(same.p_value > 0.001);
    let shifted = chi_square_gof(&hist.counts, |k| Ok(poisson_pmf(4.0, k as u64)), 5.0).unwrap();
    assert!(shifted.p_value < 1e-6);

    let other = run_histogram(&cfg.clone().with_seed(14), |rng| {
        Ok(sample_poisson(3.2, rng) as usize)
    })
    .unwrap();
    let homog = chi_square_homogeneity(&hist.counts, &other.counts, 5.0).unwrap();
    assert!(homog.p_value < 1e-6);
}

#[test]
fn ks_power_and_null() {
    let cfg = McConfig::new(20_000, 15);
    let z = run_map(&cfg, |rng, _| Ok(rng.sample::<f64, _>(StandardNormal))).unwrap();
    assert!(ks_one_sample(&z, normal_cdf).unwrap().p_value > 0.001);
    let shifted: Vec<f64> = z.iter().map(|x| x + 0.1).collect();
    assert!(ks_one_sample(&shifted, normal_cdf).unwrap().p_value < 1e-6);
    let w = run_map(&cfg.clone().with_seed(16), |rng, _| {
        Ok(rng.sample::<f64, _>(StandardNormal))
    })
    .unwrap();
    assert!(ks_two_sample(&z, &w).unwrap().p_value > 0.001);
    assert!(ks_two_sample(&shifted, &w).unwrap().p_value < 1e-6);
}

#[test]
fn contingency_detects_dependence() {
    let mut rng = replica_rng(3, 0);
    let mut independent = vec![vec![0u64; 3]; 3];
    let mut dependent = vec![vec![0u64; 3]; 3];
    for _ in 0..30_000 {
        let a = rng.random_range(0..3usize);
        let b = rng.random_range(0..3usize);
        independent[a][b] += 1;
        let c = if rng.random::<f64>() < 0.2 { a } else { b };
        dependent[a][c] += 1;
    }
    assert!(chi_square_independence(&independent).unwrap().p_value > 0.001);
    assert!(chi_square_independence(&dependent).unwrap().p_value < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn merged_estimate_matches_direct(xs in prop::collection::vec(-1e3f64..1e3, 2..5000), seed in any::<u64>()) {
        let direct = McEstimate::from_slice(&xs);
        let folded = run_map(&McConfig::new(xs.len() as u64, seed), |_, i| Ok(xs[i as usize])).unwrap();
        prop_assert_eq!(&folded, &xs);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        prop_assert!((direct.mean - mean).abs() <= 1e-9 * mean.abs().max(1.0));
    }

    #[test]
    fn correlation_is_bounded_and_symmetric(xs in prop::collection::vec(-10f64..10.0, 3..200), shift in -5f64..5.0) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * 0.5 + shift + (i % 7) as f64).collect();
        let r = correlation(&xs, &ys);
        prop_assume!(r.is_finite());
        prop_assert!(r.abs() <= 1.0 + 1e-12);
        prop_assert!((r - correlation(&ys, &xs)).abs() < 1e-12);
    }
}
