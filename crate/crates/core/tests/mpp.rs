use mpp_lab::mc::stats::chi_square_gof;
use mpp_lab::mc::{
    replica_rng, run_fold, run_histogram, run_replicas, CovarianceAccumulator, McConfig,
};
use mpp_lab::mpp::{
    binomial_pmf, mpp_bivariate_conditional_mean, mpp_conditional_pmf, mpp_covariance, mpp_pgf,
    mpp_pmf, poisson_pmf, sample_mpp_path, sample_mvmpp, MppModel,
};
use mpp_lab::{Error, IndexPoint};
use proptest::prelude::*;

fn pt(c: &[f64]) -> IndexPoint {
    IndexPoint::new(c.to_vec()).unwrap()
}

fn model() -> MppModel {
    MppModel::from_rates(vec![1.0, 2.0]).unwrap()
}

/// `E{N(r)N(s) | N(t)=m}` by summing over the trinomial split of the `m`
/// points into `r`, `s \ r` and `t \ s`.
fn trinomial_mean(pr: f64, ps: f64, m: u64) -> f64 {
    let (a, b, c) = (pr, ps - pr, 1.0 - ps);
    let mut total = 0.0;
    let fact = |k: u64| (1..=k).map(|v| v as f64).product::<f64>();
    for i in 0..=m {
        for j in 0..=m - i {
            let k = m - i - j;
            let w = fact(m) / (fact(i) * fact(j) * fact(k))
                * a.powi(i as i32)
                * b.powi(j as i32)
                * c.powi(k as i32);
            total += w * (i as f64) * ((i + j) as f64);
        }
    }
    total
}

#[test]
fn path_counts_follow_poisson() {
    let cfg = McConfig::new(100_000, 21);
    let t = pt(&[1.0, 1.0]);
    let m = model();
    let hist = run_histogram(&cfg, |rng| {
        Ok(sample_mpp_path(&m, &t, rng)?.eval(&t)? as usize)
    })
    .unwrap();
    let gof = chi_square_gof(&hist.counts, |k| Ok(poisson_pmf(3.0, k as u64)), 5.0).unwrap();
    assert!(gof.p_value > 0.001, "p {}", gof.p_value);
}

#[test]
fn bivariate_mean_matches_enumeration() {
    let m = model();
    let configs = [
        (pt(&[0.2, 0.3]), pt(&[0.5, 0.5]), pt(&[1.0, 1.0])),
        (pt(&[0.1, 0.0]), pt(&[0.4, 0.9]), pt(&[2.0, 1.0])),
        (pt(&[0.5, 0.5]), pt(&[0.5, 0.5]), pt(&[0.5, 3.0])),
    ];
    for (r, s, t) in &configs {
        let lt = m.mean(t).unwrap();
        let (pr, ps) = (m.mean(r).unwrap() / lt, m.mean(s).unwrap() / lt);
        for k in 0..=6 {
            let closed = mpp_bivariate_conditional_mean(&m, r, s, t, k).unwrap();
            let brute = trinomial_mean(pr, ps, k);
            assert!((closed - brute).abs() < 1e-12, "m={k}: {closed} vs {brute}");
        }
    }
}

#[test]
fn covariance_matches_simulation() {
    let m = model();
    let (s, t) = (pt(&[0.4, 1.0]), pt(&[1.0, 0.5]));
    let horizon = pt(&[1.0, 1.0]);
    let cfg = McConfig::new(100_000, 4);
    let acc = run_fold(&cfg, CovarianceAccumulator::new, |rng, _, acc| {
        let p = sample_mpp_path(&m, &horizon, rng)?;
        acc.push(p.eval(&s)? as f64, p.eval(&t)? as f64);
        Ok(())
    })
    .unwrap();
    let want = mpp_covariance(&m, &s, &t).unwrap();
    assert!((want - 1.4).abs() < 1e-15);
    // SE of the sample covariance ≈ sqrt((Var N(s) Var N(t) + Cov²) / n).
    let se = ((2.4 * 2.0 + want * want) / 1e5f64).sqrt();
    assert!((acc.covariance() - want).abs() < 4.0 * se);
}

#[test]
fn pgf_matches_simulation() {
    let m = model();
    let t = pt(&[0.7, 0.6]);
    let cfg = McConfig::new(100_000, 8);
    for u in [0.2f64, 0.5, 0.8] {
        let est = run_replicas(&cfg, |rng| {
            Ok(u.powi(sample_mvmpp(&m, &t, rng)?.total() as i32))
        })
        .unwrap();
        assert!(est.z_score(mpp_pgf(&m, &t, u).unwrap()).abs() < 4.0);
    }
}

#[test]
fn rejects_invalid_requests() {
    let m = model();
    assert!(matches!(
        mpp_pmf(&m, &pt(&[1.0]), 0),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        mpp_conditional_pmf(&m, &pt(&[2.0, 0.0]), &pt(&[1.0, 1.0]), 0, 1),
        Err(Error::NotOrdered(_))
    ));
    assert!(mpp_bivariate_conditional_mean(
        &m,
        &pt(&[0.0, 0.0]),
        &pt(&[1.0, 1.0]),
        &pt(&[1.0, 1.0]),
        2
    )
    .is_err());
    assert!(MppModel::from_rates(vec![1.0, -1.0]).is_err());
    assert!(mpp_pgf(&m, &pt(&[1.0, 1.0]), 1.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_normalizes(l1 in 0.01f64..5.0, l2 in 0.01f64..5.0, t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
        let m = MppModel::from_rates(vec![l1, l2]).unwrap();
        let t = pt(&[t1, t2]);
        let total: f64 = (0..200).map(|n| mpp_pmf(&m, &t, n).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((mpp_pgf(&m, &t, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conditional_law_is_binomial(frac in 0.0f64..1.0, k in 0u64..15) {
        let m = model();
        let t = pt(&[1.0, 2.0]);
        let s = pt(&[frac, 2.0 * frac]);
        let mut total = 0.0;
        for n in 0..=k {
            let v = mpp_conditional_pmf(&m, &s, &t, n, k).unwrap();
            prop_assert!((v - binomial_pmf(k, frac, n)).abs() < 1e-12);
            total += v;
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn paths_increase_along_order(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let m = model();
        let horizon = pt(&[2.0, 2.0]);
        let p = sample_mpp_path(&m, &horizon, &mut replica_rng(seed, 0)).unwrap();
        let lo = p.eval(&pt(&[a, b])).unwrap();
        let hi = p.eval(&pt(&[a + 0.5, b + 1.0])).unwrap();
        prop_assert!(lo <= hi);
        prop_assert_eq!(p.eval(&IndexPoint::zero(2)).unwrap(), 0);
    }
}
