use mpp_lab::martingale::{
    increment_independence_test, increment_independence_test_with, run_martingale_test,
    sample_martingale_chain, validate_chain, MartingaleFamily, MartingaleTestSpec,
};
use mpp_lab::mc::{replica_rng, McConfig};
use mpp_lab::mpp::{sample_poisson, MppModel};
use mpp_lab::{FracOrders, IndexPoint};
use proptest::prelude::*;

fn pt(c: &[f64]) -> IndexPoint {
    IndexPoint::new(c.to_vec()).unwrap()
}

fn chain() -> Vec<IndexPoint> {
    vec![
        pt(&[0.0, 0.0]),
        pt(&[0.5, 0.5]),
        pt(&[1.0, 1.0]),
        pt(&[1.5, 2.0]),
    ]
}

fn model() -> MppModel {
    MppModel::from_rates(vec![1.0, 2.0]).unwrap()
}

fn spec(family: MartingaleFamily, replicas: u64) -> MartingaleTestSpec {
    let mut s = MartingaleTestSpec::new(family, model(), chain(), McConfig::new(replicas, 2024));
    s.c = Some(-0.5);
    s.orders = Some(FracOrders::new(vec![0.6, 0.8]).unwrap());
    s.resolution = 1e-2;
    s
}

#[test]
fn compensated_mpp_is_a_martingale_and_control_is_caught() {
    let mut s = spec(MartingaleFamily::CompensatedMpp, 100_000);
    s.control_scale = Some(1.2);
    let r = run_martingale_test(&s).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.points.len(), 4);
    assert_eq!(r.control_detected, Some(true));
    assert!(!r.orthogonality.is_empty());
}

#[test]
fn exponential_mpp_has_unit_mean() {
    let s = spec(MartingaleFamily::ExponentialMpp, 100_000);
    let r = run_martingale_test(&s).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.points.iter().all(|p| p.expected == 1.0));
    assert_eq!(r.control_detected, None);
}

#[test]
fn compensated_mfpp_is_a_martingale() {
    let mut s = spec(MartingaleFamily::CompensatedMfpp, 20_000);
    s.control_scale = Some(1.5);
    let r = run_martingale_test(&s).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.control_detected, Some(true));
}

#[test]
fn increments_are_independent() {
    let r = increment_independence_test(&model(), &chain(), &McConfig::new(50_000, 5)).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.pairs.len(), 3);
}

#[test]
fn correlated_increments_are_detected() {
    // Field values at three chain points whose second increment copies half of the first.
    let r = increment_independence_test_with(3, &McConfig::new(50_000, 6), |rng| {
        let a = sample_poisson(2.0, rng);
        let b = sample_poisson(1.0, rng) + a / 2;
        Ok(vec![0, a, a + b])
    })
    .unwrap();
    assert!(!r.pass);
    assert!(r.pairs[0].p_value < 1e-6);
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(run_martingale_test(&spec(MartingaleFamily::CompensatedMpp, 100)).is_err());

    let mut s = spec(MartingaleFamily::ExponentialMpp, 20_000);
    s.c = Some(-1.0);
    assert!(run_martingale_test(&s).is_err());

    let mut s = spec(MartingaleFamily::CompensatedMfpp, 20_000);
    s.orders = None;
    assert!(run_martingale_test(&s).is_err());

    let mut s = spec(MartingaleFamily::CompensatedMpp, 20_000);
    s.control_scale = Some(1.0);
    assert!(run_martingale_test(&s).is_err());

    assert!(validate_chain(&[pt(&[0.0, 0.0])], 2).is_err());
    assert!(validate_chain(&[pt(&[0.1, 0.0]), pt(&[1.0, 1.0])], 2).is_err());
    assert!(validate_chain(&[pt(&[0.0, 0.0]), pt(&[1.0, 0.5]), pt(&[0.5, 1.0])], 2).is_err());
    assert!(validate_chain(&[pt(&[0.0, 0.0]), pt(&[1.0, 1.0]), pt(&[1.0, 1.0])], 2).is_err());
    assert!(validate_chain(&[pt(&[0.0]), pt(&[1.0])], 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chain_starts_at_initial_value(seed in any::<u64>(), c in -0.9f64..3.0) {
        let mut rng = replica_rng(seed, 0);
        let comp = sample_martingale_chain(&spec(MartingaleFamily::CompensatedMpp, 20_000), &mut rng).unwrap();
        prop_assert_eq!(comp.len(), 4);
        prop_assert_eq!(comp[0], 0.0);
        let mut s = spec(MartingaleFamily::ExponentialMpp, 20_000);
        s.c = Some(c);
        let exp = sample_martingale_chain(&s, &mut rng).unwrap();
        prop_assert_eq!(exp[0], 1.0);
        prop_assert!(exp.iter().all(|v| *v > 0.0));
    }

    // N(t) − Λ·t ≥ −Λ·t, with equality only when no jump occurred.
    #[test]
    fn compensated_values_respect_lower_bound(seed in any::<u64>()) {
        let s = spec(MartingaleFamily::CompensatedMpp, 20_000);
        let v = sample_martingale_chain(&s, &mut replica_rng(seed, 1)).unwrap();
        for (m, p) in v.iter().zip(chain()) {
            prop_assert!(*m >= -model().mean(&p).unwrap() - 1e-12);
        }
    }
}
