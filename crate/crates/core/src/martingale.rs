//! Monte Carlo checks of the multiparameter martingale property.
//!
//! `E(M(t) | F(s)) = M(s)` is not estimable directly, so each adjacent pair
//! `s ⪯ t` of a chain is tested through two implied moment conditions:
//! the mean of `M(t)` equals `M(0)`, and the increment `M(t) − M(s)` is
//! uncorrelated with a bounded `F(s)`-measurable functional (the count at
//! `s` capped, or for the time-changed family the capped clock at `s`).
//! A copy of `M` with the compensator built from `scale · Λ` is evaluated on
//! the same draws as a negative control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{partial_le, FracOrders, IndexPoint};
use crate::mc::stats::{bin_of, chi_square_independence, quantile_edges};
use crate::mc::{
    run_fold, run_map, CovarianceAccumulator, McConfig, McEstimate, Merge, ReplicaRng,
};
use crate::mpp::{sample_mpp_path, MppModel};
use crate::time_changed::{sample_mfpp_joint, MfppModel};

/// |z| bound for checks expected to hold.
pub const Z_PASS: f64 = 4.0;
/// |z| a negative control must exceed.
pub const Z_CONTROL: f64 = 6.0;
/// Significance for chi-square verdicts.
pub const SIGNIFICANCE: f64 = 0.01;
pub const MIN_REPLICAS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MartingaleFamily {
    CompensatedMpp,
    ExponentialMpp,
    CompensatedMfpp,
}

impl MartingaleFamily {
    pub fn name(self) -> &'static str {
        match self {
            MartingaleFamily::CompensatedMpp => "compensated_mpp",
            MartingaleFamily::ExponentialMpp => "exponential_mpp",
            MartingaleFamily::CompensatedMfpp => "compensated_mfpp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleTestSpec {
    pub family: MartingaleFamily,
    pub model: MppModel,
    /// Fractional orders, required by `CompensatedMfpp`.
    pub orders: Option<FracOrders>,
    /// `c > −1`, required by `ExponentialMpp`.
    pub c: Option<f64>,
    /// `0 = t⁽⁰⁾ ⪯ t⁽¹⁾ ⪯ … ⪯ t⁽ᵏ⁾`, consecutive points distinct.
    pub chain: Vec<IndexPoint>,
    pub mc: McConfig,
    /// Rate multiplier of the corrupted compensator, if a control is wanted.
    pub control_scale: Option<f64>,
    /// Operational-time step for the inverse-stable clocks.
    pub resolution: f64,
    /// Cap applied to the `F(s)` functional.
    pub cap: f64,
}

impl MartingaleTestSpec {
    pub fn new(
        family: MartingaleFamily,
        model: MppModel,
        chain: Vec<IndexPoint>,
        mc: McConfig,
    ) -> Self {
        MartingaleTestSpec {
            family,
            model,
            orders: None,
            c: None,
            chain,
            mc,
            control_scale: None,
            resolution: crate::subordinators::DEFAULT_RESOLUTION,
            cap: 10.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mc.replicas < MIN_REPLICAS {
            return Err(Error::invalid(
                "replicas",
                format!("need at least {MIN_REPLICAS}"),
            ));
        }
        self.validate_model()
    }

    fn validate_model(&self) -> Result<()> {
        validate_chain(&self.chain, self.model.d())?;
        match self.family {
            MartingaleFamily::ExponentialMpp => match self.c {
                Some(c) if c > -1.0 && c.is_finite() => {}
                _ => return Err(Error::invalid("c", "exponential family needs c > -1")),
            },
            MartingaleFamily::CompensatedMfpp => match &self.orders {
                Some(o) if o.dim() == self.model.d() && !o.is_relaxed() => {}
                _ => {
                    return Err(Error::invalid(
                        "alpha",
                        "time-changed family needs one order per axis",
                    ))
                }
            },
            MartingaleFamily::CompensatedMpp => {}
        }
        if let Some(k) = self.control_scale {
            if !(k > 0.0 && k != 1.0) {
                return Err(Error::invalid(
                    "control_scale",
                    "must be positive and different from 1",
                ));
            }
        }
        if self.cap.is_nan() || self.cap <= 0.0 {
            return Err(Error::invalid("cap", "must be positive"));
        }
        Ok(())
    }
}

/// Checks that `chain` starts at the origin and is increasing under `⪯`.
pub fn validate_chain(chain: &[IndexPoint], d: usize) -> Result<()> {
    if chain.len() < 2 {
        return Err(Error::invalid("chain", "need at least two points"));
    }
    if chain.iter().any(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: chain.iter().find(|p| p.dim() != d).map_or(0, |p| p.dim()),
        });
    }
    if !chain[0].is_zero() {
        return Err(Error::NotOrdered("chain must start at the origin".into()));
    }
    for (k, w) in chain.windows(2).enumerate() {
        if !partial_le(&w[0], &w[1])? || w[0] == w[1] {
            return Err(Error::NotOrdered(format!(
                "chain points {k} and {} are not strictly increasing",
                k + 1
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCheck {
    pub index: usize,
    pub t: Vec<f64>,
    pub mean: f64,
    pub expected: f64,
    pub standard_error: f64,
    pub z: f64,
    pub control_mean: Option<f64>,
    pub control_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthogonalityCheck {
    pub from: usize,
    pub to: usize,
    pub correlation: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub family: &'static str,
    pub replicas: u64,
    pub points: Vec<PointCheck>,
    pub orthogonality: Vec<OrthogonalityCheck>,
    /// All martingale checks within `Z_PASS`.
    pub pass: bool,
    /// Every control point with `t ≠ 0` beyond `Z_CONTROL`; `None` without a control.
    pub control_detected: Option<bool>,
}

/// Per-replica values of `M`, the control copy and the functional along the chain.
struct ChainDraw {
    m: Vec<f64>,
    control: Vec<f64>,
    functional: Vec<f64>,
}

#[derive(Clone)]
struct ChainAccumulator {
    m: Vec<McEstimate>,
    control: Vec<McEstimate>,
    orth: Vec<CovarianceAccumulator>,
}

impl Merge for ChainAccumulator {
    fn merge(&mut self, other: Self) {
        self.m.merge(other.m);
        self.control.merge(other.control);
        self.orth.merge(other.orth);
    }
}

fn draw_chain(
    spec: &MartingaleTestSpec,
    control_scale: f64,
    rng: &mut ReplicaRng,
) -> Result<ChainDraw> {
    let rates = spec.model.rates().rates();
    let k = spec.chain.len();
    let mut draw = ChainDraw {
        m: Vec::with_capacity(k),
        control: Vec::with_capacity(k),
        functional: Vec::with_capacity(k),
    };
    match spec.family {
        MartingaleFamily::CompensatedMpp | MartingaleFamily::ExponentialMpp => {
            let horizon = spec.chain.last().expect("validated chain");
            let path = sample_mpp_path(&spec.model, horizon, rng)?;
            let c = spec.c.unwrap_or(0.0);
            let ln1c = (1.0 + c).ln();
            for t in &spec.chain {
                let n = path.eval_coords(t.coords()) as f64;
                let lt = spec.model.rates().dot_unchecked(t);
                let (m, ctl) = match spec.family {
                    MartingaleFamily::CompensatedMpp => (n - lt, n - control_scale * lt),
                    _ => (
                        (n * ln1c - c * lt).exp(),
                        (n * ln1c - c * control_scale * lt).exp(),
                    ),
                };
                draw.m.push(m);
                draw.control.push(ctl);
                draw.functional.push(n.min(spec.cap));
            }
        }
        MartingaleFamily::CompensatedMfpp => {
            let model = MfppModel::new(
                spec.model.rates().clone(),
                spec.orders.clone().expect("validated orders"),
            )?;
            let joint = sample_mfpp_joint(&model, &spec.chain, spec.resolution, rng)?;
            for (n, clocks) in joint.counts.iter().zip(&joint.clocks) {
                let comp: f64 = clocks.iter().zip(rates).map(|(l, r)| l * r).sum();
                draw.m.push(*n as f64 - comp);
                draw.control.push(*n as f64 - control_scale * comp);
                draw.functional
                    .push(clocks.iter().sum::<f64>().min(spec.cap));
            }
        }
    }
    Ok(draw)
}

/// Values of `M` along `spec.chain` for one replica.
pub fn sample_martingale_chain(
    spec: &MartingaleTestSpec,
    rng: &mut ReplicaRng,
) -> Result<Vec<f64>> {
    spec.validate_model()?;
    Ok(draw_chain(spec, 1.0, rng)?.m)
}

/// Runs the mean and orthogonality checks along `spec.chain`.
pub fn run_martingale_test(spec: &MartingaleTestSpec) -> Result<MartingaleReport> {
    spec.validate()?;
    let k = spec.chain.len();
    let control_scale = spec.control_scale.unwrap_or(1.0);
    let init = || ChainAccumulator {
        m: vec![McEstimate::new(); k],
        control: vec![McEstimate::new(); k],
        orth: vec![CovarianceAccumulator::new(); k - 1],
    };
    let acc = run_fold(&spec.mc, init, |rng, _, acc: &mut ChainAccumulator| {
        let draw = draw_chain(spec, control_scale, rng)?;
        for j in 0..k {
            acc.m[j].push(draw.m[j]);
            acc.control[j].push(draw.control[j]);
        }
        for j in 1..k {
            acc.orth[j - 1].push(draw.m[j] - draw.m[j - 1], draw.functional[j - 1]);
        }
        Ok(())
    })?;
    let m0 = match spec.family {
        MartingaleFamily::ExponentialMpp => 1.0,
        _ => 0.0,
    };
    let mut points = Vec::with_capacity(k);
    for (j, t) in spec.chain.iter().enumerate() {
        let e = &acc.m[j];
        let (control_mean, control_z) = match spec.control_scale {
            Some(_) => (Some(acc.control[j].mean), Some(acc.control[j].z_score(m0))),
            None => (None, None),
        };
        points.push(PointCheck {
            index: j,
            t: t.coords().to_vec(),
            mean: e.mean,
            expected: m0,
            standard_error: e.standard_error(),
            z: e.z_score(m0),
            control_mean,
            control_z,
        });
    }
    // The functional at the origin is constant, so pairs starting there carry no information.
    let orthogonality: Vec<OrthogonalityCheck> = (1..k)
        .filter(|&j| !spec.chain[j - 1].is_zero())
        .map(|j| OrthogonalityCheck {
            from: j - 1,
            to: j,
            correlation: acc.orth[j - 1].correlation(),
            z: acc.orth[j - 1].correlation_z(),
        })
        .collect();
    let pass = points.iter().all(|p| p.z.abs() < Z_PASS)
        && orthogonality.iter().all(|o| o.z.abs() < Z_PASS);
    let control_detected = spec.control_scale.map(|_| {
        points
            .iter()
            .filter(|p| p.t.iter().any(|&x| x > 0.0))
            .all(|p| p.control_z.is_some_and(|z| z.abs() > Z_CONTROL))
    });
    Ok(MartingaleReport {
        family: spec.family.name(),
        replicas: spec.mc.replicas,
        points,
        orthogonality,
        pass,
        control_detected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementPairCheck {
    pub first: usize,
    pub second: usize,
    pub correlation: f64,
    pub z: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub replicas: u64,
    pub pairs: Vec<IncrementPairCheck>,
    pub pass: bool,
}

/// Increments of the field along `chain` should be independent.
pub fn increment_independence_test(
    model: &MppModel,
    chain: &[IndexPoint],
    mc: &McConfig,
) -> Result<IndependenceReport> {
    validate_chain(chain, model.d())?;
    let horizon = chain.last().expect("validated chain").clone();
    increment_independence_test_with(chain.len(), mc, |rng| {
        let path = sample_mpp_path(model, &horizon, rng)?;
        Ok(chain.iter().map(|t| path.eval_coords(t.coords())).collect())
    })
}

/// [`increment_independence_test`] for any sampler returning the field's
/// values at `chain_len` chain points.
pub fn increment_independence_test_with<F>(
    chain_len: usize,
    mc: &McConfig,
    sampler: F,
) -> Result<IndependenceReport>
where
    F: Fn(&mut ReplicaRng) -> Result<Vec<u64>> + Sync,
{
    if chain_len < 3 {
        return Err(Error::invalid(
            "chain",
            "need at least three points (two increments)",
        ));
    }
    let increments: Vec<Vec<f64>> = run_map(mc, |rng, _| {
        let values = sampler(rng)?;
        if values.len() != chain_len {
            return Err(Error::DimensionMismatch {
                expected: chain_len,
                got: values.len(),
            });
        }
        Ok(values
            .windows(2)
            .map(|w| w[1] as f64 - w[0] as f64)
            .collect())
    })?;
    let k = chain_len - 1;
    let columns: Vec<Vec<f64>> = (0..k)
        .map(|j| increments.iter().map(|row| row[j]).collect())
        .collect();
    let edges: Vec<Vec<f64>> = columns.iter().map(|c| quantile_edges(c, 8, 0.01)).collect();
    let mut pairs = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let mut cov = CovarianceAccumulator::new();
            for (x, y) in columns[a].iter().zip(&columns[b]) {
                cov.push(*x, *y);
            }
            let (ra, rb) = (edges[a].len() + 1, edges[b].len() + 1);
            let mut table = vec![vec![0u64; rb]; ra];
            for (x, y) in columns[a].iter().zip(&columns[b]) {
                table[bin_of(*x, &edges[a])][bin_of(*y, &edges[b])] += 1;
            }
            let (chi_square, dof, p_value) = if ra >= 2 && rb >= 2 {
                let r = chi_square_independence(&table)?;
                (r.statistic, r.dof, r.p_value)
            } else {
                (0.0, 0, 1.0)
            };
            pairs.push(IncrementPairCheck {
                first: a,
                second: b,
                correlation: cov.correlation(),
                z: cov.correlation_z(),
                chi_square,
                dof,
                p_value,
            });
        }
    }
    let pass = pairs
        .iter()
        .all(|p| p.z.abs() < Z_PASS && p.p_value > SIGNIFICANCE);
    Ok(IndependenceReport {
        replicas: mc.replicas,
        pairs,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> IndexPoint {
        IndexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn chain_validation() {
        assert!(validate_chain(&[pt(&[0.0, 0.0]), pt(&[1.0, 1.0])], 2).is_ok());
        assert!(validate_chain(&[pt(&[0.5, 0.0]), pt(&[1.0, 1.0])], 2).is_err());
        assert!(validate_chain(&[pt(&[0.0, 0.0]), pt(&[1.0, 2.0]), pt(&[2.0, 1.0])], 2).is_err());
        assert!(validate_chain(&[pt(&[0.0, 0.0]), pt(&[1.0, 1.0]), pt(&[1.0, 1.0])], 2).is_err());
        assert!(validate_chain(&[pt(&[0.0])], 1).is_err());
    }

    #[test]
    fn spec_validation() {
        let model = MppModel::from_rates(vec![1.0]).unwrap();
        let chain = vec![pt(&[0.0]), pt(&[1.0])];
        let mut spec = MartingaleTestSpec::new(
            MartingaleFamily::ExponentialMpp,
            model,
            chain,
            McConfig::new(10_000, 1),
        );
        assert!(run_martingale_test(&spec).is_err());
        spec.c = Some(-1.5);
        assert!(run_martingale_test(&spec).is_err());
        spec.c = Some(-0.5);
        spec.mc.replicas = 100;
        assert!(run_martingale_test(&spec).is_err());
    }
}
