//! The multiparameter Poisson process `N(t) = N_1(t_1) + … + N_d(t_d)` built
//! from independent one-parameter Poisson processes, one per axis.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{Error, Result};
use crate::index::{check_dims, partial_le, IndexPoint, RateVector};
use crate::special::ln_gamma_pos;

#[derive(Debug, Clone, PartialEq)]
pub struct MppModel {
    rates: RateVector,
}

impl MppModel {
    pub fn new(rates: RateVector) -> Self {
        MppModel { rates }
    }

    pub fn from_rates(rates: Vec<f64>) -> Result<Self> {
        Ok(MppModel::new(RateVector::new(rates)?))
    }

    pub fn d(&self) -> usize {
        self.rates.dim()
    }

    pub fn rates(&self) -> &RateVector {
        &self.rates
    }

    pub(crate) fn check(&self, t: &IndexPoint) -> Result<()> {
        check_dims(self.d(), t.dim())
    }

    /// `Λ·t`.
    pub fn mean(&self, t: &IndexPoint) -> Result<f64> {
        self.check(t)?;
        Ok(self.rates.dot_unchecked(t))
    }

    /// The model with only the first `d` axes.
    pub fn restricted(&self, d: usize) -> Result<MppModel> {
        Ok(MppModel::new(self.rates.truncated(d)?))
    }
}

/// Jump times of one axis's Poisson process on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingPath {
    pub jump_times: Vec<f64>,
    pub horizon: f64,
}

impl CountingPath {
    /// Number of jumps in `[0, t]`.
    #[inline]
    pub fn count_at(&self, t: f64) -> u64 {
        self.jump_times.partition_point(|&s| s <= t) as u64
    }
}

/// One path of the field: `d` independent counting paths.
#[derive(Debug, Clone, PartialEq)]
pub struct MppPath {
    pub axes: Vec<CountingPath>,
}

impl MppPath {
    /// `N(t) = Σ_i #{jumps of axis i ≤ t_i}`; `t` must lie below the horizon.
    pub fn eval(&self, t: &IndexPoint) -> Result<u64> {
        check_dims(self.axes.len(), t.dim())?;
        if let Some((i, _)) = self
            .axes
            .iter()
            .zip(t.coords())
            .enumerate()
            .find(|(_, (ax, &ti))| ti > ax.horizon)
        {
            return Err(Error::NotOrdered(format!(
                "axis {i} evaluated past its horizon"
            )));
        }
        Ok(self.eval_coords(t.coords()))
    }

    #[inline]
    pub fn eval_coords(&self, t: &[f64]) -> u64 {
        self.axes
            .iter()
            .zip(t)
            .map(|(ax, &ti)| ax.count_at(ti))
            .sum()
    }

    /// Per-axis counts `(N_1(t_1), …, N_d(t_d))`.
    pub fn axis_counts(&self, t: &[f64]) -> Vec<u64> {
        self.axes
            .iter()
            .zip(t)
            .map(|(ax, &ti)| ax.count_at(ti))
            .collect()
    }
}

/// Poisson process with `rate` on `[0, horizon]` from exponential gaps.
pub fn sample_counting_path<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> CountingPath {
    let mut jump_times = Vec::new();
    if horizon > 0.0 {
        let mut s = 0.0;
        loop {
            let gap: f64 = rng.sample(Exp1);
            s += gap / rate;
            if s > horizon {
                break;
            }
            jump_times.push(s);
        }
    }
    CountingPath {
        jump_times,
        horizon,
    }
}

/// Exact path on the rectangle `[0, horizon]`.
pub fn sample_mpp_path<R: Rng + ?Sized>(
    model: &MppModel,
    horizon: &IndexPoint,
    rng: &mut R,
) -> Result<MppPath> {
    model.check(horizon)?;
    Ok(MppPath {
        axes: model
            .rates
            .rates()
            .iter()
            .zip(horizon.coords())
            .map(|(&l, &h)| sample_counting_path(l, h, rng))
            .collect(),
    })
}

/// Poisson variate; zero mean gives zero and astronomically large means
/// (heavy-tailed clocks) return the rounded mean.
#[inline]
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean > 1e15 {
        return mean.round().min(u64::MAX as f64) as u64;
    }
    let draw: f64 = Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng);
    draw as u64
}

/// `P{Poisson(mean) = n}` in log space.
pub fn poisson_pmf(mean: f64, n: u64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    (nf * mean.ln() - mean - ln_gamma_pos(nf + 1.0)).exp()
}

pub fn mpp_pmf(model: &MppModel, t: &IndexPoint, n: u64) -> Result<f64> {
    Ok(poisson_pmf(model.mean(t)?, n))
}

/// `E u^{N(t)} = exp(Λ·t (u − 1))`.
pub fn mpp_pgf(model: &MppModel, t: &IndexPoint, u: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&u) {
        return Err(Error::invalid("u", format!("{u} is outside [-1, 1]")));
    }
    Ok((model.mean(t)? * (u - 1.0)).exp())
}

/// `Cov(N(s), N(t)) = Σ λ_i min(s_i, t_i)`.
pub fn mpp_covariance(model: &MppModel, s: &IndexPoint, t: &IndexPoint) -> Result<f64> {
    model.check(s)?;
    model.check(t)?;
    Ok(model
        .rates
        .rates()
        .iter()
        .zip(s.coords().iter().zip(t.coords()))
        .map(|(l, (a, b))| l * a.min(*b))
        .sum())
}

/// `Λ·s / Λ·t` after checking `s ⪯ t` and `Λ·t > 0`.
fn conditional_ratio(model: &MppModel, s: &IndexPoint, t: &IndexPoint) -> Result<f64> {
    model.check(s)?;
    model.check(t)?;
    if !partial_le(s, t)? {
        return Err(Error::NotOrdered(format!(
            "s = {:?} is not below t = {:?}",
            s.coords(),
            t.coords()
        )));
    }
    let lt = model.rates.dot_unchecked(t);
    if lt == 0.0 {
        return Err(Error::invalid(
            "t",
            "Λ·t = 0, conditioning event has no mass",
        ));
    }
    Ok((model.rates.dot_unchecked(s) / lt).min(1.0))
}

pub fn binomial_pmf(m: u64, p: f64, n: u64) -> f64 {
    if n > m {
        return 0.0;
    }
    if p == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if n == m { 1.0 } else { 0.0 };
    }
    let (mf, nf) = (m as f64, n as f64);
    let ln_choose = ln_gamma_pos(mf + 1.0) - ln_gamma_pos(nf + 1.0) - ln_gamma_pos(mf - nf + 1.0);
    (ln_choose + nf * p.ln() + (mf - nf) * (-p).ln_1p()).exp()
}

/// `P{N(s) = n | N(t) = m}`: Binomial(m, Λ·s/Λ·t) mass at `n`.
pub fn mpp_conditional_pmf(
    model: &MppModel,
    s: &IndexPoint,
    t: &IndexPoint,
    n: u64,
    m: u64,
) -> Result<f64> {
    let p = conditional_ratio(model, s, t)?;
    Ok(binomial_pmf(m, p, n))
}

/// `(E, Var)` of `N(s)` given `N(t) = m`.
pub fn mpp_conditional_moments(
    model: &MppModel,
    s: &IndexPoint,
    t: &IndexPoint,
    m: u64,
) -> Result<(f64, f64)> {
    let p = conditional_ratio(model, s, t)?;
    let mf = m as f64;
    Ok((mf * p, mf * p * (1.0 - p)))
}

/// `E{N(r) N(s) | N(t) = m} = m Λ·r/Λ·t + m(m−1)(Λ·r)(Λ·s)/(Λ·t)²` for
/// `0 ≠ r ⪯ s ⪯ t`.
pub fn mpp_bivariate_conditional_mean(
    model: &MppModel,
    r: &IndexPoint,
    s: &IndexPoint,
    t: &IndexPoint,
    m: u64,
) -> Result<f64> {
    model.check(r)?;
    if r.is_zero() {
        return Err(Error::NotOrdered(
            "r must be strictly above the origin".into(),
        ));
    }
    if !partial_le(r, s)? {
        return Err(Error::NotOrdered(format!(
            "r = {:?} is not below s = {:?}",
            r.coords(),
            s.coords()
        )));
    }
    let ps = conditional_ratio(model, s, t)?;
    let pr = conditional_ratio(model, r, t)?;
    let mf = m as f64;
    Ok(mf * pr + mf * (mf - 1.0) * pr * ps)
}

/// Independent per-axis counts `(N_1(t_1), …, N_d(t_d))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MvMppSample {
    pub counts: Vec<u64>,
}

impl MvMppSample {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn sample_mvmpp<R: Rng + ?Sized>(
    model: &MppModel,
    t: &IndexPoint,
    rng: &mut R,
) -> Result<MvMppSample> {
    model.check(t)?;
    Ok(MvMppSample {
        counts: model
            .rates
            .rates()
            .iter()
            .zip(t.coords())
            .map(|(&l, &ti)| sample_poisson(l * ti, rng))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(v: &[f64]) -> IndexPoint {
        IndexPoint::new(v.to_vec()).unwrap()
    }

    fn model() -> MppModel {
        MppModel::from_rates(vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn pmf_examples() {
        let m = model();
        let zero = IndexPoint::zero(2);
        assert_eq!(mpp_pmf(&m, &zero, 0).unwrap(), 1.0);
        assert_eq!(mpp_pmf(&m, &zero, 4).unwrap(), 0.0);
        let v = mpp_pmf(&m, &pt(&[1.0, 1.0]), 3).unwrap();
        assert!((v - 27.0 * (-3.0f64).exp() / 6.0).abs() < 1e-15);
        let total: f64 = (0..=60)
            .map(|n| mpp_pmf(&m, &pt(&[1.0, 1.0]), n).unwrap())
            .sum();
        assert!(total > 1.0 - 1e-12);
        // Far tail stays finite.
        assert!(mpp_pmf(&m, &pt(&[1e5, 1e5]), 1_000_000)
            .unwrap()
            .is_finite());
    }

    #[test]
    fn pgf_examples() {
        let m = model();
        let t = pt(&[1.0, 1.0]);
        assert_eq!(mpp_pgf(&m, &t, 1.0).unwrap(), 1.0);
        assert!((mpp_pgf(&m, &t, 0.0).unwrap() - mpp_pmf(&m, &t, 0).unwrap()).abs() < 1e-16);
        assert!((mpp_pgf(&m, &t, 0.5).unwrap() - (-1.5f64).exp()).abs() < 1e-15);
        assert!(mpp_pgf(&m, &t, 1.5).is_err());
    }

    #[test]
    fn covariance_examples() {
        let m = model();
        let t = pt(&[1.0, 1.0]);
        assert_eq!(mpp_covariance(&m, &t, &t).unwrap(), 3.0);
        assert_eq!(
            mpp_covariance(&m, &pt(&[1.0, 3.0]), &pt(&[2.0, 1.0])).unwrap(),
            3.0
        );
        assert_eq!(mpp_covariance(&m, &IndexPoint::zero(2), &t).unwrap(), 0.0);
    }

    #[test]
    fn conditional_examples() {
        let m = model();
        let t = pt(&[1.0, 1.0]);
        assert_eq!(mpp_conditional_pmf(&m, &t, &t, 4, 4).unwrap(), 1.0);
        assert_eq!(
            mpp_conditional_pmf(&m, &pt(&[0.5, 0.5]), &t, 5, 4).unwrap(),
            0.0
        );
        // Λ·s / Λ·t = 1/2.
        let s = pt(&[1.0, 0.25]);
        assert!((mpp_conditional_pmf(&m, &s, &t, 1, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!(mpp_conditional_pmf(&m, &pt(&[2.0, 0.0]), &t, 1, 2).is_err());
        assert!(mpp_conditional_pmf(&m, &IndexPoint::zero(2), &IndexPoint::zero(2), 0, 1).is_err());
        // p = 1/3.
        let s = pt(&[1.0, 0.0]);
        let (mean, var) = mpp_conditional_moments(&m, &s, &t, 6).unwrap();
        assert!((mean - 2.0).abs() < 1e-14 && (var - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(mpp_conditional_moments(&m, &t, &t, 6).unwrap(), (6.0, 0.0));
    }

    #[test]
    fn bivariate_examples() {
        let m = MppModel::from_rates(vec![1.0]).unwrap();
        let v =
            mpp_bivariate_conditional_mean(&m, &pt(&[1.0]), &pt(&[2.0]), &pt(&[4.0]), 3).unwrap();
        assert!((v - 1.5).abs() < 1e-15);
        let t = pt(&[4.0]);
        assert_eq!(
            mpp_bivariate_conditional_mean(&m, &t, &t, &t, 5).unwrap(),
            25.0
        );
        assert!(mpp_bivariate_conditional_mean(&m, &pt(&[3.0]), &pt(&[2.0]), &t, 2).is_err());
        assert!(mpp_bivariate_conditional_mean(&m, &pt(&[0.0]), &pt(&[2.0]), &t, 2).is_err());
    }

    #[test]
    fn paths_start_at_zero_and_increase() {
        let m = model();
        let h = pt(&[2.0, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = sample_mpp_path(&m, &h, &mut rng).unwrap();
            assert_eq!(p.eval(&IndexPoint::zero(2)).unwrap(), 0);
            assert!(p.eval(&pt(&[0.5, 1.0])).unwrap() <= p.eval(&pt(&[1.5, 1.0])).unwrap());
            assert!(p.eval(&pt(&[3.0, 1.0])).is_err());
        }
        let zero = sample_mvmpp(&m, &IndexPoint::zero(2), &mut rng).unwrap();
        assert_eq!(zero.counts, vec![0, 0]);
    }
}
