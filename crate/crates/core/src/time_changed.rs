//! Time-changed Poisson fields.
//!
//! * Space-fractional: `N(S(t))` with one stable subordinator per axis, all
//!   run at the same one-parameter time `t`.
//! * Multiparameter fractional (MFPP): `N_1(L_1(t_1)) + … + N_d(L_d(t_d))`
//!   with independent inverse stable subordinators.
//! * The fractional variant whose pmf is `(Λ·t)^n / (Γ(nα+1) E_{α,1}(Λ·t))`.
//!
//! Multi-axis pmfs are convolutions of the per-axis marginals; the
//! composition sums over `Θ(n,d)` are kept as small-case oracles.
//!
//! MFPP covariance: the axes are independent, so
//! `Cov(N_α(s), N_α(t)) = Σ_i Cov(N_i(L_i(s_i)), N_i(L_i(t_i)))`, and for one
//! axis conditioning on the clock gives `λ E L(min) + λ² Cov(L(s), L(t))`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::index::{check_dims, compositions, FracOrders, IndexPoint, RateVector};
use crate::mpp::{poisson_pmf, sample_counting_path, sample_poisson};
use crate::special::{
    gamma, ln_gamma_pos, log_gamma_ratio, mittag_leffler, mittag_leffler_scaled, GammaRatio,
    MLParams,
};
use crate::subordinators::{
    covariance_inverse_stable, inverse_marginal_from, inverse_stable_mean,
    sample_inverse_stable_path, StableSampler,
};

/// Largest `λ^α t` accepted by the space-fractional series.
pub const SFPP_MAX_ARGUMENT: f64 = 30.0;
const SFPP_MAX_TERMS: usize = 5_000;
const SFPP_MAX_ERROR: f64 = 1e-8;

fn check_orders(rates: &RateVector, orders: &FracOrders) -> Result<()> {
    check_dims(rates.dim(), orders.dim())?;
    if orders.is_relaxed() {
        return Err(Error::invalid(
            "alpha",
            "integral orders are not fractional indices",
        ));
    }
    Ok(())
}

/// `Σ_{k≤n} a[k] b[n−k]` for all `n < len`.
pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len().min(b.len());
    (0..len)
        .map(|n| (0..=n).map(|k| a[k] * b[n - k]).sum())
        .collect()
}

/// `Σ_{Θ(n,d)} Π_i marginals[i][n_i]`, the enumeration form of the convolution.
pub fn composition_sum(marginals: &[Vec<f64>], n: usize) -> f64 {
    compositions(n, marginals.len())
        .map(|c| {
            c.parts()
                .iter()
                .zip(marginals)
                .map(|(&k, m)| m[k])
                .product::<f64>()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfppModel {
    rates: RateVector,
    orders: FracOrders,
}

impl SfppModel {
    pub fn new(rates: RateVector, orders: FracOrders) -> Result<Self> {
        check_orders(&rates, &orders)?;
        Ok(SfppModel { rates, orders })
    }

    pub fn d(&self) -> usize {
        self.rates.dim()
    }

    pub fn rates(&self) -> &RateVector {
        &self.rates
    }

    pub fn orders(&self) -> &FracOrders {
        &self.orders
    }

    fn axes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rates
            .rates()
            .iter()
            .copied()
            .zip(self.orders.orders().iter().copied())
    }

    /// Rejects times where some axis has `λ_i^{α_i} t > 30`.
    pub fn check_time(&self, t: f64) -> Result<()> {
        for (l, a) in self.axes() {
            check_sfpp_argument(l, a, t)?;
        }
        Ok(())
    }
}

fn check_sfpp_argument(lambda: f64, alpha: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(
            "t",
            format!("{t} must be a finite nonnegative time"),
        ));
    }
    let x = lambda.powf(alpha) * t;
    if x > SFPP_MAX_ARGUMENT {
        return Err(Error::invalid(
            "t",
            format!(
                "λ^α t = {x} exceeds {SFPP_MAX_ARGUMENT}; the alternating series is unusable there"
            ),
        ));
    }
    Ok(x)
}

/// A series value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub error_estimate: f64,
    pub terms: usize,
}

/// `((−1)^n/n!) Σ_r (−x)^r Γ(αr+1) / (r! Γ(αr+1−n))` with `x = λ^α t`,
/// summed in log space; terms whose denominator sits on a Γ pole vanish.
pub fn sfpp_marginal_series(lambda: f64, alpha: f64, n: u64, t: f64) -> Result<SeriesValue> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} is outside (0, 1]"),
        ));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(
            "lambda",
            format!("{lambda} must be positive"),
        ));
    }
    let x = check_sfpp_argument(lambda, alpha, t)?;
    if x == 0.0 {
        let value = if n == 0 { 1.0 } else { 0.0 };
        return Ok(SeriesValue {
            value,
            error_estimate: 0.0,
            terms: 0,
        });
    }
    let nf = n as f64;
    let ln_x = x.ln();
    let ln_n_fact = ln_gamma_pos(nf + 1.0);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut rounding = 0.0;
    let mut small_run = 0;
    let mut prev_mag = f64::INFINITY;
    let mut seen_nonzero = false;
    for r in 0..SFPP_MAX_TERMS {
        let rf = r as f64;
        let ratio = log_gamma_ratio(alpha * rf + 1.0, alpha * rf + 1.0 - nf)?;
        let (sign, ln_ratio) = match ratio {
            GammaRatio::Vanishes => continue,
            GammaRatio::Finite { sign, ln_abs } => (sign, ln_abs),
        };
        let ln_mag = rf * ln_x - ln_gamma_pos(rf + 1.0) + ln_ratio - ln_n_fact;
        let mag = ln_mag.exp();
        if !mag.is_finite() {
            return Err(Error::Overflow("space-fractional series"));
        }
        let term = if r % 2 == 1 { -sign * mag } else { sign * mag };
        let y = term - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        rounding += mag * (ln_mag.abs() + 4.0) * f64::EPSILON;
        if seen_nonzero && mag < 1e-16 * sum.abs() && mag <= prev_mag {
            small_run += 1;
            if small_run >= 5 {
                let value = if n % 2 == 1 { -sum } else { sum };
                let error_estimate = rounding + mag;
                if error_estimate > SFPP_MAX_ERROR {
                    return Err(Error::NonConvergence {
                        what: "space-fractional series",
                        partial: value,
                        error_estimate,
                    });
                }
                return Ok(SeriesValue {
                    value,
                    error_estimate,
                    terms: r + 1,
                });
            }
        } else {
            small_run = 0;
        }
        seen_nonzero = true;
        prev_mag = mag;
    }
    Err(Error::NonConvergence {
        what: "space-fractional series",
        partial: if n % 2 == 1 { -sum } else { sum },
        error_estimate: prev_mag.max(rounding),
    })
}

/// One-axis space-fractional pmf; see [`sfpp_marginal_series`].
pub fn sfpp_marginal_pmf(lambda: f64, alpha: f64, n: u64, t: f64) -> Result<f64> {
    Ok(sfpp_marginal_series(lambda, alpha, n, t)?
        .value
        .clamp(0.0, 1.0))
}

fn sfpp_marginals(model: &SfppModel, n_max: usize, t: f64) -> Result<Vec<Vec<f64>>> {
    model
        .axes()
        .map(|(l, a)| {
            (0..=n_max as u64)
                .map(|n| sfpp_marginal_pmf(l, a, n, t))
                .collect()
        })
        .collect()
}

/// `p(n, t)` for `n = 0..=n_max`, by successive convolution.
pub fn sfpp_pmf_vector(model: &SfppModel, n_max: usize, t: f64) -> Result<Vec<f64>> {
    let marginals = sfpp_marginals(model, n_max, t)?;
    Ok(marginals
        .iter()
        .skip(1)
        .fold(marginals[0].clone(), |acc, m| convolve(&acc, m)))
}

pub fn sfpp_pmf(model: &SfppModel, n: u64, t: f64) -> Result<f64> {
    Ok(sfpp_pmf_vector(model, n as usize, t)?[n as usize])
}

/// The `Θ(n,d)` enumeration form of [`sfpp_pmf`].
pub fn sfpp_pmf_by_compositions(model: &SfppModel, n: u64, t: f64) -> Result<f64> {
    Ok(composition_sum(
        &sfpp_marginals(model, n as usize, t)?,
        n as usize,
    ))
}

/// `E u^{N(t)} = exp(−Σ λ_j^{α_j} (1−u)^{α_j} t)` for `u ∈ [0, 1]`.
pub fn sfpp_pgf(model: &SfppModel, u: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::invalid("u", format!("{u} is outside [0, 1]")));
    }
    Ok((-model
        .axes()
        .map(|(l, a)| l.powf(a) * (1.0 - u).powf(a) * t)
        .sum::<f64>())
    .exp())
}

/// `max_{n ≤ n_max} |∂_t p(n,t) − RHS(n,t)|`, with the time derivative taken
/// by central differences and
/// `RHS = −Σ_j λ_j^{α_j} Σ_{r=0}^{n} (−1)^r C(α_j, r) p(n−r, t)`.
pub fn sfpp_ode_residual(model: &SfppModel, n_max: usize, t: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0 && t > dt) {
        return Err(Error::invalid("dt", "need 0 < dt < t"));
    }
    let plus = sfpp_pmf_vector(model, n_max, t + dt)?;
    let minus = sfpp_pmf_vector(model, n_max, t - dt)?;
    let here = sfpp_pmf_vector(model, n_max, t)?;
    let coefficients: Vec<(f64, Vec<f64>)> = model
        .axes()
        .map(|(l, a)| {
            let mut c = vec![1.0; n_max + 1];
            for r in 1..=n_max {
                c[r] = -c[r - 1] * (a - (r as f64 - 1.0)) / r as f64;
            }
            (l.powf(a), c)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for n in 0..=n_max {
        let lhs = (plus[n] - minus[n]) / (2.0 * dt);
        let rhs: f64 = -coefficients
            .iter()
            .map(|(w, c)| w * (0..=n).map(|r| c[r] * here[n - r]).sum::<f64>())
            .sum::<f64>();
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// One draw of `N(S(t))`: per axis a Poisson count with mean `λ_i S_i(t)`.
pub fn sample_sfpp<R: Rng + ?Sized>(model: &SfppModel, t: f64, rng: &mut R) -> Result<u64> {
    let mut total = 0u64;
    for (l, a) in model.axes() {
        let clock = if a == 1.0 {
            t
        } else {
            StableSampler::new(a)?.sample(t, rng)
        };
        total = total.saturating_add(sample_poisson(l * clock, rng));
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfppModel {
    rates: RateVector,
    orders: FracOrders,
}

impl MfppModel {
    pub fn new(rates: RateVector, orders: FracOrders) -> Result<Self> {
        check_orders(&rates, &orders)?;
        Ok(MfppModel { rates, orders })
    }

    pub fn d(&self) -> usize {
        self.rates.dim()
    }

    pub fn rates(&self) -> &RateVector {
        &self.rates
    }

    pub fn orders(&self) -> &FracOrders {
        &self.orders
    }

    pub(crate) fn axes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rates
            .rates()
            .iter()
            .copied()
            .zip(self.orders.orders().iter().copied())
    }

    pub(crate) fn check(&self, t: &IndexPoint) -> Result<()> {
        check_dims(self.d(), t.dim())
    }
}

/// One-parameter fractional Poisson pmf `(λt^α)^n E^{n+1}_{α,nα+1}(−λt^α)`.
pub fn fpp_marginal_pmf(lambda: f64, alpha: f64, n: u64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let x = lambda * t.powf(alpha);
    if alpha == 1.0 {
        return Ok(poisson_pmf(x, n));
    }
    let nf = n as f64;
    let p = MLParams::new(alpha, nf * alpha + 1.0, nf + 1.0)?;
    // x^n is folded into the evaluation; otherwise its size multiplies the
    // absolute error of E for large n.
    let v = mittag_leffler_scaled(&p, -x, nf * x.ln())?;
    Ok(v.value.clamp(0.0, 1.0))
}

fn mfpp_marginals(model: &MfppModel, n_max: usize, t: &IndexPoint) -> Result<Vec<Vec<f64>>> {
    model.check(t)?;
    model
        .axes()
        .zip(t.coords())
        .map(|((l, a), &ti)| {
            (0..=n_max as u64)
                .map(|n| fpp_marginal_pmf(l, a, n, ti))
                .collect()
        })
        .collect()
}

/// `p(n, t)` for `n = 0..=n_max`.
pub fn mfpp_pmf_vector(model: &MfppModel, n_max: usize, t: &IndexPoint) -> Result<Vec<f64>> {
    let marginals = mfpp_marginals(model, n_max, t)?;
    Ok(marginals
        .iter()
        .skip(1)
        .fold(marginals[0].clone(), |acc, m| convolve(&acc, m)))
}

pub fn mfpp_pmf(model: &MfppModel, n: u64, t: &IndexPoint) -> Result<f64> {
    Ok(mfpp_pmf_vector(model, n as usize, t)?[n as usize])
}

/// The `Θ(n,d)` enumeration form of [`mfpp_pmf`].
pub fn mfpp_pmf_by_compositions(model: &MfppModel, n: u64, t: &IndexPoint) -> Result<f64> {
    Ok(composition_sum(
        &mfpp_marginals(model, n as usize, t)?,
        n as usize,
    ))
}

/// `(mean, variance)` of `N_α(t)`.
pub fn mfpp_moments(model: &MfppModel, t: &IndexPoint) -> Result<(f64, f64)> {
    model.check(t)?;
    let (mut mean, mut var) = (0.0, 0.0);
    for ((l, a), &ti) in model.axes().zip(t.coords()) {
        let m = l * inverse_stable_mean(a, ti)?;
        mean += m;
        var += m;
        if a < 1.0 {
            let x = l * ti.powf(a);
            var += x * x / a * (1.0 / gamma(2.0 * a) - 1.0 / (a * gamma(a).powi(2)));
        }
    }
    Ok((mean, var))
}

/// `E[N(N−1)…(N−n+1)] = n! Σ_{Θ(n,d)} Π_i (λ_i t_i^{α_i})^{n_i} / Γ(α_i n_i + 1)`.
pub fn mfpp_factorial_moment(model: &MfppModel, n: u64, t: &IndexPoint) -> Result<f64> {
    model.check(t)?;
    if n == 0 {
        return Err(Error::invalid("n", "factorial moments start at order 1"));
    }
    let axes: Vec<(f64, f64)> = model
        .axes()
        .zip(t.coords())
        .map(|((l, a), &ti)| (l * ti.powf(a), a))
        .collect();
    let sum: f64 = compositions(n as usize, model.d())
        .map(|c| {
            c.parts()
                .iter()
                .zip(&axes)
                .map(|(&k, &(x, a))| x.powi(k as i32) / gamma(a * k as f64 + 1.0))
                .product::<f64>()
        })
        .sum();
    Ok(gamma(n as f64 + 1.0) * sum)
}

/// `Σ_i (λ_i min(s_i,t_i)^{α_i}/Γ(α_i+1) + λ_i² Cov(L_i(s_i), L_i(t_i)))`.
pub fn mfpp_covariance(model: &MfppModel, s: &IndexPoint, t: &IndexPoint) -> Result<f64> {
    model.check(s)?;
    model.check(t)?;
    let mut cov = 0.0;
    for (((l, a), &si), &ti) in model.axes().zip(s.coords()).zip(t.coords()) {
        cov +=
            l * inverse_stable_mean(a, si.min(ti))? + l * l * covariance_inverse_stable(a, si, ti)?;
    }
    Ok(cov)
}

/// `Corr(N_α(s), N_α(t))`.
pub fn mfpp_correlation(model: &MfppModel, s: &IndexPoint, t: &IndexPoint) -> Result<f64> {
    let cov = mfpp_covariance(model, s, t)?;
    let vs = mfpp_covariance(model, s, s)?;
    let vt = mfpp_covariance(model, t, t)?;
    Ok(cov / (vs * vt).sqrt())
}

/// `E u^{N_α(t)} = Π_i E_{α_i,1}(λ_i (u−1) t_i^{α_i})`.
pub fn mfpp_pgf(model: &MfppModel, u: f64, t: &IndexPoint) -> Result<f64> {
    model.check(t)?;
    if !(-1.0..=1.0).contains(&u) {
        return Err(Error::invalid("u", format!("{u} is outside [-1, 1]")));
    }
    let mut g = 1.0;
    for ((l, a), &ti) in model.axes().zip(t.coords()) {
        g *= mittag_leffler(&MLParams::two(a, 1.0)?, l * (u - 1.0) * ti.powf(a))?;
    }
    Ok(g)
}

/// One draw of `N_α(t)`: per axis an inverse-stable clock, then a Poisson count.
pub fn sample_mfpp<R: Rng + ?Sized>(model: &MfppModel, t: &IndexPoint, rng: &mut R) -> Result<u64> {
    model.check(t)?;
    let mut total = 0u64;
    for ((l, a), &ti) in model.axes().zip(t.coords()) {
        let clock = if a == 1.0 {
            ti
        } else {
            inverse_marginal_from(&StableSampler::new(a)?, ti, rng)
        };
        total += sample_poisson(l * clock, rng);
    }
    Ok(total)
}

/// Joint draw of `N_α` at several index points. Each axis uses one clock
/// path and one counting process for all points.
#[derive(Debug, Clone, PartialEq)]
pub struct MfppJointSample {
    pub counts: Vec<u64>,
    /// `clocks[k][i] = L_i(t⁽ᵏ⁾_i)`.
    pub clocks: Vec<Vec<f64>>,
}

pub fn sample_mfpp_joint<R: Rng + ?Sized>(
    model: &MfppModel,
    points: &[IndexPoint],
    resolution: f64,
    rng: &mut R,
) -> Result<MfppJointSample> {
    for p in points {
        model.check(p)?;
    }
    let d = model.d();
    let mut clocks = vec![vec![0.0; d]; points.len()];
    let mut counts = vec![0u64; points.len()];
    for (i, (l, a)) in model.axes().enumerate() {
        let mut grid: Vec<f64> = points.iter().map(|p| p.coords()[i]).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let path = sample_inverse_stable_path(a, &grid, resolution, rng)?;
        let horizon = path.values.last().copied().unwrap_or(0.0);
        let axis = sample_counting_path(l, horizon, rng);
        for (k, p) in points.iter().enumerate() {
            let g = grid.partition_point(|&x| x < p.coords()[i]);
            clocks[k][i] = path.values[g];
            counts[k] += axis.count_at(path.values[g]);
        }
    }
    Ok(MfppJointSample { counts, clocks })
}

fn variant_argument(rates: &RateVector, alpha: f64, t: &IndexPoint) -> Result<f64> {
    check_dims(rates.dim(), t.dim())?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} is outside (0, 1]"),
        ));
    }
    Ok(rates.dot_unchecked(t))
}

fn variant_ln_pmf(x: f64, alpha: f64, ln_norm: f64, n: u64) -> f64 {
    let nf = n as f64;
    nf * x.ln() - ln_gamma_pos(nf * alpha + 1.0) - ln_norm
}

/// `(Λ·t)^n / (Γ(nα+1) E_{α,1}(Λ·t))`.
pub fn fractional_variant_pmf(
    rates: &RateVector,
    alpha: f64,
    n: u64,
    t: &IndexPoint,
) -> Result<f64> {
    let x = variant_argument(rates, alpha, t)?;
    if x == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if alpha == 1.0 {
        return Ok(poisson_pmf(x, n));
    }
    let ln_norm = mittag_leffler(&MLParams::two(alpha, 1.0)?, x)?.ln();
    Ok(variant_ln_pmf(x, alpha, ln_norm, n).exp())
}

/// Inversion sampler for the fractional variant: the CDF is tabulated once
/// until the remaining mass is below 1e−15.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalVariantSampler {
    cdf: Vec<f64>,
}

impl FractionalVariantSampler {
    pub fn new(rates: &RateVector, alpha: f64, t: &IndexPoint) -> Result<Self> {
        let x = variant_argument(rates, alpha, t)?;
        let pmf = fractional_variant_pmf_table(x, alpha)?;
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in pmf {
            acc += p;
            cdf.push(acc);
        }
        Ok(FractionalVariantSampler { cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random::<f64>() * self.cdf.last().copied().unwrap_or(1.0);
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1) as u64
    }
}

fn fractional_variant_pmf_table(x: f64, alpha: f64) -> Result<Vec<f64>> {
    if x == 0.0 {
        return Ok(vec![1.0]);
    }
    let ln_norm = if alpha == 1.0 {
        x
    } else {
        mittag_leffler(&MLParams::two(alpha, 1.0)?, x)?.ln()
    };
    let mut out: Vec<f64> = Vec::new();
    let mut mass = 0.0;
    let mut n = 0u64;
    loop {
        let p = variant_ln_pmf(x, alpha, ln_norm, n).exp();
        let decreasing = out.last().is_some_and(|&prev| p < prev);
        out.push(p);
        mass += p;
        // The terms are eventually decreasing faster than geometrically.
        if decreasing && p < 1e-18 * mass {
            return Ok(out);
        }
        n += 1;
        if n > 1_000_000 {
            return Err(Error::NonConvergence {
                what: "fractional variant normalisation",
                partial: mass,
                error_estimate: 1.0 - mass,
            });
        }
    }
}

/// `(mean, variance)` of the fractional variant, by direct summation of the pmf.
pub fn fractional_variant_moments(
    rates: &RateVector,
    alpha: f64,
    t: &IndexPoint,
) -> Result<(f64, f64)> {
    let x = variant_argument(rates, alpha, t)?;
    let pmf = fractional_variant_pmf_table(x, alpha)?;
    let mean: f64 = pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let second: f64 = pmf
        .iter()
        .enumerate()
        .map(|(n, p)| (n * n) as f64 * p)
        .sum();
    Ok((mean, second - mean * mean))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mfpp(rates: &[f64], orders: &[f64]) -> MfppModel {
        MfppModel::new(
            RateVector::new(rates.to_vec()).unwrap(),
            FracOrders::new(orders.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn sfpp(rates: &[f64], orders: &[f64]) -> SfppModel {
        SfppModel::new(
            RateVector::new(rates.to_vec()).unwrap(),
            FracOrders::new(orders.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn pt(v: &[f64]) -> IndexPoint {
        IndexPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sfpp_zero_count_is_exponential() {
        for &(l, a, t) in &[(1.0, 0.5, 1.0), (2.0, 0.3, 0.7), (0.5, 0.9, 3.0)] {
            let p = sfpp_marginal_pmf(l, a, 0, t).unwrap();
            let x: f64 = f64::powf(l, a) * t;
            assert!((p - (-x).exp()).abs() < 1e-13);
        }
        let m = sfpp(&[1.0, 2.0], &[0.5, 0.7]);
        let expected = (-(1.0 + 2f64.powf(0.7)) * 0.8).exp();
        assert!((sfpp_pmf(&m, 0, 0.8).unwrap() - expected).abs() < 1e-13);
        assert!((sfpp_pgf(&m, 0.0, 0.8).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn sfpp_unit_order_is_poisson() {
        for n in 0..10 {
            let p = sfpp_marginal_pmf(1.5, 1.0, n, 2.0).unwrap();
            assert!((p - poisson_pmf(3.0, n)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn sfpp_guard() {
        let m = sfpp(&[4.0], &[0.5]);
        assert!(m.check_time(15.0).is_ok());
        assert!(m.check_time(15.1).is_err());
        assert!(sfpp_marginal_pmf(4.0, 0.5, 1, 16.0).is_err());
    }

    #[test]
    fn sfpp_ode_classical() {
        let m = sfpp(&[1.0, 0.5], &[1.0, 1.0]);
        assert!(sfpp_ode_residual(&m, 10, 1.0, 1e-4).unwrap() < 1e-6);
    }

    #[test]
    fn mfpp_reductions() {
        let m = mfpp(&[1.0, 2.0], &[1.0, 1.0]);
        let t = pt(&[0.5, 1.0]);
        for n in 0..8 {
            assert!((mfpp_pmf(&m, n, &t).unwrap() - poisson_pmf(2.5, n)).abs() < 1e-14);
        }
        assert_eq!(mfpp_moments(&m, &t).unwrap(), (2.5, 2.5));
        let f2 = mfpp_factorial_moment(&m, 2, &t).unwrap();
        assert!((f2 - 6.25).abs() < 1e-12);
        let s = pt(&[1.0, 0.25]);
        assert!((mfpp_covariance(&m, &s, &t).unwrap() - (0.5 + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn mfpp_first_factorial_moment_is_mean() {
        let m = mfpp(&[1.0, 0.7], &[0.5, 0.8]);
        let t = pt(&[1.3, 2.0]);
        let (mean, _) = mfpp_moments(&m, &t).unwrap();
        assert!((mfpp_factorial_moment(&m, 1, &t).unwrap() - mean).abs() < 1e-13);
    }

    #[test]
    fn variant_reductions() {
        let rates = RateVector::new(vec![1.0, 2.0]).unwrap();
        let t = pt(&[1.0, 1.0]);
        for n in 0..8 {
            let v = fractional_variant_pmf(&rates, 1.0, n, &t).unwrap();
            assert!((v - poisson_pmf(3.0, n)).abs() < 1e-15);
        }
        let e = mittag_leffler(&MLParams::two(0.7, 1.0).unwrap(), 3.0).unwrap();
        assert!((fractional_variant_pmf(&rates, 0.7, 0, &t).unwrap() - 1.0 / e).abs() < 1e-15);
    }

    #[test]
    fn convolution_matches_enumeration() {
        let a = vec![0.1, 0.2, 0.3, 0.4];
        let b = vec![0.5, 0.25, 0.125, 0.0625];
        let c = vec![0.9, 0.05, 0.03, 0.02];
        let conv = convolve(&convolve(&a, &b), &c);
        for (n, v) in conv.iter().take(4).enumerate() {
            let e = composition_sum(&[a.clone(), b.clone(), c.clone()], n);
            assert!((v - e).abs() < 1e-15);
        }
    }
}
