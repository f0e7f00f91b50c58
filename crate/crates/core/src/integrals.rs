//! Riemann–Liouville integrals of the field over rectangles,
//! `X(t) = Π_i Γ(ρ_i)^{−1} ∫_{[0,t]} Π_i (t_i − s_i)^{ρ_i − 1} N(s) ds`.
//!
//! Because `N(s) = Σ_j N_j(s_j)`, integrating out the other axes gives
//! `X(t) = Σ_j W_j Σ_k (t_j − τ_{jk})^{ρ_j} / Γ(ρ_j + 1)` with jump times
//! `τ_{jk}` and `W_j = Π_{i≠j} t_i^{ρ_i}/Γ(ρ_i + 1)`; the moments below follow
//! from Campbell's formula applied to that sum.

use rand::Rng;

use crate::error::{Error, Result};
use crate::index::{check_dims, FracOrders, IndexPoint};
use crate::mc::stats::{ks_one_sample, normal_cdf};
use crate::mc::{run_map, McConfig};
use crate::mpp::{sample_mpp_path, sample_poisson, MppModel, MppPath};
use crate::special::gamma;

/// Grid cells per axis for the quadrature sampler.
pub const DEFAULT_SUBDIVISIONS: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct FracIntegralSpec {
    model: MppModel,
    rho: FracOrders,
    t: IndexPoint,
}

impl FracIntegralSpec {
    pub fn new(model: MppModel, rho: FracOrders, t: IndexPoint) -> Result<Self> {
        check_dims(model.d(), rho.dim())?;
        check_dims(model.d(), t.dim())?;
        if t.coords().iter().any(|&x| x <= 0.0) {
            return Err(Error::invalid(
                "t",
                "upper corner must be strictly positive on every axis",
            ));
        }
        Ok(FracIntegralSpec { model, rho, t })
    }

    /// Riemann case `ρ = 1`.
    pub fn riemann(model: MppModel, t: IndexPoint) -> Result<Self> {
        let rho = FracOrders::integral(vec![1.0; model.d()])?;
        FracIntegralSpec::new(model, rho, t)
    }

    pub fn model(&self) -> &MppModel {
        &self.model
    }

    pub fn rho(&self) -> &FracOrders {
        &self.rho
    }

    pub fn t(&self) -> &IndexPoint {
        &self.t
    }

    pub fn with_t(&self, t: IndexPoint) -> Result<Self> {
        FracIntegralSpec::new(self.model.clone(), self.rho.clone(), t)
    }

    fn axes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.model
            .rates()
            .rates()
            .iter()
            .zip(self.rho.orders())
            .zip(self.t.coords())
            .map(|((&l, &r), &t)| (l, r, t))
    }

    /// `W_j = Π_{i≠j} t_i^{ρ_i}/Γ(ρ_i+1)` for every axis.
    fn cross_weights(&self) -> Vec<f64> {
        let factors: Vec<f64> = self
            .axes()
            .map(|(_, r, t)| t.powf(r) / gamma(r + 1.0))
            .collect();
        (0..factors.len())
            .map(|j| {
                factors
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != j)
                    .map(|(_, f)| f)
                    .product()
            })
            .collect()
    }

    fn is_riemann(&self) -> bool {
        self.rho.orders().iter().all(|&r| r == 1.0)
    }
}

/// `Σ_j λ_j t_j^{ρ_j+1}/Γ(ρ_j+2) · W_j`.
pub fn integral_mean(spec: &FracIntegralSpec) -> f64 {
    spec.axes()
        .zip(spec.cross_weights())
        .map(|((l, r, t), w)| l * t.powf(r + 1.0) / gamma(r + 2.0) * w)
        .sum()
}

/// `Σ_j λ_j t_j^{2ρ_j+1}/((2ρ_j+1)Γ(ρ_j+1)²) · W_j²`.
pub fn integral_variance(spec: &FracIntegralSpec) -> f64 {
    spec.axes()
        .zip(spec.cross_weights())
        .map(|((l, r, t), w)| {
            l * t.powf(2.0 * r + 1.0) / ((2.0 * r + 1.0) * gamma(r + 1.0).powi(2)) * w * w
        })
        .sum()
}

/// `E{X(t) | N(t) = m} = (m / Λ·t) · E X(t)`.
pub fn integral_conditional_mean(spec: &FracIntegralSpec, m: u64) -> Result<f64> {
    let lt = spec.model.mean(&spec.t)?;
    if lt == 0.0 {
        return Err(Error::invalid("t", "Λ·t = 0"));
    }
    Ok(m as f64 / lt * integral_mean(spec))
}

/// Random-sum representation (Riemann case only): `N_j ~ Poisson(λ_j t_j)`
/// uniforms on `[0, t_j]` per axis, weighted by `Π_{i≠j} t_i`.
pub fn sample_integral_compound<R: Rng + ?Sized>(
    spec: &FracIntegralSpec,
    rng: &mut R,
) -> Result<f64> {
    if !spec.is_riemann() {
        return Err(Error::invalid(
            "rho",
            "the compound representation needs ρ = 1 on every axis",
        ));
    }
    let weights = spec.cross_weights();
    let mut total = 0.0;
    for ((l, _, t), w) in spec.axes().zip(weights) {
        let n = sample_poisson(l * t, rng);
        let mut s = 0.0;
        for _ in 0..n {
            s += t * rng.random::<f64>();
        }
        total += w * s;
    }
    Ok(total)
}

/// Exact value of the integral on a sampled path (closed form per jump).
pub fn integral_of_path(spec: &FracIntegralSpec, path: &MppPath) -> Result<f64> {
    check_dims(spec.model.d(), path.axes.len())?;
    Ok(spec
        .axes()
        .zip(spec.cross_weights())
        .zip(&path.axes)
        .map(|(((_, r, t), w), axis)| {
            let g = gamma(r + 1.0);
            w * axis
                .jump_times
                .iter()
                .filter(|&&tau| tau <= t)
                .map(|&tau| (t - tau).powf(r) / g)
                .sum::<f64>()
        })
        .sum())
}

/// Per-axis cell weights `∫_a^b (t−s)^{ρ−1}/Γ(ρ) ds = ((t−a)^ρ − (t−b)^ρ)/Γ(ρ+1)`
/// and the cell midpoints.
fn axis_cells(t: f64, rho: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    let g = gamma(rho + 1.0);
    let h = t / m as f64;
    let weights = (0..m)
        .map(|k| {
            let a = k as f64 * h;
            let b = if k + 1 == m { t } else { (k + 1) as f64 * h };
            ((t - a).powf(rho) - (t - b).powf(rho)) / g
        })
        .collect();
    let mids = (0..m).map(|k| (k as f64 + 0.5) * h).collect();
    (weights, mids)
}

/// Weighted sum of `N` over the full product grid of `[0, t]`: the path is
/// evaluated at every cell midpoint, each cell weighted by the exact
/// integral of the kernel over it.
pub fn integrate_path_on_grid(
    spec: &FracIntegralSpec,
    path: &MppPath,
    subdivisions: usize,
) -> Result<f64> {
    if subdivisions < 2 {
        return Err(Error::invalid(
            "subdivisions",
            "need at least 2 cells per axis",
        ));
    }
    check_dims(spec.model.d(), path.axes.len())?;
    let d = spec.model.d();
    let cells: Vec<(Vec<f64>, Vec<u64>)> = spec
        .axes()
        .zip(&path.axes)
        .map(|((_, r, t), axis)| {
            let (w, mids) = axis_cells(t, r, subdivisions);
            let counts = mids.iter().map(|&s| axis.count_at(s)).collect();
            (w, counts)
        })
        .collect();
    // Odometer over the product grid, innermost axis last.
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        let mut n = 0u64;
        for (i, &k) in idx.iter().enumerate() {
            w *= cells[i].0[k];
            n += cells[i].1[k];
        }
        total += w * n as f64;
        let mut axis = d;
        loop {
            if axis == 0 {
                return Ok(total);
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < subdivisions {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Draw an exact path and integrate it on the product grid.
pub fn sample_integral_quadrature<R: Rng + ?Sized>(
    spec: &FracIntegralSpec,
    subdivisions: usize,
    rng: &mut R,
) -> Result<f64> {
    let path = sample_mpp_path(&spec.model, &spec.t, rng)?;
    integrate_path_on_grid(spec, &path, subdivisions)
}

/// One rung of the small-scale ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianRung {
    pub scale: f64,
    pub ks_distance: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianReport {
    pub rungs: Vec<GaussianRung>,
    /// KS distances non-increasing down the ladder (up to `noise`).
    pub ks_decreasing: bool,
    /// Absolute skewness non-increasing down the ladder.
    pub skewness_decreasing: bool,
    pub noise: f64,
}

/// Mean `Σ_j λ_j Π_{l≠j} t_l · t_j²/2` of the Riemann integral.
pub fn gaussian_stated_mean(model: &MppModel, t: &IndexPoint) -> Result<f64> {
    model.check(t)?;
    let c = t.coords();
    Ok(model
        .rates()
        .rates()
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let others: f64 = c
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, x)| x)
                .product();
            l * others * c[j] * c[j] / 2.0
        })
        .sum())
}

/// Variance `Σ_j λ_j Π_{l≠j} t_l² · t_j³/3` of the Riemann integral.
pub fn gaussian_stated_variance(model: &MppModel, t: &IndexPoint) -> Result<f64> {
    model.check(t)?;
    let c = t.coords();
    Ok(model
        .rates()
        .rates()
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let others: f64 = c
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, x)| x * x)
                .product();
            l * others * c[j].powi(3) / 3.0
        })
        .sum())
}

/// Standardise compound-representation draws at `t = scale·1` by the stated
/// Gaussian mean and variance and measure the distance to `N(0,1)` on each
/// rung of `scales` (taken in the given order, largest first).
pub fn gaussian_asymptotic_check(
    model: &MppModel,
    scales: &[f64],
    config: &McConfig,
) -> Result<GaussianReport> {
    if scales.is_empty() || scales.iter().any(|&s| !(s > 0.0 && s <= 0.1)) {
        return Err(Error::invalid("scale", "scales must lie in (0, 0.1]"));
    }
    let mut rungs = Vec::with_capacity(scales.len());
    for (k, &scale) in scales.iter().enumerate() {
        let t = IndexPoint::diagonal(model.d(), scale)?;
        let spec = FracIntegralSpec::riemann(model.clone(), t.clone())?;
        let mean = gaussian_stated_mean(model, &t)?;
        let sd = gaussian_stated_variance(model, &t)?.sqrt();
        let rung_config = config
            .clone()
            .with_seed(config.master_seed.wrapping_add(k as u64));
        let z = run_map(&rung_config, |rng, _| {
            Ok((sample_integral_compound(&spec, rng)? - mean) / sd)
        })?;
        let ks = ks_one_sample(&z, normal_cdf)?;
        let n = z.len() as f64;
        let m = z.iter().sum::<f64>() / n;
        let m2 = z.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let m3 = z.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
        rungs.push(GaussianRung {
            scale,
            ks_distance: ks.statistic,
            skewness: m3 / m2.powf(1.5),
        });
    }
    // Sampling noise of a KS distance at this size.
    let noise = 1.0 / (config.replicas as f64).sqrt();
    let ks_decreasing = rungs
        .windows(2)
        .all(|w| w[1].ks_distance <= w[0].ks_distance + noise);
    let skewness_decreasing = rungs
        .windows(2)
        .all(|w| w[1].skewness.abs() <= w[0].skewness.abs());
    Ok(GaussianReport {
        rungs,
        ks_decreasing,
        skewness_decreasing,
        noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpp::CountingPath;

    fn spec(rates: &[f64], rho: &[f64], t: &[f64]) -> FracIntegralSpec {
        FracIntegralSpec::new(
            MppModel::from_rates(rates.to_vec()).unwrap(),
            FracOrders::integral(rho.to_vec()).unwrap(),
            IndexPoint::new(t.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let s = spec(&[1.0], &[1.0], &[2.0]);
        assert!((integral_mean(&s) - 2.0).abs() < 1e-14);
        assert!((integral_variance(&s) - 8.0 / 3.0).abs() < 1e-14);
        let s = spec(&[1.0, 2.0], &[1.0, 1.0], &[1.0, 1.0]);
        assert!((integral_mean(&s) - 1.5).abs() < 1e-14);
        assert!((integral_variance(&s) - 1.0).abs() < 1e-14);
        let s = spec(&[1.0], &[1.0], &[2.0]);
        assert!((integral_conditional_mean(&s, 3).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(integral_conditional_mean(&s, 0).unwrap(), 0.0);
    }

    #[test]
    fn stated_gaussian_moments_match() {
        let m = MppModel::from_rates(vec![1.0, 2.0, 0.5]).unwrap();
        let t = IndexPoint::new(vec![0.3, 0.7, 1.1]).unwrap();
        let s = FracIntegralSpec::riemann(m.clone(), t.clone()).unwrap();
        assert!((gaussian_stated_mean(&m, &t).unwrap() - integral_mean(&s)).abs() < 1e-12);
        assert!((gaussian_stated_variance(&m, &t).unwrap() - integral_variance(&s)).abs() < 1e-12);
    }

    #[test]
    fn single_jump_quadrature_converges() {
        let s = spec(&[1.0], &[1.0], &[1.0]);
        let tau = 0.3172;
        let path = MppPath {
            axes: vec![CountingPath {
                jump_times: vec![tau],
                horizon: 1.0,
            }],
        };
        let exact = integral_of_path(&s, &path).unwrap();
        assert!((exact - (1.0 - tau)).abs() < 1e-15);
        for m in [16, 64, 256, 1024] {
            let v = integrate_path_on_grid(&s, &path, m).unwrap();
            assert!((v - exact).abs() <= 1.0 / m as f64, "m={m}: {v}");
        }
        let empty = MppPath {
            axes: vec![CountingPath {
                jump_times: vec![],
                horizon: 1.0,
            }],
        };
        assert_eq!(integrate_path_on_grid(&s, &empty, 8).unwrap(), 0.0);
    }

    #[test]
    fn compound_rejects_fractional_orders() {
        let s = spec(&[1.0], &[0.5], &[1.0]);
        let mut rng = crate::mc::replica_rng(0, 0);
        assert!(sample_integral_compound(&s, &mut rng).is_err());
    }
}
