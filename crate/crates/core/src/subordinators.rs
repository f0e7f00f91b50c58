//! Positive α-stable subordinators `S` (Laplace transform `e^{−t w^α}`) and
//! their inverses `L(t) = inf{u > 0 : S(u) > t}`.

use rand::Rng;
use rand_distr::{Exp1, Open01};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::special::gamma;

/// Default operational-time step for path inversion.
pub const DEFAULT_RESOLUTION: f64 = 1e-3;
/// Hard cap on stable increments drawn while building one inverse path.
pub const DEFAULT_PATH_BUDGET: usize = 100_000_000;

/// Kanter's representation of a standard positive stable variable:
/// `S = (A(U)/E)^{(1−α)/α}` with `U ~ U(0, π)`, `E ~ Exp(1)` and
/// `A(u) = [sin(αu)/sin u]^{1/(1−α)} · sin((1−α)u)/sin(αu)`.
/// `E e^{−wS} = e^{−w^α}`; scaling gives `S(dt) = dt^{1/α} S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableSampler {
    alpha: f64,
}

impl StableSampler {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(
                "alpha",
                format!("{alpha} is outside (0, 1)"),
            ));
        }
        Ok(StableSampler { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// One draw of `S(1)`.
    #[inline]
    pub fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha;
        let u: f64 = std::f64::consts::PI * rng.sample::<f64, _>(Open01);
        let e: f64 = rng.sample(Exp1);
        let sin_au = (a * u).sin();
        let ln_a = ((sin_au / u.sin()).ln()) / (1.0 - a) + ((1.0 - a) * u).sin().ln() - sin_au.ln();
        (((1.0 - a) / a) * (ln_a - e.ln())).exp()
    }

    /// One draw of `S(dt)`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        dt.powf(1.0 / self.alpha) * self.sample_unit(rng)
    }
}

/// One draw of `S(dt)`, the increment of a standard α-stable subordinator over `dt`.
pub fn sample_stable_increment<R: Rng + ?Sized>(alpha: f64, dt: f64, rng: &mut R) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("{dt} must be positive")));
    }
    Ok(StableSampler::new(alpha)?.sample(dt, rng))
}

/// One draw of `L(t)` through `L(t) =d (t / S(1))^α`. `α = 1` gives `t`.
pub fn sample_inverse_stable_marginal<R: Rng + ?Sized>(
    alpha: f64,
    t: f64,
    rng: &mut R,
) -> Result<f64> {
    check_time("t", t)?;
    if alpha == 1.0 {
        return Ok(t);
    }
    let s = StableSampler::new(alpha)?;
    Ok(inverse_marginal_from(&s, t, rng))
}

#[inline]
pub(crate) fn inverse_marginal_from<R: Rng + ?Sized>(
    s: &StableSampler,
    t: f64,
    rng: &mut R,
) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    (t / s.sample_unit(rng)).powf(s.alpha())
}

fn check_time(name: &'static str, t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(
            name,
            format!("{t} must be a finite nonnegative time"),
        ));
    }
    Ok(())
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid(name, "grid is empty"));
    }
    check_time(name, grid[0])?;
    if grid.windows(2).any(|w| !w[1].is_finite() || w[1] <= w[0]) {
        return Err(Error::invalid(name, "grid must be strictly increasing"));
    }
    Ok(())
}

/// Values of a stable subordinator on an operational-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StablePathGrid {
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// `S` sampled on `grid` (which need not start at 0; `S(0) = 0` is implied).
pub fn sample_stable_path<R: Rng + ?Sized>(
    alpha: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<StablePathGrid> {
    check_grid("grid", grid)?;
    let sampler = StableSampler::new(alpha)?;
    let mut values = Vec::with_capacity(grid.len());
    let (mut u, mut s) = (0.0, 0.0);
    for &g in grid {
        if g > u {
            s += sampler.sample(g - u, rng);
            u = g;
        }
        values.push(s);
    }
    Ok(StablePathGrid {
        alpha,
        grid: grid.to_vec(),
        values,
    })
}

/// Values of an inverse stable subordinator on a calendar-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InversePathGrid {
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl InversePathGrid {
    pub fn value_at(&self, idx: usize) -> f64 {
        self.values[idx]
    }
}

/// `L` on an increasing calendar grid, by walking `S` forward in operational
/// steps of `resolution` and recording the first lattice step at which `S`
/// passes each grid point. Each value is the midpoint of the lattice cell
/// containing the true passage time, so it is within `resolution / 2` of it.
pub fn sample_inverse_stable_path<R: Rng + ?Sized>(
    alpha: f64,
    calendar_grid: &[f64],
    resolution: f64,
    rng: &mut R,
) -> Result<InversePathGrid> {
    sample_inverse_stable_path_with_budget(
        alpha,
        calendar_grid,
        resolution,
        DEFAULT_PATH_BUDGET,
        rng,
    )
}

pub fn sample_inverse_stable_path_with_budget<R: Rng + ?Sized>(
    alpha: f64,
    calendar_grid: &[f64],
    resolution: f64,
    budget: usize,
    rng: &mut R,
) -> Result<InversePathGrid> {
    check_grid("calendar_grid", calendar_grid)?;
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::invalid(
            "resolution",
            format!("{resolution} must be positive"),
        ));
    }
    if alpha == 1.0 {
        return Ok(InversePathGrid {
            alpha,
            grid: calendar_grid.to_vec(),
            values: calendar_grid.to_vec(),
        });
    }
    let sampler = StableSampler::new(alpha)?;
    let step_scale = resolution.powf(1.0 / alpha);
    let mut values = Vec::with_capacity(calendar_grid.len());
    let mut s = 0.0;
    let mut steps = 0usize;
    for &t in calendar_grid {
        if t == 0.0 {
            values.push(0.0);
            continue;
        }
        while s <= t {
            if steps >= budget {
                return Err(Error::BudgetExceeded { steps });
            }
            s += step_scale * sampler.sample_unit(rng);
            steps += 1;
        }
        values.push((steps as f64 - 0.5) * resolution);
    }
    Ok(InversePathGrid {
        alpha,
        grid: calendar_grid.to_vec(),
        values,
    })
}

/// `E L(t) = t^α / Γ(1+α)`.
pub fn inverse_stable_mean(alpha: f64, t: f64) -> Result<f64> {
    check_alpha_closed(alpha)?;
    check_time("t", t)?;
    if alpha == 1.0 {
        return Ok(t);
    }
    Ok(t.powf(alpha) / gamma(1.0 + alpha))
}

/// `Var L(t) = t^{2α} (2/Γ(2α+1) − 1/Γ(1+α)²)`.
pub fn inverse_stable_variance(alpha: f64, t: f64) -> Result<f64> {
    check_alpha_closed(alpha)?;
    check_time("t", t)?;
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let g = gamma(1.0 + alpha);
    Ok(t.powf(2.0 * alpha) * (2.0 / gamma(2.0 * alpha + 1.0) - 1.0 / (g * g)))
}

fn check_alpha_closed(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} is outside (0, 1]"),
        ));
    }
    Ok(())
}

/// `Cov(L(s), L(t))`.
///
/// With `m = min(s,t)`, `M = max(s,t)` the defining integral
/// `(1/(αΓ(α)²)) ∫_0^m ((M−x)^α + (m−x)^α) x^{α−1} dx − (mM)^α/Γ(1+α)²`
/// is rearranged so the large cancelling constant is absorbed into the
/// integrand, `(M−x)^α − M^α = M^α expm1(α ln1p(−x/M))`, and then
/// `v = x^α` removes the endpoint singularity:
/// `Cov = (1/Γ(1+α)²) ∫_0^{m^α} [M^α expm1(α ln1p(−x/M)) + (m−x)^α] dv`.
/// `α = 1` is deterministic and returns 0.
pub fn covariance_inverse_stable(alpha: f64, s: f64, t: f64) -> Result<f64> {
    check_alpha_closed(alpha)?;
    check_time("s", s)?;
    check_time("t", t)?;
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let (m, big) = if s <= t { (s, t) } else { (t, s) };
    if m == 0.0 {
        return Ok(0.0);
    }
    let big_a = big.powf(alpha);
    let inv_alpha = 1.0 / alpha;
    let integrand = |v: f64| {
        let x = v.powf(inv_alpha).min(m);
        big_a * (alpha * (-x / big).ln_1p()).exp_m1() + (m - x).powf(alpha)
    };
    let g = gamma(1.0 + alpha);
    let integral = quadrature::integrate(integrand, 0.0, m.powf(alpha), 1e-10 * g * g)?;
    Ok((integral / (g * g)).max(0.0))
}

/// Density of `L(t)` at `α = 1/2`: the half-normal `(πt)^{−1/2} e^{−x²/(4t)}`.
pub fn inverse_half_density(x: f64, t: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    (std::f64::consts::PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp()
}

/// CDF of `L(t)` at `α = 1/2`: `erf(x / (2√t))`.
pub fn inverse_half_cdf(x: f64, t: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    libm::erf(x / (2.0 * t.sqrt()))
}

/// `|D_t^{1/2} l(x,t) + ∂_x l(x,t)|` at `α = 1/2`, with the Riemann–Liouville
/// derivative computed as a central difference of
/// `(1/Γ(1/2)) ∫_0^t l(x,s)(t−s)^{−1/2} ds`. Substituting `s = t(1−w²)`
/// makes the inner integrand `2√t · l(x, t(1−w²))`, which is smooth.
pub fn governing_residual_half(x: f64, t: f64, dt: f64) -> Result<f64> {
    if !(x > 0.0 && t > dt && dt > 0.0) {
        return Err(Error::invalid("x", "need x > 0 and t > dt > 0"));
    }
    let inner = |tt: f64| {
        quadrature::integrate(
            |w| 2.0 * tt.sqrt() * inverse_half_density(x, tt * (1.0 - w * w)),
            0.0,
            1.0,
            1e-13,
        )
    };
    let rl = (inner(t + dt)? - inner(t - dt)?) / (2.0 * dt * std::f64::consts::PI.sqrt());
    let minus_dx = x / (2.0 * t) * inverse_half_density(x, t);
    Ok((rl - minus_dx).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_branches() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            sample_inverse_stable_marginal(0.5, 0.0, &mut rng).unwrap(),
            0.0
        );
        assert_eq!(
            sample_inverse_stable_marginal(1.0, 2.5, &mut rng).unwrap(),
            2.5
        );
        assert_eq!(inverse_stable_mean(1.0, 3.7).unwrap(), 3.7);
        assert_eq!(inverse_stable_mean(0.4, 0.0).unwrap(), 0.0);
        assert!(sample_stable_increment(1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn mean_at_half() {
        let v = inverse_stable_mean(0.5, 1.0).unwrap();
        assert!((v - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn covariance_closed_forms() {
        let v = covariance_inverse_stable(0.5, 1.0, 1.0).unwrap();
        assert!((v - (2.0 - 4.0 / std::f64::consts::PI)).abs() < 1e-10);
        assert_eq!(covariance_inverse_stable(0.5, 0.0, 3.0).unwrap(), 0.0);
        for &(a, t) in &[(0.3, 0.7), (0.5, 2.0), (0.8, 5.0)] {
            let q = covariance_inverse_stable(a, t, t).unwrap();
            let v = inverse_stable_variance(a, t).unwrap();
            assert!(((q - v) / v).abs() < 1e-8, "alpha={a} t={t}: {q} vs {v}");
        }
    }

    #[test]
    fn path_is_monotone_from_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = [0.0, 0.5, 1.0, 1.5, 3.0];
        for _ in 0..50 {
            let p = sample_inverse_stable_path(0.6, &grid, 1e-2, &mut rng).unwrap();
            assert_eq!(p.values[0], 0.0);
            assert!(p.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn budget_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err =
            sample_inverse_stable_path_with_budget(0.5, &[1e6], 1e-3, 10, &mut rng).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { steps: 10 });
    }
}
