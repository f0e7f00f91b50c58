//! Named validation suites. Every check reports a statistic, the threshold
//! it is held against and a verdict; negative controls are marked
//! `expected_fail` and pass when the corrupted variant is detected.

use std::time::Instant;

use mpp_lab::index::{FracOrders, IndexPoint, RateVector};
use mpp_lab::integrals::{
    gaussian_asymptotic_check, integral_mean, integral_variance, sample_integral_compound,
    sample_integral_quadrature, FracIntegralSpec, DEFAULT_SUBDIVISIONS,
};
use mpp_lab::martingale::{
    increment_independence_test, increment_independence_test_with, run_martingale_test,
    MartingaleFamily, MartingaleTestSpec, SIGNIFICANCE, Z_CONTROL, Z_PASS,
};
use mpp_lab::mc::stats::{chi_square_gof, ks_one_sample, ks_two_sample, DEFAULT_MIN_CELL};
use mpp_lab::mc::{
    replica_seed, run_fold, run_histogram, run_map, Histogram, McConfig, McEstimate,
};
use mpp_lab::mpp::{
    binomial_pmf, mpp_bivariate_conditional_mean, mpp_covariance, poisson_pmf, sample_mpp_path,
    sample_poisson, MppModel,
};
use mpp_lab::special::{erfc, gamma, mittag_leffler, MLParams};
use mpp_lab::subordinators::{
    covariance_inverse_stable, governing_residual_half, inverse_half_cdf, inverse_stable_mean,
    sample_inverse_stable_marginal, sample_inverse_stable_path,
};
use mpp_lab::time_changed::{
    mfpp_moments, mfpp_pmf_by_compositions, mfpp_pmf_vector, sample_mfpp, sample_sfpp,
    sfpp_ode_residual, sfpp_pgf, MfppModel, SfppModel,
};
use rand::Rng;
use serde::Serialize;

use crate::commands::{compare_pmf, Discrete};
use crate::config::{ExperimentConfig, Process};
use crate::output::{Cell, Table};
use crate::CliError;

pub const SUITES: &[&str] = &[
    "special-fn",
    "mpp-core",
    "subordinators",
    "sfpp",
    "mfpp",
    "integrals",
    "gaussian-ladder",
    "martingale",
    "negative-controls",
    "all",
];

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Below,
    Above,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Below => "<",
            Relation::Above => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub statistic: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub pass: bool,
    /// The property itself should fail; `pass` means the failure was seen.
    pub expected_fail: bool,
}

impl Check {
    pub fn below(
        suite: &'static str,
        name: impl Into<String>,
        statistic: f64,
        threshold: f64,
    ) -> Self {
        Check {
            suite,
            name: name.into(),
            statistic,
            relation: Relation::Below,
            threshold,
            pass: statistic < threshold,
            expected_fail: false,
        }
    }

    pub fn above(
        suite: &'static str,
        name: impl Into<String>,
        statistic: f64,
        threshold: f64,
    ) -> Self {
        Check {
            suite,
            name: name.into(),
            statistic,
            relation: Relation::Above,
            threshold,
            pass: statistic > threshold,
            expected_fail: false,
        }
    }

    fn control(mut self) -> Self {
        self.expected_fail = true;
        self
    }
}

pub fn checks_table(checks: &[Check]) -> Table {
    let mut t = Table::new(&[
        "suite",
        "name",
        "statistic",
        "relation",
        "threshold",
        "pass",
        "expected_fail",
    ]);
    for c in checks {
        t.push(vec![
            c.suite.into(),
            Cell::Text(c.name.clone()),
            c.statistic.into(),
            c.relation.symbol().into(),
            c.threshold.into(),
            c.pass.into(),
            c.expected_fail.into(),
        ]);
    }
    t
}

/// Seed, optional replica override and optional user config.
#[derive(Debug, Clone)]
pub struct SuiteContext {
    pub seed: u64,
    pub replicas: Option<u64>,
    pub workers: Option<usize>,
    pub config: Option<ExperimentConfig>,
}

impl Default for SuiteContext {
    fn default() -> Self {
        SuiteContext {
            seed: DEFAULT_SEED,
            replicas: None,
            workers: None,
            config: None,
        }
    }
}

impl SuiteContext {
    pub fn from_config(config: ExperimentConfig) -> Self {
        SuiteContext {
            seed: config.mc.master_seed,
            replicas: Some(config.mc.replicas),
            workers: config.mc.workers,
            config: Some(config),
        }
    }

    /// Each check draws from its own stream so suites can run in any order.
    pub fn mc(&self, default_replicas: u64, stream: u64) -> McConfig {
        McConfig {
            replicas: self.replicas.unwrap_or(default_replicas),
            master_seed: replica_seed(self.seed, stream),
            workers: self.workers,
        }
    }

    fn config_for(&self, process: Process) -> Option<&ExperimentConfig> {
        self.config.as_ref().filter(|c| c.process == process)
    }
}

fn pt(v: &[f64]) -> IndexPoint {
    IndexPoint::new(v.to_vec()).expect("fixed index point")
}

// ---------------------------------------------------------------- special-fn

const SPECIAL: &str = "special-fn";

/// `E_{1,1}(x) = eˣ` on `[−20, 20]`, relative error.
pub fn special_exp_reduction() -> Result<Check, CliError> {
    let p = MLParams::two(1.0, 1.0)?;
    let mut worst: f64 = 0.0;
    for k in 0..=400 {
        let x = -20.0 + 0.1 * k as f64;
        let e = x.exp();
        worst = worst.max((mittag_leffler(&p, x)? - e).abs() / e.max(1.0));
    }
    Ok(Check::below(SPECIAL, "exp_reduction_rel_err", worst, 1e-12))
}

/// `E_{α,β}(x) = x E_{α,α+β}(x) + 1/Γ(β)` over α ∈ {0.3,0.5,0.8},
/// β ∈ {0.5,1,2}, x ∈ [−5,5]; error relative to `max(1, |E|)`.
pub fn special_recurrence() -> Result<Check, CliError> {
    let mut worst: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.8] {
        for beta in [0.5, 1.0, 2.0] {
            let lhs_p = MLParams::two(alpha, beta)?;
            let rhs_p = MLParams::two(alpha, alpha + beta)?;
            for k in 0..=40 {
                let x = -5.0 + 0.25 * k as f64;
                let lhs = mittag_leffler(&lhs_p, x)?;
                let rhs = x * mittag_leffler(&rhs_p, x)? + 1.0 / gamma(beta);
                worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
            }
        }
    }
    Ok(Check::below(SPECIAL, "recurrence_rel_err", worst, 1e-10))
}

/// `E_{1/2,1}(−1) = e·erfc(1)`.
pub fn special_erfc_identity() -> Result<Check, CliError> {
    let v = mittag_leffler(&MLParams::two(0.5, 1.0)?, -1.0)?;
    let err = (v - std::f64::consts::E * erfc(1.0)).abs();
    Ok(Check::below(
        SPECIAL,
        "half_order_erfc_identity",
        err,
        1e-10,
    ))
}

/// `x ↦ E_{α,1}(−x)` decreasing and in `(0, 1]` on `[0, 10]`.
pub fn special_complete_monotonicity() -> Result<Check, CliError> {
    let mut violations = 0usize;
    for alpha in [0.3, 0.5, 0.8, 1.0] {
        let p = MLParams::two(alpha, 1.0)?;
        let mut prev = f64::INFINITY;
        for k in 0..=100 {
            let v = mittag_leffler(&p, -0.1 * k as f64)?;
            if !(v > 0.0 && v <= 1.0 + 1e-15 && v <= prev) {
                violations += 1;
            }
            prev = v;
        }
    }
    Ok(Check::below(
        SPECIAL,
        "monotone_violations",
        violations as f64,
        0.5,
    ))
}

pub fn special_fn() -> Result<Vec<Check>, CliError> {
    Ok(vec![
        special_exp_reduction()?,
        special_recurrence()?,
        special_erfc_identity()?,
        special_complete_monotonicity()?,
    ])
}

// ------------------------------------------------------------------ mpp-core

const MPP: &str = "mpp-core";

#[derive(Debug, Clone, PartialEq)]
pub struct MppParams {
    pub model: MppModel,
    pub t: IndexPoint,
}

impl Default for MppParams {
    fn default() -> Self {
        MppParams {
            model: MppModel::from_rates(vec![1.0, 2.0]).expect("rates"),
            t: pt(&[1.0, 1.0]),
        }
    }
}

impl MppParams {
    fn from_context(ctx: &SuiteContext) -> Result<Self, CliError> {
        match ctx.config_for(Process::Mpp) {
            Some(c) => Ok(MppParams {
                model: c.mpp_model()?,
                t: c.t_point()?,
            }),
            None => Ok(MppParams::default()),
        }
    }
}

/// Chi-square fit of `N(t)` from sampled paths against `Poisson(Λ·t)`.
pub fn mpp_law(ctx: &SuiteContext, p: &MppParams) -> Result<Check, CliError> {
    let process = Discrete::Mpp(p.model.clone(), p.t.clone());
    let cmp = compare_pmf(&process, &ctx.mc(1_000_000, 101), 60)?;
    Ok(Check::above(
        MPP,
        "law_chi_square_p",
        cmp.gof.p_value,
        SIGNIFICANCE,
    ))
}

/// `N(s) | N(t) = m` against `Binomial(m, Λ·s/Λ·t)` for each `m`, with
/// `s = t/3` so the success probability is 1/3.
pub fn mpp_conditional_binomial(
    ctx: &SuiteContext,
    p: &MppParams,
    ms: &[u64],
) -> Result<Vec<Check>, CliError> {
    let s = p.t.scaled(1.0 / 3.0)?;
    let prob = p.model.mean(&s)? / p.model.mean(&p.t)?;
    let (model, t) = (&p.model, &p.t);
    let hists: Vec<Histogram> = run_fold(
        &ctx.mc(1_000_000, 102),
        || vec![Histogram::new(); ms.len()],
        |rng, _, acc: &mut Vec<Histogram>| {
            let path = sample_mpp_path(model, t, rng)?;
            let nt = path.eval_coords(t.coords());
            if let Some(k) = ms.iter().position(|&m| m == nt) {
                acc[k].push(path.eval_coords(s.coords()) as usize);
            }
            Ok(())
        },
    )?;
    ms.iter()
        .zip(hists)
        .map(|(&m, h)| {
            let mut counts = h.counts;
            counts.resize(m as usize + 1, 0);
            let r = chi_square_gof(
                &counts,
                |k| Ok(binomial_pmf(m, prob, k as u64)),
                DEFAULT_MIN_CELL,
            )?;
            Ok(Check::above(
                MPP,
                format!("conditional_binomial_m{m}_p"),
                r.p_value,
                SIGNIFICANCE,
            ))
        })
        .collect()
}

/// `E[N(r)N(s) | N(t)=m]` by summing over the trinomial law of
/// `(N(r), N(s)−N(r), N(t)−N(s))`.
pub fn trinomial_bivariate_mean(pr: f64, ps: f64, m: u64) -> f64 {
    let ln_fact = |k: u64| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    let (p1, p2, p3) = (pr, ps - pr, 1.0 - ps);
    let mut total = 0.0;
    for a in 0..=m {
        for b in 0..=(m - a) {
            let c = m - a - b;
            let ln_coef = ln_fact(m) - ln_fact(a) - ln_fact(b) - ln_fact(c);
            let pw = |p: f64, k: u64| if k == 0 { 1.0 } else { p.powi(k as i32) };
            let prob = ln_coef.exp() * pw(p1, a) * pw(p2, b) * pw(p3, c);
            total += prob * (a * (a + b)) as f64;
        }
    }
    total
}

/// Largest gap between the closed form and the trinomial sum, `m ≤ 6`.
pub fn mpp_bivariate_enumeration() -> Result<Check, CliError> {
    let model = MppModel::from_rates(vec![1.0, 2.0])?;
    let t = pt(&[1.0, 1.0]);
    let configs = [
        (pt(&[0.2, 0.3]), pt(&[0.5, 0.6])),
        (pt(&[0.5, 0.1]), pt(&[0.5, 0.9])),
        (pt(&[0.1, 0.4]), pt(&[0.7, 0.4])),
    ];
    let lt = model.mean(&t)?;
    let mut worst: f64 = 0.0;
    for (r, s) in &configs {
        let (pr, ps) = (model.mean(r)? / lt, model.mean(s)? / lt);
        for m in 0..=6 {
            let closed = mpp_bivariate_conditional_mean(&model, r, s, &t, m)?;
            worst = worst.max((closed - trinomial_bivariate_mean(pr, ps, m)).abs());
        }
    }
    Ok(Check::below(
        MPP,
        "bivariate_conditional_mean_abs_err",
        worst,
        1e-12,
    ))
}

/// `Cov(N(s), N(t)) = Σ λ_i min(s_i, t_i)` against sampled paths.
pub fn mpp_covariance_check(ctx: &SuiteContext, p: &MppParams) -> Result<Check, CliError> {
    let s = IndexPoint::new(
        p.t.coords()
            .iter()
            .enumerate()
            .map(|(i, x)| x * (0.4 + 0.2 * i as f64))
            .collect(),
    )?;
    let t = &p.t;
    let cov = mpp_covariance(&p.model, &s, t)?;
    let (ms, mt) = (p.model.mean(&s)?, p.model.mean(t)?);
    let est = mpp_lab::mc::run_replicas(&ctx.mc(100_000, 103), |rng| {
        let path = sample_mpp_path(&p.model, t, rng)?;
        Ok((path.eval_coords(s.coords()) as f64 - ms) * (path.eval_coords(t.coords()) as f64 - mt))
    })?;
    Ok(Check::below(
        MPP,
        "covariance_abs_z",
        est.z_score(cov).abs(),
        Z_PASS,
    ))
}

pub fn mpp_increment_independence(ctx: &SuiteContext) -> Result<Vec<Check>, CliError> {
    let two = MppModel::from_rates(vec![1.0, 2.0])?;
    let chain = [
        pt(&[0.0, 0.0]),
        pt(&[1.0, 1.0]),
        pt(&[2.0, 1.0]),
        pt(&[2.0, 2.0]),
    ];
    let r2 = increment_independence_test(&two, &chain, &ctx.mc(100_000, 104))?;
    let one = MppModel::from_rates(vec![1.0])?;
    let line = [pt(&[0.0]), pt(&[1.0]), pt(&[2.0]), pt(&[3.0])];
    let r1 = increment_independence_test(&one, &line, &ctx.mc(100_000, 105))?;
    let mut out = Vec::new();
    for (label, r) in [("d2", &r2), ("d1", &r1)] {
        let worst_z = r.pairs.iter().map(|p| p.z.abs()).fold(0.0, f64::max);
        let min_p = r.pairs.iter().map(|p| p.p_value).fold(1.0, f64::min);
        out.push(Check::below(
            MPP,
            format!("increments_{label}_max_abs_corr_z"),
            worst_z,
            Z_PASS,
        ));
        out.push(Check::above(
            MPP,
            format!("increments_{label}_min_contingency_p"),
            min_p,
            SIGNIFICANCE,
        ));
    }
    Ok(out)
}

pub fn mpp_core(ctx: &SuiteContext) -> Result<Vec<Check>, CliError> {
    let p = MppParams::from_context(ctx)?;
    let mut out = vec![mpp_law(ctx, &p)?];
    out.extend(mpp_conditional_binomial(ctx, &p, &[2, 5])?);
    out.push(mpp_bivariate_enumeration()?);
    out.push(mpp_covariance_check(ctx, &p)?);
    out.extend(mpp_increment_independence(ctx)?);
    Ok(out)
}

// ------------------------------------------------------------- subordinators

const SUB: &str = "subordinators";

/// Clock step for path-based subordinator checks.
pub const PATH_RESOLUTION: f64 = 1e-3;

/// Sample mean of `L(1)` at `α = 1/2` against `2/√π`.
pub fn inverse_mean_check(ctx: &SuiteContext) -> Result<Check, CliError> {
    let est = mpp_lab::mc::run_replicas(&ctx.mc(1_000_000, 201), |rng| {
        sample_inverse_stable_marginal(0.5, 1.0, rng)
    })?;
    let z = est.z_score(2.0 / std::f64::consts::PI.sqrt());
    Ok(Check::below(SUB, "inverse_mean_abs_z", z.abs(), Z_PASS))
}

/// `L(1)` at `α = 1/2` against the half-normal law, one-sample KS.
pub fn half_normal_check(ctx: &SuiteContext) -> Result<Check, CliError> {
    let xs = run_map(&ctx.mc(100_000, 202), |rng, _| {
        sample_inverse_stable_marginal(0.5, 1.0, rng)
    })?;
    let ks = ks_one_sample(&xs, |x| inverse_half_cdf(x, 1.0))?;
    Ok(Check::above(
        SUB,
        "half_normal_ks_p",
        ks.p_value,
        SIGNIFICANCE,
    ))
}

/// `Cov(L(s), L(t))` by quadrature against sampled clock paths.
pub fn inverse_covariance_check(
    ctx: &SuiteContext,
    alpha: f64,
    s: f64,
    t: f64,
) -> Result<Check, CliError> {
    let cov = covariance_inverse_stable(alpha, s, t)?;
    let (ms, mt) = (
        inverse_stable_mean(alpha, s)?,
        inverse_stable_mean(alpha, t)?,
    );
    let grid = [s.min(t), s.max(t)];
    let est = mpp_lab::mc::run_replicas(&ctx.mc(100_000, 203), |rng| {
        let path = sample_inverse_stable_path(alpha, &grid, PATH_RESOLUTION, rng)?;
        Ok((path.values[0] - ms) * (path.values[1] - mt))
    })?;
    Ok(Check::below(
        SUB,
        format!("covariance_a{alpha}_s{s}_t{t}_abs_z"),
        est.z_score(cov).abs(),
        Z_PASS,
    ))
}

/// `L(2)` read off a path against the one-shot marginal sampler.
pub fn path_marginal_check(ctx: &SuiteContext) -> Result<Check, CliError> {
    let from_path = run_map(&ctx.mc(10_000, 204), |rng, _| {
        Ok(sample_inverse_stable_path(0.7, &[1.0, 2.0], PATH_RESOLUTION, rng)?.values[1])
    })?;
    let direct = run_map(&ctx.mc(10_000, 205), |rng, _| {
        sample_inverse_stable_marginal(0.7, 2.0, rng)
    })?;
    let ks = ks_two_sample(&from_path, &direct)?;
    Ok(Check::above(
        SUB,
        "path_vs_marginal_ks_p",
        ks.p_value,
        SIGNIFICANCE,
    ))
}

/// Residual of the half-order governing equation on a grid.
pub fn governing_residual_check() -> Result<Check, CliError> {
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0] {
        for k in 1..=12 {
            worst = worst.max(governing_residual_half(0.25 * k as f64, t, 1e-4)?);
        }
    }
    Ok(Check::below(
        SUB,
        "governing_equation_residual",
        worst,
        1e-3,
    ))
}

pub fn subordinators(ctx: &SuiteContext) -> Result<Vec<Check>, CliError> {
    Ok(vec![
        inverse_mean_check(ctx)?,
        half_normal_check(ctx)?,
        inverse_covariance_check(ctx, 0.5, 1.0, 2.0)?,
        path_marginal_check(ctx)?,
        governing_residual_check()?,
    ])
}

// ---------------------------------------------------------------------- sfpp

const SFPP: &str = "sfpp";

#[derive(Debug, Clone, PartialEq)]
pub struct SfppParams {
    pub model: SfppModel,
    pub t: f64,
}

impl Default for SfppParams {
    fn default() -> Self {
        SfppParams {
            model: SfppModel::new(
                RateVector::new(vec![1.0]).expect("rates"),
                FracOrders::new(vec![0.6]).expect("orders"),
            )
            .expect("model"),
            t: 0.5,
        }
    }
}

impl SfppParams {
    fn from_context(ctx: &SuiteContext) -> Result<Self, CliError> {
        match ctx.config_for(Process::Sfpp) {
            Some(c) => {
                let (model, t) = c.sfpp_model()?;
                Ok(SfppParams { model, t })
            }
            None => Ok(SfppParams::default()),
        }
    }
}

pub fn sfpp(ctx: &SuiteContext) -> Result<Vec<Check>, CliError> {
    let p = SfppParams::from_context(ctx)?;
    sfpp_checks(ctx, &p)
}

/// ODE residual, pmf fit and pgf identity from one pass of draws.
pub fn sfpp_checks(ctx: &SuiteContext, p: &SfppParams) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let dt = 1e-4;
    if p.t > dt {
        let r = sfpp_ode_residual(&p.model, 10, p.t, dt)?;
        out.push(Check::below(SFPP, "ode_residual", r, 1e-5));
    }
    const CUT: usize = 60;
    let us: [f64; 3] = [0.2, 0.5, 0.8];
    let pmf = mpp_lab::time_changed::sfpp_pmf_vector(&p.model, CUT, p.t)?;
    let (hist, pgf): (Histogram, Vec<McEstimate>) = run_fold(
        &ctx.mc(1_000_000, 301),
        || (Histogram::new(), vec![McEstimate::new(); us.len()]),
        |rng, _, (h, e): &mut (Histogram, Vec<McEstimate>)| {
            let n = sample_sfpp(&p.model, p.t, rng)?;
            h.push(n.min(CUT as u64 + 1) as usize);
            let k = n.min(i32::MAX as u64) as i32;
            for (est, u) in e.iter_mut().zip(us) {
                est.push(u.powi(k));
            }
            Ok(())
        },
    )?;
    let mut counts = hist.counts;
    counts.resize(CUT + 2, 0);
    let head: f64 = pmf.iter().sum();
    let gof = chi_square_gof(
        &counts,
        |k| {
            Ok(if k <= CUT {
                pmf[k]
            } else {
                (1.0 - head).max(0.0)
            })
        },
        DEFAULT_MIN_CELL,
    )?;
    out.push(Check::above(
        SFPP,
        "pmf_chi_square_p",
        gof.p_value,
        SIGNIFICANCE,
    ));
    for (u, est) in us.iter().zip(&pgf) {
        let z = est.z_score(sfpp_pgf(&p.model, *u, p.t)?);
        out.push(Check::below(
            SFPP,
            format!("pgf_u{u}_abs_z"),
            z.abs(),
            Z_PASS,
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------- mfpp

const MFPP: &str = "mfpp";

#[derive(Debug, Clone, PartialEq)]
pub struct MfppParams {
    pub model: MfppModel,
    pub t: IndexPoint,
}

impl Default for MfppParams {
    fn default() -> Self {
        MfppParams {
            model: MfppModel::new(
                RateVector::new(vec![1.0, 1.0]).expect("rates"),
                FracOrders::new(vec![0.5, 0.5]).expect("orders"),
            )
            .expect("model"),
            t: pt(&[1.0, 1.0]),
        }
    }
}

impl MfppParams {
    fn from_context(ctx: &SuiteContext) -> Result<Self, CliError> {
        match ctx.config_for(Process::Mfpp) {
            Some(c) => Ok(MfppParams {
                model: c.mfpp_model()?,
                t: c.t_point()?,
            }),
            None => Ok(MfppParams::default()),
        }
    }
}

/// Convolution of marginals against the `Θ(n,d)` sum for `n ≤ 8`.
pub fn mfpp_convolution_check(p: &MfppParams) -> Result<Check, CliError> {
    let conv = mfpp_pmf_vector(&p.model, 8, &p.t)?;
    let mut worst: f64 = 0.0;
    for (n, c) in conv.iter().enumerate() {
        worst = worst.max((c - mfpp_pmf_by_compositions(&p.model, n as u64, &p.t)?).abs());
    }
    Ok(Check::below(
        MFPP,
        "convolution_vs_enumeration_abs_err",
        worst,
        1e-12,
    ))
}

pub fn mfpp_checks(ctx: &SuiteContext, p: &MfppParams) -> Result<Vec<Check>, CliError> {
    const CUT: usize = 60;
    let pmf = mfpp_pmf_vector(&p.model, CUT, &p.t)?;
    let (mean, var) = mfpp_moments(&p.model, &p.t)?;
    let (hist, est): (Histogram, Vec<McEstimate>) = run_fold(
        &ctx.mc(1_000_000, 401),
        || (Histogram::new(), vec![McEstimate::new(); 2]),
        |rng, _, (h, e): &mut (Histogram, Vec<McEstimate>)| {
            let n = sample_mfpp(&p.model, &p.t, rng)?;
            h.push(n.min(CUT as u64 + 1) as usize);
            e[0].push(n as f64);
            e[1].push((n as f64 - mean).powi(2));
            Ok(())
        },
    )?;
    let mut counts = hist.counts;
    counts.resize(CUT + 2, 0);
    let head: f64 = pmf.iter().sum();
    let gof = chi_square_gof(
        &counts,
        |k| {
            Ok(if k <= CUT {
                pmf[k]
            } else {
                (1.0 - head).max(0.0)
            })
        },
        DEFAULT_MIN_CELL,
    )?;
    Ok(vec![
        Check::above(MFPP, "pmf_chi_square_p", gof.p_value, SIGNIFICANCE),
        mfpp_convolution_check(p)?,
        Check::below(MFPP, "mean_abs_z", est[0].z_score(mean).abs(), Z_PASS),
        Check::below(MFPP, "variance_abs_z", est[1].z_score(var).abs(), Z_PASS),
    ])
}

/// The fractional variant's inversion sampler against its pmf.
pub fn fractional_variant_check(ctx: &SuiteContext) -> Result<Check, CliError> {
    let rates = RateVector::new(vec![1.0, 2.0])?;
    let t = pt(&[1.0, 1.0]);
    let sampler = mpp_lab::time_changed::FractionalVariantSampler::new(&rates, 0.7, &t)?;
    let process = Discrete::Variant {
        rates,
        alpha: 0.7,
        t,
        sampler,
    };
    let cmp = compare_pmf(&process, &ctx.mc(100_000, 402), 60)?;
    Ok(Check::above(
        MFPP,
        "fractional_variant_chi_square_p",
        cmp.gof.p_value,
        SIGNIFICANCE,
    ))
}

pub fn mfpp(ctx: &SuiteContext) -> Result<Vec<Check>, CliError> {
    let p = MfppParams::from_context(ctx)?;
    let mut out = mfpp_checks(ctx, &p)?;
    out.push(fractional_variant_check(ctx)?);
    Ok(out)
}

// ----------------------------------------------------------------- integrals

const INT: &str = "integrals";

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralParams {
    pub spec: FracIntegralSpec,
    pub subdivisions: usize,
}

impl Default for IntegralParams {
    fn default() -> Self {
        IntegralParams {
            spec: FracIntegralSpec::riemann(
                MppModel::from_rates(vec![1.0, 2.0]).expect("rates"),
                pt(&[1.0, 1.0]),
            )
            .expect("spec"),
            subdivisions: DEFAULT_SUBDIVISIONS,
        }
    }
}

impl IntegralParams {
    fn from_context(ctx: &SuiteContext) -> Result<Self, CliError> {
        match ctx.config_for(Process::Integral) {
            Some(c) => Ok(IntegralParams {
                spec: FracIntegralSpec::new(c.mpp_model()?, c.rho_orders()?, c.t_point()?)?,
                subdivisions: c.subdivisions.unwrap_or(DEFAULT_SUBDIVISIONS),
            }),
            None => Ok(IntegralParams::default()),
        }
    }
}

/// Compound representation vs path quadrature (KS), and both samplers'
/// moments against the closed forms. Non-Riemann orders only run the
/// quadrature moment checks.
pub fn integral_checks(ctx: &SuiteContext, p: &IntegralParams) -> Result<Vec<Check>, CliError> {
    let (mean, var) = (integral_mean(&p.spec), integral_variance(&p.spec));
    let quad = run_map(&ctx.mc(10_000, 501), |rng, _| {
        sample_integral_quadrature(&p.spec, p.subdivisions, rng)
    })?;
    let mut out = Vec::new();
    let riemann = p.spec.rho().orders().iter().all(|&r| r == 1.0);
    let mut samples = vec![("quadrature", quad)];
    if riemann {
        let compound = run_map(&ctx.mc(10_000, 502), |rng, _| {
            sample_integral_compound(&p.spec, rng)
        })?;
        let ks = ks_two_sample(&compound, &samples[0].1)?;
        out.push(Check::above(
            INT,
            "compound_vs_quadrature_ks_p",
            ks.p_value,
            SIGNIFICANCE,
        ));
        samples.push(("compound", compound));
    }
    for (label, xs) in &samples {
        let m = McEstimate::from_slice(xs);
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        let v = McEstimate::from_slice(&sq);
        out.push(Check::below(
            INT,
            format!("{label}_mean_abs_z"),
            m.z_score(mean).abs(),
            Z_PASS,
        ));
        out.push(Check::below(
            INT,
            format!("{label}_variance_abs_z"),
            v.z_score(var).abs(),
            Z_PASS,
        ));
    }
    Ok(out)
}

pub fn integrals(ctx: &SuiteContext) -> Result<Vec<Check>, CliError> {
    integral_checks(ctx, &IntegralParams::from_context(ctx)?)
}

// ----------------------------------------------------------- gaussian-ladder

const GAUSS: &str = "gaussian-ladder";

pub const LADDER: [f64; 3] = [0.1, 0.05, 0.025];

/// KS distance of the standardised small-scale integral to `N(0,1)` on each
/// rung; a rung passes when it is no larger than the previous one plus the
/// sampling noise `1/√n`.
pub fn gaussian_ladder(ctx: &SuiteContext) -> Result<Vec<Check>, CliError> {
    let model = MppModel::from_rates(vec![1.0, 2.0])?;
    let report = gaussian_asymptotic_check(&model, &LADDER, &ctx.mc(100_000, 601))?;
    let mut out = Vec::new();
    let mut prev = f64::INFINITY;
    for r in &report.rungs {
        out.push(Check::below(
            GAUSS,
            format!("ks_distance_scale{}", r.scale),
            r.ks_distance,
            prev + report.noise,
        ));
        prev = r.ks_distance;
    }
    Ok(out)
}

// ---------------------------------------------------------------- martingale

const MART: &str = "martingale";
const CONTROLS: &str = "negative-controls";

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleParams {
    pub model: MppModel,
    pub orders: FracOrders,
    pub chain: Vec<IndexPoint>,
    pub c: f64,
    pub control_scale: f64,
    pub resolution: f64,
    pub families: Vec<MartingaleFamily>,
}

impl Default for MartingaleParams {
    fn default() -> Self {
        MartingaleParams {
            model: MppModel::from_rates(vec![1.0, 2.0]).expect("rates"),
            orders: FracOrders::new(vec![0.6, 0.8]).expect("orders"),
            chain: vec![
                pt(&[0.0, 0.0]),
                pt(&[0.5, 0.5]),
                pt(&[1.0, 1.0]),
                pt(&[1.5, 2.0]),
            ],
            c: -0.5,
            control_scale: 1.2,
            resolution: 1e-2,
            families: vec![
                MartingaleFamily::CompensatedMpp,
                MartingaleFamily::ExponentialMpp,
                MartingaleFamily::CompensatedMfpp,
            ],
        }
    }
}

impl MartingaleParams {
    fn from_context(ctx: &SuiteContext) -> Result<Self, CliError> {
        let mut p = MartingaleParams::default();
        if let Some(c) = ctx.config_for(Process::Martingale) {
            p.model = c.mpp_model()?;
            p.chain = c.chain_points()?;
            if let Some(f) = c.family {
                p.families = vec![f];
            }
            if c.alpha.is_some() {
                p.orders = c.orders()?;
            }
            p.c = c.c.unwrap_or(p.c);
            p.control_scale = c.control_scale.unwrap_or(p.control_scale);
            p.resolution = c.resolution.unwrap_or(p.resolution);
        }
        Ok(p)
    }
}

/// Per family: the martingale checks and the matching negative controls.
pub fn martingale_checks(
    ctx: &SuiteContext,
    p: &MartingaleParams,
) -> Result<(Vec<Check>, Vec<Check>), CliError> {
    let (mut main, mut controls) = (Vec::new(), Vec::new());
    for (k, &family) in p.families.iter().enumerate() {
        let mut spec = MartingaleTestSpec::new(
            family,
            p.model.clone(),
            p.chain.clone(),
            ctx.mc(1_000_000, 700 + k as u64),
        );
        spec.c = Some(p.c);
        spec.orders = Some(p.orders.clone());
        spec.control_scale = Some(p.control_scale);
        spec.resolution = p.resolution;
        let r = run_martingale_test(&spec)?;
        let name = family.name();
        let mean_z = r.points.iter().map(|q| q.z.abs()).fold(0.0, f64::max);
        main.push(Check::below(
            MART,
            format!("{name}_mean_max_abs_z"),
            mean_z,
            Z_PASS,
        ));
        let orth_z = r
            .orthogonality
            .iter()
            .map(|o| o.z.abs())
            .fold(0.0, f64::max);
        main.push(Check::below(
            MART,
            format!("{name}_orthogonality_max_abs_z"),
            orth_z,
            Z_PASS,
        ));
        let control_z = r
            .points
            .iter()
            .filter(|q| q.t.iter().any(|&x| x > 0.0))
            .filter_map(|q| q.control_z.map(f64::abs))
            .fold(f64::INFINITY, f64::min);
        controls.push(
            Check::above(
                CONTROLS,
                format!("{name}_rate_x{}_min_abs_z", p.control_scale),
                control_z,
                Z_CONTROL,
            )
            .control(),
        );
    }
    Ok((main, controls))
}

/// Increments from a sampler that reuses one Poisson draw for two
/// increments; independence must be rejected.
pub fn broken_increments_control(ctx: &SuiteContext) -> Result<Check, CliError> {
    let r = increment_independence_test_with(3, &ctx.mc(100_000, 801), |rng| {
        let a = sample_poisson(2.0, rng);
        Ok(vec![0, a, 2 * a])
    })?;
    let min_p = r.pairs.iter().map(|q| q.p_value).fold(1.0, f64::min);
    Ok(Check::below(
        CONTROLS,
        "shared_jump_increments_contingency_p",
        min_p,
        SIGNIFICANCE,
    )
    .control())
}

/// Poisson(3) draws fitted against Poisson(4).
pub fn chi_square_power_control(ctx: &SuiteContext) -> Result<Check, CliError> {
    let h = run_histogram(&ctx.mc(100_000, 802), |rng| {
        Ok(sample_poisson(3.0, rng) as usize)
    })?;
    let r = chi_square_gof(
        &h.counts,
        |k| Ok(poisson_pmf(4.0, k as u64)),
        DEFAULT_MIN_CELL,
    )?;
    Ok(Check::below(
        CONTROLS,
        "poisson3_vs_poisson4_chi_square_p",
        r.p_value,
        1e-6,
    )
    .control())
}

/// Uniform against exponential samples, two-sample KS.
pub fn ks_power_control(ctx: &SuiteContext) -> Result<Check, CliError> {
    let u = run_map(&ctx.mc(10_000, 803), |rng, _| Ok(rng.random::<f64>()))?;
    let e = run_map(&ctx.mc(10_000, 804), |rng, _| {
        Ok(-(1.0 - rng.random::<f64>()).ln())
    })?;
    let ks = ks_two_sample(&u, &e)?;
    Ok(Check::below(CONTROLS, "uniform_vs_exponential_ks_p", ks.p_value, 1e-10).control())
}

fn plain_controls(ctx: &SuiteContext) -> Result<Vec<Check>, CliError> {
    Ok(vec![
        broken_increments_control(ctx)?,
        chi_square_power_control(ctx)?,
        ks_power_control(ctx)?,
    ])
}

// ------------------------------------------------------------------- driver

/// Run a named suite; `None` for an unknown name.
pub fn run_suite(name: &str, ctx: &SuiteContext) -> Option<Result<Vec<Check>, CliError>> {
    let run = || -> Result<Vec<Check>, CliError> {
        Ok(match name {
            "special-fn" => special_fn()?,
            "mpp-core" => mpp_core(ctx)?,
            "subordinators" => subordinators(ctx)?,
            "sfpp" => sfpp(ctx)?,
            "mfpp" => mfpp(ctx)?,
            "integrals" => integrals(ctx)?,
            "gaussian-ladder" => gaussian_ladder(ctx)?,
            "martingale" => martingale_checks(ctx, &MartingaleParams::from_context(ctx)?)?.0,
            "negative-controls" => {
                let mut out = martingale_checks(ctx, &MartingaleParams::from_context(ctx)?)?.1;
                out.extend(plain_controls(ctx)?);
                out
            }
            "all" => {
                let mut out = special_fn()?;
                out.extend(mpp_core(ctx)?);
                out.extend(subordinators(ctx)?);
                out.extend(sfpp(ctx)?);
                out.extend(mfpp(ctx)?);
                out.extend(integrals(ctx)?);
                out.extend(gaussian_ladder(ctx)?);
                let (main, controls) =
                    martingale_checks(ctx, &MartingaleParams::from_context(ctx)?)?;
                out.extend(main);
                out.extend(controls);
                out.extend(plain_controls(ctx)?);
                out
            }
            _ => unreachable!(),
        })
    };
    SUITES.contains(&name).then(run)
}

/// Run a closure and report its wall time in seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
