//! The `pmf`, `moments` and `simulate` commands.

use mpp_lab::index::{IndexPoint, RateVector};
use mpp_lab::integrals::{
    integral_mean, integral_variance, sample_integral_compound, sample_integral_quadrature,
    FracIntegralSpec, DEFAULT_SUBDIVISIONS,
};
use mpp_lab::martingale::{
    run_martingale_test, sample_martingale_chain, MartingaleFamily, MartingaleTestSpec, Z_PASS,
};
use mpp_lab::mc::stats::{chi_square_gof, ChiSquareReport, DEFAULT_MIN_CELL};
use mpp_lab::mc::{
    replica_seed, run_fold, run_histogram, run_map, McConfig, McEstimate, ReplicaRng,
};
use mpp_lab::mpp::{mpp_covariance, poisson_pmf, sample_mpp_path, sample_mvmpp, MppModel};
use mpp_lab::subordinators::{covariance_inverse_stable, inverse_stable_mean, DEFAULT_RESOLUTION};
use mpp_lab::time_changed::{
    fractional_variant_moments, fractional_variant_pmf, mfpp_covariance, mfpp_moments,
    mfpp_pmf_vector, sample_mfpp, sample_mfpp_joint, sample_sfpp, sfpp_pgf, sfpp_pmf_vector,
    FractionalVariantSampler, MfppModel, SfppModel,
};

use crate::config::{ExperimentConfig, Process};
use crate::output::{Cell, Table};
use crate::CliError;

pub const SIGNIFICANCE: f64 = 0.01;

/// A finished command: its table and whether every comparator passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub pass: bool,
    /// Human-readable summary lines for stderr.
    pub notes: Vec<String>,
}

/// Integer-valued processes with a closed-form pmf.
pub enum Discrete {
    Mpp(MppModel, IndexPoint),
    Mvmpp(MppModel, IndexPoint),
    Sfpp(SfppModel, f64),
    Mfpp(MfppModel, IndexPoint),
    Variant {
        rates: RateVector,
        alpha: f64,
        t: IndexPoint,
        sampler: FractionalVariantSampler,
    },
}

impl Discrete {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        Ok(match cfg.process {
            Process::Mpp => Discrete::Mpp(cfg.mpp_model()?, cfg.t_point()?),
            Process::Mvmpp => Discrete::Mvmpp(cfg.mpp_model()?, cfg.t_point()?),
            Process::Sfpp => {
                let (m, t) = cfg.sfpp_model()?;
                Discrete::Sfpp(m, t)
            }
            Process::Mfpp => Discrete::Mfpp(cfg.mfpp_model()?, cfg.t_point()?),
            Process::FractionalVariant => {
                let rates = cfg.rates()?;
                let alpha = cfg.alpha.as_ref().expect("validated")[0];
                let t = cfg.t_point()?;
                let sampler = FractionalVariantSampler::new(&rates, alpha, &t)?;
                Discrete::Variant {
                    rates,
                    alpha,
                    t,
                    sampler,
                }
            }
            Process::Integral | Process::Martingale => {
                return Err(CliError::Config(format!(
                    "process: {} has no probability mass function",
                    cfg.process.name()
                )))
            }
        })
    }

    pub fn pmf_vector(&self, n_max: usize) -> Result<Vec<f64>, CliError> {
        Ok(match self {
            Discrete::Mpp(m, t) | Discrete::Mvmpp(m, t) => {
                let mean = m.mean(t)?;
                (0..=n_max as u64).map(|n| poisson_pmf(mean, n)).collect()
            }
            Discrete::Sfpp(m, t) => sfpp_pmf_vector(m, n_max, *t)?,
            Discrete::Mfpp(m, t) => mfpp_pmf_vector(m, n_max, t)?,
            Discrete::Variant {
                rates, alpha, t, ..
            } => (0..=n_max as u64)
                .map(|n| fractional_variant_pmf(rates, *alpha, n, t))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn sample(&self, rng: &mut ReplicaRng) -> Result<u64, mpp_lab::Error> {
        match self {
            Discrete::Mpp(m, t) => Ok(sample_mpp_path(m, t, rng)?.eval_coords(t.coords())),
            Discrete::Mvmpp(m, t) => Ok(sample_mvmpp(m, t, rng)?.total()),
            Discrete::Sfpp(m, t) => sample_sfpp(m, *t, rng),
            Discrete::Mfpp(m, t) => sample_mfpp(m, t, rng),
            Discrete::Variant { sampler, .. } => Ok(sampler.sample(rng)),
        }
    }
}

/// Histogram of `n` draws against the pmf, with every outcome above `cut`
/// folded into one tail cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfComparison {
    pub pmf: Vec<f64>,
    pub counts: Vec<u64>,
    pub replicas: u64,
    pub gof: ChiSquareReport,
}

impl PmfComparison {
    pub fn frequency(&self, n: usize) -> f64 {
        self.counts.get(n).copied().unwrap_or(0) as f64 / self.replicas as f64
    }

    /// `(f̂ − p) / sqrt(p(1−p)/N)`.
    pub fn z(&self, n: usize) -> f64 {
        let p = self.pmf[n];
        let gap = self.frequency(n) - p;
        let se = (p * (1.0 - p) / self.replicas as f64).sqrt();
        if se > 0.0 {
            gap / se
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn compare_pmf(
    process: &Discrete,
    mc: &McConfig,
    cut: usize,
) -> Result<PmfComparison, CliError> {
    let pmf = process.pmf_vector(cut)?;
    let hist = run_histogram(mc, |rng| {
        Ok(process.sample(rng)?.min(cut as u64 + 1) as usize)
    })?;
    let mut counts = hist.counts;
    counts.resize(cut + 2, 0);
    let head: f64 = pmf.iter().sum();
    let gof = chi_square_gof(
        &counts,
        |k| {
            Ok(if k <= cut {
                pmf[k]
            } else {
                (1.0 - head).max(0.0)
            })
        },
        DEFAULT_MIN_CELL,
    )?;
    Ok(PmfComparison {
        pmf,
        counts,
        replicas: mc.replicas,
        gof,
    })
}

/// Histogram cut used for the chi-square test.
fn gof_cut(n_max: usize) -> usize {
    n_max.max(60)
}

pub fn cmd_pmf(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let process = Discrete::from_config(cfg)?;
    let cmp = compare_pmf(&process, &cfg.mc, gof_cut(cfg.n_max))?;
    let mut table = Table::new(&["n", "analytic_p", "mc_p", "z"]);
    for n in 0..=cfg.n_max {
        table.push(vec![
            n.into(),
            cmp.pmf[n].into(),
            cmp.frequency(n).into(),
            cmp.z(n).into(),
        ]);
    }
    let pass = cmp.gof.p_value > SIGNIFICANCE;
    let notes = vec![format!(
        "chi-square {:.4} on {} dof, p = {:.4e} ({})",
        cmp.gof.statistic,
        cmp.gof.dof,
        cmp.gof.p_value,
        if pass { "pass" } else { "FAIL" }
    )];
    Ok(Outcome { table, pass, notes })
}

/// Rows of the moments table.
struct MomentRows {
    table: Table,
    worst_z: f64,
}

impl MomentRows {
    fn new() -> Self {
        MomentRows {
            table: Table::new(&["quantity", "analytic", "mc", "standard_error", "z"]),
            worst_z: 0.0,
        }
    }

    fn push(&mut self, name: impl Into<String>, analytic: f64, est: &McEstimate) {
        let z = est.z_score(analytic);
        self.worst_z = self.worst_z.max(z.abs());
        self.table.push(vec![
            Cell::Text(name.into()),
            analytic.into(),
            est.mean.into(),
            est.standard_error().into(),
            z.into(),
        ]);
    }

    fn finish(self) -> Outcome {
        let pass = self.worst_z < Z_PASS;
        Outcome {
            table: self.table,
            pass,
            notes: vec![format!(
                "largest |z| = {:.3} (threshold {Z_PASS})",
                self.worst_z
            )],
        }
    }
}

/// Estimate every component of a vector kernel at once.
fn estimate_many<K>(mc: &McConfig, k: usize, kernel: K) -> Result<Vec<McEstimate>, CliError>
where
    K: Fn(&mut ReplicaRng) -> Result<Vec<f64>, mpp_lab::Error> + Sync,
{
    Ok(run_fold(
        mc,
        || vec![McEstimate::new(); k],
        |rng, _, acc: &mut Vec<McEstimate>| {
            for (e, x) in acc.iter_mut().zip(kernel(rng)?) {
                e.push(x);
            }
            Ok(())
        },
    )?)
}

fn upper(s: &IndexPoint, t: &IndexPoint) -> Result<IndexPoint, CliError> {
    Ok(IndexPoint::new(
        s.coords()
            .iter()
            .zip(t.coords())
            .map(|(a, b)| a.max(*b))
            .collect(),
    )?)
}

pub fn cmd_moments(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut rows = MomentRows::new();
    match cfg.process {
        Process::Mpp => {
            let model = cfg.mpp_model()?;
            let t = cfg.t_point()?;
            let s = cfg.point("s")?;
            let mu_t = model.mean(&t)?;
            let var_t = mpp_covariance(&model, &t, &t)?;
            let (mu_s, cov) = match &s {
                Some(s) => (model.mean(s)?, mpp_covariance(&model, s, &t)?),
                None => (0.0, 0.0),
            };
            let horizon = match &s {
                Some(s) => upper(s, &t)?,
                None => t.clone(),
            };
            let est = estimate_many(&cfg.mc, 3, |rng| {
                let path = sample_mpp_path(&model, &horizon, rng)?;
                let nt = path.eval_coords(t.coords()) as f64;
                let ns = s
                    .as_ref()
                    .map_or(0.0, |s| path.eval_coords(s.coords()) as f64);
                Ok(vec![nt, (nt - mu_t).powi(2), (ns - mu_s) * (nt - mu_t)])
            })?;
            rows.push("mean N(t)", mu_t, &est[0]);
            rows.push("var N(t)", var_t, &est[1]);
            if s.is_some() {
                rows.push("cov N(s),N(t)", cov, &est[2]);
            }
        }
        Process::Mvmpp => {
            let model = cfg.mpp_model()?;
            let t = cfg.t_point()?;
            let est = estimate_many(&cfg.mc, cfg.d, |rng| {
                Ok(sample_mvmpp(&model, &t, rng)?
                    .counts
                    .iter()
                    .map(|&c| c as f64)
                    .collect())
            })?;
            for (i, ((l, ti), e)) in cfg.lambda.iter().zip(t.coords()).zip(&est).enumerate() {
                rows.push(format!("mean N_{}(t_{})", i + 1, i + 1), l * ti, e);
            }
        }
        Process::Sfpp => {
            let (model, t) = cfg.sfpp_model()?;
            let us: [f64; 3] = [0.2, 0.5, 0.8];
            let est = estimate_many(&cfg.mc, us.len(), |rng| {
                let n = sample_sfpp(&model, t, rng)?.min(i32::MAX as u64) as i32;
                Ok(us.iter().map(|u| u.powi(n)).collect())
            })?;
            for (u, e) in us.iter().zip(&est) {
                rows.push(format!("pgf u={u}"), sfpp_pgf(&model, *u, t)?, e);
            }
        }
        Process::Mfpp => moments_mfpp(cfg, &mut rows)?,
        Process::FractionalVariant => {
            let rates = cfg.rates()?;
            let alpha = cfg.alpha.as_ref().expect("validated")[0];
            let t = cfg.t_point()?;
            let (mean, var) = fractional_variant_moments(&rates, alpha, &t)?;
            let sampler = FractionalVariantSampler::new(&rates, alpha, &t)?;
            let est = estimate_many(&cfg.mc, 2, |rng| {
                let n = sampler.sample(rng) as f64;
                Ok(vec![n, (n - mean).powi(2)])
            })?;
            rows.push("mean", mean, &est[0]);
            rows.push("var", var, &est[1]);
        }
        Process::Integral => {
            let spec = FracIntegralSpec::new(cfg.mpp_model()?, cfg.rho_orders()?, cfg.t_point()?)?;
            let (mean, var) = (integral_mean(&spec), integral_variance(&spec));
            let compound = spec.rho().orders().iter().all(|&r| r == 1.0);
            let cells = cfg.subdivisions.unwrap_or(DEFAULT_SUBDIVISIONS);
            let est = estimate_many(&cfg.mc, 2, |rng| {
                let x = if compound {
                    sample_integral_compound(&spec, rng)?
                } else {
                    sample_integral_quadrature(&spec, cells, rng)?
                };
                Ok(vec![x, (x - mean).powi(2)])
            })?;
            rows.push("mean X(t)", mean, &est[0]);
            rows.push("var X(t)", var, &est[1]);
        }
        Process::Martingale => return martingale_moments(cfg),
    }
    Ok(rows.finish())
}

fn moments_mfpp(cfg: &ExperimentConfig, rows: &mut MomentRows) -> Result<(), CliError> {
    let model = cfg.mfpp_model()?;
    let t = cfg.t_point()?;
    let s = cfg.point("s")?;
    let (mean, var) = mfpp_moments(&model, &t)?;
    let resolution = cfg.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let orders = model.orders().orders().to_vec();
    match &s {
        None => {
            let est = estimate_many(&cfg.mc, 2, |rng| {
                let n = sample_mfpp(&model, &t, rng)? as f64;
                Ok(vec![n, (n - mean).powi(2)])
            })?;
            rows.push("mean N(t)", mean, &est[0]);
            rows.push("var N(t)", var, &est[1]);
        }
        Some(s) => {
            let (mean_s, _) = mfpp_moments(&model, s)?;
            let cov = mfpp_covariance(&model, s, &t)?;
            let d = cfg.d;
            let mean_l: Vec<(f64, f64)> = orders
                .iter()
                .zip(s.coords().iter().zip(t.coords()))
                .map(|(&a, (&si, &ti))| {
                    Ok((inverse_stable_mean(a, si)?, inverse_stable_mean(a, ti)?))
                })
                .collect::<Result<_, mpp_lab::Error>>()?;
            let points = [s.clone(), t.clone()];
            let est = estimate_many(&cfg.mc, 3 + d, |rng| {
                let joint = sample_mfpp_joint(&model, &points, resolution, rng)?;
                let (ns, nt) = (joint.counts[0] as f64, joint.counts[1] as f64);
                let mut out = vec![nt, (nt - mean).powi(2), (ns - mean_s) * (nt - mean)];
                for (i, (ms, mt)) in mean_l.iter().enumerate() {
                    out.push((joint.clocks[0][i] - ms) * (joint.clocks[1][i] - mt));
                }
                Ok(out)
            })?;
            rows.push("mean N(t)", mean, &est[0]);
            rows.push("var N(t)", var, &est[1]);
            rows.push("cov N(s),N(t)", cov, &est[2]);
            for i in 0..d {
                let (si, ti) = (s.coords()[i], t.coords()[i]);
                rows.push(
                    format!("cov L_{}(s_{}),L_{}(t_{})", i + 1, i + 1, i + 1, i + 1),
                    covariance_inverse_stable(orders[i], si, ti)?,
                    &est[3 + i],
                );
            }
        }
    }
    Ok(())
}

fn martingale_spec(cfg: &ExperimentConfig) -> Result<MartingaleTestSpec, CliError> {
    let family = cfg.family.unwrap_or(MartingaleFamily::CompensatedMpp);
    let mut spec = MartingaleTestSpec::new(
        family,
        cfg.mpp_model()?,
        cfg.chain_points()?,
        cfg.mc.clone(),
    );
    spec.c = cfg.c;
    if family == MartingaleFamily::CompensatedMfpp {
        spec.orders = Some(cfg.orders()?);
    }
    spec.control_scale = cfg.control_scale;
    if let Some(r) = cfg.resolution {
        spec.resolution = r;
    }
    Ok(spec)
}

fn martingale_moments(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let report = run_martingale_test(&martingale_spec(cfg)?)?;
    let mut table = Table::new(&["quantity", "analytic", "mc", "standard_error", "z"]);
    for p in &report.points {
        table.push(vec![
            Cell::Text(format!("mean M(t{})", p.index)),
            p.expected.into(),
            p.mean.into(),
            p.standard_error.into(),
            p.z.into(),
        ]);
        if let (Some(m), Some(z)) = (p.control_mean, p.control_z) {
            table.push(vec![
                Cell::Text(format!("control mean M(t{})", p.index)),
                p.expected.into(),
                m.into(),
                p.standard_error.into(),
                z.into(),
            ]);
        }
    }
    for o in &report.orthogonality {
        table.push(vec![
            Cell::Text(format!("corr increment t{}..t{}", o.from, o.to)),
            0.0.into(),
            o.correlation.into(),
            (1.0 / (report.replicas as f64).sqrt()).into(),
            o.z.into(),
        ]);
    }
    let mut notes = vec![format!(
        "{}: {}",
        report.family,
        if report.pass { "pass" } else { "FAIL" }
    )];
    if let Some(detected) = report.control_detected {
        notes.push(format!("negative control detected: {detected}"));
    }
    Ok(Outcome {
        table,
        pass: report.pass,
        notes,
    })
}

/// One row per replica: index, its derived seed, then the sampled values.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let seed = cfg.mc.master_seed;
    let (columns, rows): (Vec<String>, Vec<Vec<Cell>>) = match cfg.process {
        Process::Mvmpp => {
            let model = cfg.mpp_model()?;
            let t = cfg.t_point()?;
            let cols = (1..=cfg.d).map(|i| format!("n{i}")).collect();
            let rows = run_map(&cfg.mc, |rng, _| {
                Ok(sample_mvmpp(&model, &t, rng)?
                    .counts
                    .into_iter()
                    .map(Cell::from)
                    .collect())
            })?;
            (cols, rows)
        }
        Process::Integral => {
            let spec = FracIntegralSpec::new(cfg.mpp_model()?, cfg.rho_orders()?, cfg.t_point()?)?;
            let compound = spec.rho().orders().iter().all(|&r| r == 1.0);
            let cells = cfg.subdivisions.unwrap_or(DEFAULT_SUBDIVISIONS);
            let rows = run_map(&cfg.mc, |rng, _| {
                let x = if compound {
                    sample_integral_compound(&spec, rng)?
                } else {
                    sample_integral_quadrature(&spec, cells, rng)?
                };
                Ok(vec![Cell::from(x)])
            })?;
            (vec!["x".into()], rows)
        }
        Process::Martingale => {
            let spec = martingale_spec(cfg)?;
            let cols = (0..spec.chain.len()).map(|k| format!("m{k}")).collect();
            let rows = run_map(&cfg.mc, |rng, _| {
                Ok(sample_martingale_chain(&spec, rng)?
                    .into_iter()
                    .map(Cell::from)
                    .collect())
            })?;
            (cols, rows)
        }
        _ => {
            let process = Discrete::from_config(cfg)?;
            let rows = run_map(&cfg.mc, |rng, _| Ok(vec![Cell::from(process.sample(rng)?)]))?;
            (vec!["n".into()], rows)
        }
    };
    let mut all = vec!["replica".to_string(), "seed".to_string()];
    all.extend(columns);
    let mut table = Table {
        columns: all,
        rows: Vec::with_capacity(rows.len()),
    };
    for (i, row) in rows.into_iter().enumerate() {
        let mut full = vec![
            Cell::from(i as u64),
            Cell::from(replica_seed(seed, i as u64)),
        ];
        full.extend(row);
        table.rows.push(full);
    }
    Ok(Outcome {
        table,
        pass: true,
        notes: Vec::new(),
    })
}
