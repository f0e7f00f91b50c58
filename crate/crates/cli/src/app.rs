//! Command dispatch shared by the binary and the tests.

use std::fs;
use std::path::{Path, PathBuf};

use crate::commands::{cmd_moments, cmd_pmf, cmd_simulate, Outcome};
use crate::config::{ExperimentConfig, Format, Overrides, SEED_ENV};
use crate::output::{emit, Provenance};
use crate::suites::{checks_table, run_suite, SuiteContext, DEFAULT_SEED, SUITES};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Pmf(PathBuf),
    Moments(PathBuf),
    Simulate(PathBuf),
    Validate {
        suite: String,
        config: Option<PathBuf>,
    },
}

impl Action {
    fn name(&self) -> &'static str {
        match self {
            Action::Pmf(_) => "pmf",
            Action::Moments(_) => "moments",
            Action::Simulate(_) => "simulate",
            Action::Validate { .. } => "validate",
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ExperimentConfig::from_json(&text)
}

/// Seed variable from the process environment.
pub fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

/// Run `action`, write its table and return whether every check passed,
/// plus summary lines for the terminal.
pub fn execute(
    action: &Action,
    ov: &Overrides,
    env_seed: Option<String>,
) -> Result<(bool, Vec<String>), CliError> {
    match action {
        Action::Pmf(p) | Action::Moments(p) | Action::Simulate(p) => {
            let mut cfg = load_config(p)?;
            cfg.apply(ov, env_seed)?;
            let Outcome { table, pass, notes } = match action {
                Action::Pmf(_) => cmd_pmf(&cfg)?,
                Action::Moments(_) => cmd_moments(&cfg)?,
                _ => cmd_simulate(&cfg)?,
            };
            let prov = Provenance::for_config(action.name(), &cfg);
            emit(
                cfg.output.path.as_deref(),
                cfg.output_format(Format::Csv),
                &prov,
                &table,
            )?;
            Ok((pass, notes))
        }
        Action::Validate { suite, config } => {
            if !SUITES.contains(&suite.as_str()) {
                return Err(CliError::Config(format!(
                    "suite: unknown suite {suite:?}; expected one of {}",
                    SUITES.join(", ")
                )));
            }
            let (ctx, cfg) = match config {
                Some(p) => {
                    let mut cfg = load_config(p)?;
                    cfg.apply(ov, env_seed)?;
                    (SuiteContext::from_config(cfg.clone()), Some(cfg))
                }
                None => {
                    let seed = match (ov.seed, env_seed) {
                        (Some(s), _) => s,
                        (None, Some(raw)) => raw.trim().parse().map_err(|_| {
                            CliError::Config(format!(
                                "{SEED_ENV}: expected an unsigned 64-bit integer, got {raw:?}"
                            ))
                        })?,
                        (None, None) => DEFAULT_SEED,
                    };
                    let ctx = SuiteContext {
                        seed,
                        replicas: ov.replicas,
                        ..SuiteContext::default()
                    };
                    (ctx, None)
                }
            };
            if ctx.replicas == Some(0) {
                return Err(CliError::Config("replicas: must be at least 1".into()));
            }
            let checks = run_suite(suite, &ctx).expect("suite name checked")?;
            let mut prov = Provenance {
                command: "validate".into(),
                seed: ctx.seed,
                config: cfg.as_ref().map(ExperimentConfig::canonical),
                extra: vec![("suite".into(), suite.clone())],
            };
            if let (None, Some(n)) = (&cfg, ctx.replicas) {
                prov.extra.push(("replicas".into(), n.to_string()));
            }
            let path = ov
                .output
                .clone()
                .or_else(|| cfg.as_ref().and_then(|c| c.output.path.clone()));
            let format = match &cfg {
                Some(c) => c.output_format(Format::Json),
                None => format_for_path(path.as_deref()).unwrap_or(Format::Json),
            };
            emit(path.as_deref(), format, &prov, &checks_table(&checks))?;
            let pass = checks.iter().all(|c| c.pass);
            let notes = checks
                .iter()
                .map(|c| {
                    format!(
                        "{:<5} {}/{}: {:.4e} {} {:.4e}{}",
                        if c.pass { "pass" } else { "FAIL" },
                        c.suite,
                        c.name,
                        c.statistic,
                        match c.relation {
                            crate::suites::Relation::Below => "<",
                            crate::suites::Relation::Above => ">",
                        },
                        c.threshold,
                        if c.expected_fail {
                            " (expected-fail control)"
                        } else {
                            ""
                        }
                    )
                })
                .collect();
            Ok((pass, notes))
        }
    }
}

fn format_for_path(path: Option<&Path>) -> Option<Format> {
    match path?.extension()?.to_str()? {
        "csv" => Some(Format::Csv),
        "json" | "jsonl" => Some(Format::Json),
        _ => None,
    }
}
