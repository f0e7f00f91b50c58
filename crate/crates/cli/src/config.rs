//! Experiment configs: JSON in, validated model objects out.

use std::path::PathBuf;

use mpp_lab::index::{FracOrders, IndexPoint, RateVector};
use mpp_lab::martingale::MartingaleFamily;
use mpp_lab::mc::McConfig;
use mpp_lab::mpp::MppModel;
use mpp_lab::time_changed::{MfppModel, SfppModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SEED_ENV: &str = "MPP_LAB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Mpp,
    Mvmpp,
    Sfpp,
    Mfpp,
    FractionalVariant,
    Integral,
    Martingale,
}

impl Process {
    pub fn name(self) -> &'static str {
        match self {
            Process::Mpp => "mpp",
            Process::Mvmpp => "mvmpp",
            Process::Sfpp => "sfpp",
            Process::Mfpp => "mfpp",
            Process::FractionalVariant => "fractional_variant",
            Process::Integral => "integral",
            Process::Martingale => "martingale",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

fn default_n_max() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub process: Process,
    pub d: usize,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Martingale family; defaults to the compensated field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<MartingaleFamily>,
    /// Exponential-martingale parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Rate multiplier of the negative-control compensator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_scale: Option<f64>,
    /// Operational-time step of inverse-stable clock paths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    /// Cells per axis for path quadrature of integrals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdivisions: Option<usize>,
    pub mc: McConfig,
    #[serde(default, skip_serializing_if = "is_default_output")]
    pub output: OutputSpec,
}

fn is_default_output(o: &OutputSpec) -> bool {
    *o == OutputSpec::default()
}

/// Command-line overrides; flag beats environment beats config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub output: Option<PathBuf>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| config_err(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply overrides, reading the seed variable through `env_seed`.
    pub fn apply(&mut self, ov: &Overrides, env_seed: Option<String>) -> Result<(), CliError> {
        if let Some(seed) = ov.seed {
            self.mc.master_seed = seed;
        } else if let Some(raw) = env_seed {
            self.mc.master_seed = raw.trim().parse().map_err(|_| {
                config_err(format!(
                    "{SEED_ENV}: expected an unsigned 64-bit integer, got {raw:?}"
                ))
            })?;
        }
        if let Some(n) = ov.replicas {
            self.mc.replicas = n;
        }
        if let Some(p) = &ov.output {
            self.output.path = Some(p.clone());
        }
        self.validate()
    }

    /// The config as recorded in provenance headers. Worker count and output
    /// path do not change results, so they are dropped.
    pub fn canonical(&self) -> ExperimentConfig {
        let mut c = self.clone();
        c.mc.workers = None;
        c.output.path = None;
        c
    }

    pub fn to_compact_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = self.d;
        if d == 0 {
            return Err(config_err("d: must be at least 1"));
        }
        if self.mc.replicas == 0 {
            return Err(config_err("mc.replicas: must be at least 1"));
        }
        if self.mc.workers == Some(0) {
            return Err(config_err("mc.workers: must be at least 1"));
        }
        expect_len("lambda", &self.lambda, d)?;
        for (name, v) in [
            ("alpha", &self.alpha),
            ("rho", &self.rho),
            ("s", &self.s),
            ("r", &self.r),
        ] {
            if let Some(v) = v {
                expect_len(name, v, self.len_for(name))?;
            }
        }
        if let Some(t) = &self.t {
            expect_len("t", t, self.len_for("t"))?;
        }
        if let Some(chain) = &self.chain {
            for (k, p) in chain.iter().enumerate() {
                if p.len() != d {
                    return Err(config_err(format!(
                        "chain[{k}]: expected d={d} entries, got {}",
                        p.len()
                    )));
                }
            }
        }
        match self.process {
            Process::Mpp | Process::Mvmpp | Process::Integral => {
                self.require_t()?;
            }
            Process::Sfpp | Process::Mfpp => {
                self.require_t()?;
                self.require("alpha", self.alpha.is_some())?;
            }
            Process::FractionalVariant => {
                self.require_t()?;
                self.require("alpha", self.alpha.is_some())?;
            }
            Process::Martingale => {
                self.require("chain", self.chain.is_some())?;
                let family = self.family.unwrap_or(MartingaleFamily::CompensatedMpp);
                match family {
                    MartingaleFamily::ExponentialMpp => self.require("c", self.c.is_some())?,
                    MartingaleFamily::CompensatedMfpp => {
                        self.require("alpha", self.alpha.is_some())?
                    }
                    MartingaleFamily::CompensatedMpp => {}
                }
            }
        }
        if let Some(res) = self.resolution {
            if !(res > 0.0 && res.is_finite()) {
                return Err(config_err("resolution: must be positive"));
            }
        }
        if self.subdivisions.is_some_and(|m| m < 2) {
            return Err(config_err("subdivisions: must be at least 2"));
        }
        Ok(())
    }

    /// Expected list length of a field for this process.
    fn len_for(&self, name: &str) -> usize {
        match (self.process, name) {
            (Process::Sfpp, "t") => 1,
            (Process::FractionalVariant, "alpha") => 1,
            _ => self.d,
        }
    }

    fn require(&self, field: &str, present: bool) -> Result<(), CliError> {
        if present {
            Ok(())
        } else {
            Err(config_err(format!(
                "{field}: required for process {}",
                self.process.name()
            )))
        }
    }

    fn require_t(&self) -> Result<(), CliError> {
        self.require("t", self.t.is_some())
    }

    pub fn rates(&self) -> Result<RateVector, CliError> {
        RateVector::new(self.lambda.clone()).map_err(|e| field_err("lambda", e))
    }

    pub fn mpp_model(&self) -> Result<MppModel, CliError> {
        Ok(MppModel::new(self.rates()?))
    }

    pub fn point(&self, name: &'static str) -> Result<Option<IndexPoint>, CliError> {
        let v = match name {
            "t" => &self.t,
            "s" => &self.s,
            "r" => &self.r,
            _ => unreachable!("unknown index field {name}"),
        };
        v.as_ref()
            .map(|v| IndexPoint::new(v.clone()).map_err(|e| field_err(name, e)))
            .transpose()
    }

    pub fn t_point(&self) -> Result<IndexPoint, CliError> {
        self.point("t")?.ok_or_else(|| config_err("t: required"))
    }

    pub fn chain_points(&self) -> Result<Vec<IndexPoint>, CliError> {
        let chain = self
            .chain
            .as_ref()
            .ok_or_else(|| config_err("chain: required"))?;
        chain
            .iter()
            .map(|p| IndexPoint::new(p.clone()).map_err(|e| field_err("chain", e)))
            .collect()
    }

    pub fn orders(&self) -> Result<FracOrders, CliError> {
        let a = self
            .alpha
            .as_ref()
            .ok_or_else(|| config_err("alpha: required"))?;
        FracOrders::new(a.clone()).map_err(|e| field_err("alpha", e))
    }

    pub fn rho_orders(&self) -> Result<FracOrders, CliError> {
        let rho = self.rho.clone().unwrap_or_else(|| vec![1.0; self.d]);
        FracOrders::integral(rho).map_err(|e| field_err("rho", e))
    }

    pub fn sfpp_model(&self) -> Result<(SfppModel, f64), CliError> {
        let model =
            SfppModel::new(self.rates()?, self.orders()?).map_err(|e| field_err("alpha", e))?;
        let t = self.t.as_ref().expect("validated")[0];
        model.check_time(t).map_err(|e| field_err("t", e))?;
        Ok((model, t))
    }

    pub fn mfpp_model(&self) -> Result<MfppModel, CliError> {
        MfppModel::new(self.rates()?, self.orders()?).map_err(|e| field_err("alpha", e))
    }

    pub fn output_format(&self, fallback: Format) -> Format {
        if let Some(ext) = self
            .output
            .path
            .as_ref()
            .and_then(|p| p.extension())
            .and_then(|e| e.to_str())
        {
            match ext {
                "csv" => return Format::Csv,
                "json" | "jsonl" => return Format::Json,
                _ => {}
            }
        }
        self.output.format.unwrap_or(fallback)
    }
}

fn expect_len(name: &str, v: &[f64], want: usize) -> Result<(), CliError> {
    if v.len() == want {
        Ok(())
    } else {
        Err(config_err(format!(
            "{name}: expected d={want} entries, got {}",
            v.len()
        )))
    }
}

fn field_err(field: &str, e: mpp_lab::Error) -> CliError {
    config_err(format!("{field}: {e}"))
}
