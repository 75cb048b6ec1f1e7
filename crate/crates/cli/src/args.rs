//! Argument groups shared by several subcommands.

use clap::{Args, ValueEnum};
use crpmap::raftery::RafteryConfig;
use crpmap::{Dataset, NGPrior, RateFromData};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    /// Sample mean, c0 = 10/N, a0 = 1, b0 from the per-dimension variance.
    Empirical,
    /// Hyperparameters from --m0/--c0/--b0/--a0.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum B0Mode {
    Variance,
    Precision,
}

/// Normal-Gamma prior. Explicit --m0/--c0/--b0/--a0 values override the
/// empirical ones; single values are broadcast over dimensions.
#[derive(Debug, Clone, Args, Serialize)]
pub struct PriorArgs {
    #[arg(long, value_enum, default_value_t = PriorKind::Empirical)]
    pub prior: PriorKind,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub m0: Option<Vec<f64>>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub b0: Option<Vec<f64>>,
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long, value_enum, default_value_t = B0Mode::Variance)]
    pub b0_mode: B0Mode,
}

pub fn broadcast(name: &str, v: &[f64], dim: usize) -> CliResult<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        l if l == dim => Ok(v.to_vec()),
        l => Err(CliError::input(format!("--{name} has {l} values for {dim} dimensions"))),
    }
}

impl PriorArgs {
    pub fn build(&self, data: &Dataset) -> CliResult<NGPrior> {
        let dim = data.dim();
        let base = match self.prior {
            PriorKind::Empirical => {
                let mode = match self.b0_mode {
                    B0Mode::Variance => RateFromData::Variance,
                    B0Mode::Precision => RateFromData::Precision,
                };
                NGPrior::empirical(data, mode)?
            }
            PriorKind::Fixed => NGPrior::isotropic(dim, 1.0, 0.1, 10.0, 1.0)?,
        };
        let prior = NGPrior {
            mean: match &self.m0 {
                Some(v) => broadcast("m0", v, dim)?,
                None => base.mean,
            },
            mean_scale: self.c0.unwrap_or(base.mean_scale),
            rate: match &self.b0 {
                Some(v) => broadcast("b0", v, dim)?,
                None => base.rate,
            },
            shape: self.a0.unwrap_or(base.shape),
        };
        prior.validate()?;
        Ok(prior)
    }
}

/// CRP-mixture generator settings; the defaults are the synthetic
/// benchmark's.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GeneratorArgs {
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long = "n", default_value_t = 600)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "1")]
    pub m0: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub c0: f64,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub b0: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub a0: f64,
}

impl GeneratorArgs {
    pub fn prior(&self) -> CliResult<NGPrior> {
        Ok(NGPrior::new(
            broadcast("m0", &self.m0, self.dim)?,
            self.c0,
            broadcast("b0", &self.b0, self.dim)?,
            self.a0,
        )?)
    }
}

pub fn raftery_config(values: &[f64]) -> CliResult<RafteryConfig> {
    match values {
        [q, r, s] => Ok(RafteryConfig::new(*q, *r, *s)?),
        _ => Err(CliError::input("--raftery takes three values: q r s")),
    }
}
