//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use harqbeck_core::channel::ChannelModel;
use harqbeck_core::nalgebra::{DMatrix, DVector};
use harqbeck_core::{Complex64, RateOptProblem};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub harq: HarqSection,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Exponential,
    Explicit,
}

/// Complex entries are written as `[re, im]`.
pub type ComplexPair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default)]
    pub rho: Option<f64>,
    pub mean: Vec<ComplexPair>,
    #[serde(default)]
    pub covariance: Option<Vec<Vec<ComplexPair>>>,
    /// Overrides the exponential model's relation matrix when given.
    #[serde(default)]
    pub relation: Option<Vec<Vec<ComplexPair>>>,
}

/// A scalar or a list in the config.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(x) => vec![*x],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarqSection {
    /// Per-round rates; the optimize command does not need them.
    #[serde(default)]
    pub rates: Option<Vec<f64>>,
    pub snr_db: OneOrMany,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub epsilon: OneOrMany,
    #[serde(default)]
    pub rate_bounds: Option<[f64; 2]>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    /// Lattice step of the `--grid-check` baseline.
    #[serde(default)]
    pub grid_step: Option<f64>,
    /// Starting rates for the alternating optimizer instead of the warm start.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub ltat: Option<f64>,
    #[serde(default)]
    pub max_outer: Option<usize>,
    #[serde(default)]
    pub max_dinkelbach: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

pub const DEFAULT_GRID_STEP: f64 = 0.05;

fn invalid(path: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {reason}"))
}

fn complex(p: &ComplexPair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn matrix(path: &str, rows: &[Vec<ComplexPair>], k: usize) -> Result<DMatrix<Complex64>, CliError> {
    if rows.len() != k {
        return Err(invalid(path, format!("expected {k} rows, got {}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(invalid(&format!("{path}[{i}]"), format!("expected {k} entries, got {}", row.len())));
        }
        if row.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid(&format!("{path}[{i}]"), "entries must be finite"));
        }
    }
    Ok(DMatrix::from_fn(k, k, |i, j| complex(&rows[i][j])))
}

fn check_positive(path: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive and finite, got {x}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Config(inner.to_string())
            } else {
                invalid(&path, inner)
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Field-level checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), CliError> {
        let k = self.channel.k;
        self.channel.validate()?;

        let snr = self.harq.snr_db.values();
        if snr.is_empty() {
            return Err(invalid("harq.snr_db", "must not be empty"));
        }
        for (i, x) in snr.iter().enumerate() {
            if !x.is_finite() {
                return Err(invalid(&format!("harq.snr_db[{i}]"), "must be finite"));
            }
        }
        if snr.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("harq.snr_db", "sweep values must be strictly increasing"));
        }
        if let Some(rates) = &self.harq.rates {
            if rates.len() != k {
                return Err(invalid("harq.rates", format!("expected {k} rates, got {}", rates.len())));
            }
            for (i, r) in rates.iter().enumerate() {
                check_positive(&format!("harq.rates[{i}]"), *r)?;
            }
        }

        if let Some(mc) = &self.mc {
            if mc.n == 0 {
                return Err(invalid("mc.n", "must be at least 1"));
            }
        }

        if let Some(opt) = &self.optimize {
            let eps = opt.epsilon.values();
            if eps.is_empty() {
                return Err(invalid("optimize.epsilon", "must not be empty"));
            }
            for (i, e) in eps.iter().enumerate() {
                if !(*e > 0.0 && *e < 1.0) {
                    return Err(invalid(&format!("optimize.epsilon[{i}]"), format!("{e} is outside (0, 1)")));
                }
            }
            if let Some([lo, hi]) = opt.rate_bounds {
                check_positive("optimize.rate_bounds[0]", lo)?;
                check_positive("optimize.rate_bounds[1]", hi)?;
                if lo >= hi {
                    return Err(invalid("optimize.rate_bounds", "lower bound must be below the upper bound"));
                }
            }
            if let Some(t) = &opt.tolerances {
                if let Some(x) = t.rate {
                    check_positive("optimize.tolerances.rate", x)?;
                }
                if let Some(x) = t.ltat {
                    check_positive("optimize.tolerances.ltat", x)?;
                }
                if t.max_outer == Some(0) {
                    return Err(invalid("optimize.tolerances.max_outer", "must be at least 1"));
                }
                if t.max_dinkelbach == Some(0) {
                    return Err(invalid("optimize.tolerances.max_dinkelbach", "must be at least 1"));
                }
            }
            if let Some(step) = opt.grid_step {
                check_positive("optimize.grid_step", step)?;
            }
            if let Some(init) = &opt.initial {
                if init.len() != k {
                    return Err(invalid("optimize.initial", format!("expected {k} rates, got {}", init.len())));
                }
            }
        }

        self.channel.build().map(|_| ())
    }

    pub fn snr_db(&self) -> Vec<f64> {
        self.harq.snr_db.values()
    }

    pub fn rates(&self, command: &str) -> Result<&[f64], CliError> {
        self.harq
            .rates
            .as_deref()
            .ok_or_else(|| invalid("harq.rates", format!("required by the {command} command")))
    }

    /// Optimizer problem at one SNR (linear, all rounds) and threshold.
    pub fn problem(&self, model: &ChannelModel, snr_linear: f64, epsilon: f64) -> Result<RateOptProblem, CliError> {
        let opt = self
            .optimize
            .as_ref()
            .ok_or_else(|| invalid("optimize", "required by the optimize command"))?;
        let mut p = RateOptProblem::new(model.clone(), vec![snr_linear; model.rounds()], epsilon);
        if let Some([lo, hi]) = opt.rate_bounds {
            p.rate_bounds = (lo, hi);
        }
        let t = opt.tolerances.unwrap_or_default();
        p.tol_rate = t.rate.unwrap_or(p.tol_rate);
        p.tol_ltat = t.ltat.unwrap_or(p.tol_ltat);
        p.max_outer = t.max_outer.unwrap_or(p.max_outer);
        p.max_dinkelbach = t.max_dinkelbach.unwrap_or(p.max_dinkelbach);
        Ok(p)
    }
}

impl ChannelConfig {
    fn validate(&self) -> Result<(), CliError> {
        let k = self.k;
        if k == 0 {
            return Err(invalid("channel.K", "must be at least 1"));
        }
        if self.mean.len() != k {
            return Err(invalid("channel.mean", format!("expected {k} entries, got {}", self.mean.len())));
        }
        if self.mean.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("channel.mean", "entries must be finite"));
        }
        match self.kind {
            ChannelKind::Exponential => {
                if self.covariance.is_some() {
                    return Err(invalid("channel.covariance", "not allowed for kind \"exponential\""));
                }
                match self.rho {
                    None => return Err(invalid("channel.rho", "required for kind \"exponential\"")),
                    Some(rho) if !(0.0..1.0).contains(&rho) => {
                        return Err(invalid("channel.rho", format!("{rho} is outside [0, 1)")))
                    }
                    Some(_) => {}
                }
            }
            ChannelKind::Explicit => {
                if self.rho.is_some() {
                    return Err(invalid("channel.rho", "not allowed for kind \"explicit\""));
                }
                if self.covariance.is_none() {
                    return Err(invalid("channel.covariance", "required for kind \"explicit\""));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<ChannelModel, CliError> {
        let k = self.k;
        let mean: Vec<Complex64> = self.mean.iter().map(complex).collect();
        let relation = self
            .relation
            .as_ref()
            .map(|r| matrix("channel.relation", r, k))
            .transpose()?;
        let model = match self.kind {
            ChannelKind::Exponential => {
                let rho = self.rho.unwrap_or_default();
                match relation {
                    Some(c) => {
                        let covariance =
                            DMatrix::from_fn(k, k, |m, n| Complex64::new(rho.powi(m.abs_diff(n) as i32), 0.0));
                        ChannelModel::new(DVector::from_vec(mean), covariance, c)
                    }
                    None => ChannelModel::exponential(k, rho, &mean),
                }
            }
            ChannelKind::Explicit => {
                let covariance = matrix("channel.covariance", self.covariance.as_deref().unwrap_or_default(), k)?;
                ChannelModel::new(
                    DVector::from_vec(mean),
                    covariance,
                    relation.unwrap_or_else(|| DMatrix::zeros(k, k)),
                )
            }
        };
        model.map_err(|e| invalid("channel", e))
    }
}
