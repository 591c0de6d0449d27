//! The outage, LTAT and optimize commands.

use std::time::Instant;

use harqbeck_core::optimizer::{optimize_alternating, optimize_fixed_rate, optimize_grid, Initial};
use harqbeck_core::{db_to_linear, ltat_from_outages, AsymptoticOutage, Error, HarqConfig, MonteCarlo};

use crate::config::{ExperimentConfig, DEFAULT_GRID_STEP};
use crate::report::{SweepReport, Value};
use crate::CliError;

pub const OUTAGE_COLUMNS: &[&str] = &["snr_db", "k", "p_out_mc", "p_out_mc_stderr", "p_out_asy", "runtime_ms"];

pub const LTAT_COLUMNS: &[&str] = &["snr_db", "k", "ltat_asy", "ltat_mc", "runtime_ms"];

pub const OPTIMIZE_COLUMNS: &[&str] = &[
    "snr_db",
    "epsilon",
    "feasible",
    "ltat_variable",
    "ltat_fixed",
    "rates_variable",
    "rate_fixed",
    "p_out_variable",
    "outer_iterations",
    "dinkelbach_iterations",
    "ltat_grid",
    "grid_rel_gap",
    "runtime_ms",
];

/// Command-line switches shared by the commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Monte Carlo workers; results do not depend on it.
    pub streams: usize,
    pub grid_check: bool,
    /// Fill `runtime_ms`. Off by default so output is reproducible byte for byte.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            streams: 1,
            grid_check: false,
            timing: false,
        }
    }
}

impl RunOptions {
    fn runtime(&self, start: Instant) -> Value {
        if self.timing {
            Value::Num(start.elapsed().as_secs_f64() * 1e3)
        } else {
            Value::Empty
        }
    }
}

/// Monte Carlo for SNR point `index`; each point gets its own stream namespace.
fn monte_carlo(config: &ExperimentConfig, opts: &RunOptions, index: usize) -> Option<MonteCarlo> {
    config
        .mc
        .map(|mc| MonteCarlo::new(mc.n, mc.seed).with_stream(index as u32).with_workers(opts.streams))
}

/// Outage per SNR point and round, simulated and asymptotic.
pub fn cmd_outage(config: &ExperimentConfig, opts: &RunOptions) -> Result<SweepReport, CliError> {
    let model = config.channel.build()?;
    let rates = config.rates("outage")?;
    let asy = AsymptoticOutage::new(&model)?;
    let mut report = SweepReport::new(OUTAGE_COLUMNS);
    for (i, db) in config.snr_db().into_iter().enumerate() {
        let start = Instant::now();
        let harq = HarqConfig::constant_power(rates.to_vec(), db_to_linear(db))?;
        let mc = monte_carlo(config, opts, i)
            .map(|mc| mc.outage_all(&model, &harq))
            .transpose()?;
        let p_asy = asy.outage_all(rates, harq.snr_linear())?;
        let runtime = opts.runtime(start);
        for k in 1..=rates.len() {
            let est = mc.as_ref().map(|m| m[k - 1]);
            report.push(vec![
                Value::Num(db),
                Value::Int(k as u64),
                Value::exact_or_empty(est.map(|e| e.value)),
                Value::exact_or_empty(est.map(|e| e.stderr)),
                Value::Exact(p_asy[k - 1]),
                runtime.clone(),
            ]);
        }
    }
    Ok(report)
}

/// LTAT per SNR point for HARQ truncated at `k = 1..=K` rounds.
pub fn cmd_ltat(config: &ExperimentConfig, opts: &RunOptions) -> Result<SweepReport, CliError> {
    let model = config.channel.build()?;
    let rates = config.rates("ltat")?;
    let asy = AsymptoticOutage::new(&model)?;
    let mut report = SweepReport::new(LTAT_COLUMNS);
    for (i, db) in config.snr_db().into_iter().enumerate() {
        let start = Instant::now();
        let harq = HarqConfig::constant_power(rates.to_vec(), db_to_linear(db))?;
        let p_asy: Vec<f64> = asy
            .outage_all(rates, harq.snr_linear())?
            .into_iter()
            .map(|p| p.clamp(0.0, 1.0))
            .collect();
        let p_mc: Option<Vec<f64>> = monte_carlo(config, opts, i)
            .map(|mc| mc.outage_all(&model, &harq))
            .transpose()?
            .map(|m| m.iter().map(|e| e.value).collect());
        let runtime = opts.runtime(start);
        for k in 1..=rates.len() {
            let mc = p_mc
                .as_ref()
                .map(|p| ltat_from_outages(&rates[..k], &p[..k]))
                .transpose()?;
            report.push(vec![
                Value::Num(db),
                Value::Int(k as u64),
                Value::Exact(ltat_from_outages(&rates[..k], &p_asy[..k])?),
                Value::exact_or_empty(mc),
                runtime.clone(),
            ]);
        }
    }
    Ok(report)
}

/// Variable- and fixed-rate optima per SNR point and outage threshold.
///
/// Thresholds that cannot be met produce a row with `feasible = false`.
pub fn cmd_optimize(config: &ExperimentConfig, opts: &RunOptions) -> Result<SweepReport, CliError> {
    let model = config.channel.build()?;
    let opt = config
        .optimize
        .as_ref()
        .ok_or_else(|| CliError::Config("optimize: required by the optimize command".into()))?;
    let mut report = SweepReport::new(OPTIMIZE_COLUMNS);
    for db in config.snr_db() {
        for eps in opt.epsilon.values() {
            let start = Instant::now();
            let problem = config.problem(&model, db_to_linear(db), eps)?;
            let initial = opt.initial.clone().map_or(Initial::Warm, Initial::Rates);
            let variable = match optimize_alternating(&problem, initial) {
                Ok(r) if r.feasible => Some(r),
                Ok(_) | Err(Error::Infeasible(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let fixed = optimize_fixed_rate(&problem)?;
            let grid = match (&variable, opts.grid_check) {
                (Some(_), true) => Some(optimize_grid(&problem, opt.grid_step.unwrap_or(DEFAULT_GRID_STEP))?),
                _ => None,
            };
            let runtime = opts.runtime(start);
            let row = match &variable {
                Some(v) => vec![
                    Value::Num(db),
                    Value::Num(eps),
                    Value::Bool(true),
                    Value::Exact(v.ltat),
                    Value::exact_or_empty(fixed.feasible.then_some(fixed.ltat)),
                    Value::List(v.rates.clone()),
                    Value::exact_or_empty(fixed.feasible.then(|| fixed.rates[0])),
                    Value::Exact(v.outage),
                    Value::Int(v.outer_iterations as u64),
                    Value::Int(v.dinkelbach_iterations as u64),
                    Value::exact_or_empty(grid.as_ref().map(|g| g.ltat)),
                    Value::exact_or_empty(grid.as_ref().map(|g| (g.ltat - v.ltat) / g.ltat)),
                    runtime,
                ],
                None => {
                    let mut row = vec![Value::Num(db), Value::Num(eps), Value::Bool(false)];
                    row.resize(OPTIMIZE_COLUMNS.len() - 1, Value::Empty);
                    row.push(runtime);
                    row
                }
            };
            report.push(row);
        }
    }
    Ok(report)
}
