//! LTAT maximization over per-round rates under an outage constraint
//! `p_out,K ≤ ε`, using the asymptotic outage.
//!
//! [`optimize_alternating`] is block-coordinate ascent: each sweep updates
//! `R_1, …, R_K` in turn, and each single-rate update is a fractional
//! program `max N(R_j)/D(R_j)` solved by Dinkelbach iterations
//! ([`dinkelbach_subproblem`]). [`optimize_grid`] (exhaustive lattice) and
//! [`optimize_fixed_rate`] (`R_1 = … = R_K`) are the baselines.

pub mod search;

use rayon::prelude::*;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::outage::AsymptoticOutage;

use search::{bisect_feasible, maximize};

/// Grid search refuses more rounds than this.
pub const MAX_GRID_ROUNDS: usize = 4;

/// Relative slack allowed on the outage constraint of a returned solution.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// Warm starts for [`optimize_alternating`] are `R_lo + s·(R_fixed − R_lo)`
/// for `s = i / WARM_STARTS`, `i = 0..=WARM_STARTS`.
pub const WARM_STARTS: usize = 8;

/// Rate-selection problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RateOptProblem {
    pub model: ChannelModel,
    pub snr_linear: Vec<f64>,
    /// Outage threshold `ε ∈ (0, 1)`.
    pub epsilon: f64,
    /// Search box `[R_lo, R_hi]` for every rate.
    pub rate_bounds: (f64, f64),
    /// Width at which 1-D searches stop.
    pub tol_rate: f64,
    /// LTAT change below which the outer loop stops; also the Dinkelbach
    /// stopping tolerance (relative to the denominator).
    pub tol_ltat: f64,
    pub max_outer: usize,
    pub max_dinkelbach: usize,
}

impl RateOptProblem {
    /// Problem with the default box `[0.1, 16]` and default tolerances.
    pub fn new(model: ChannelModel, snr_linear: Vec<f64>, epsilon: f64) -> Self {
        Self {
            model,
            snr_linear,
            epsilon,
            rate_bounds: (0.1, 16.0),
            tol_rate: 1e-6,
            tol_ltat: 1e-6,
            max_outer: 50,
            max_dinkelbach: 30,
        }
    }

    pub fn rounds(&self) -> usize {
        self.model.rounds()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.rounds();
        if self.snr_linear.len() != k {
            return Err(Error::Dimension {
                what: "snr_linear",
                got: self.snr_linear.len(),
                expected: k,
            });
        }
        if self.snr_linear.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(invalid("snr_linear", "every SNR must be positive and finite"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", format!("{} is outside (0, 1)", self.epsilon)));
        }
        let (lo, hi) = self.rate_bounds;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(invalid("rate_bounds", format!("need 0 < R_lo < R_hi, got [{lo}, {hi}]")));
        }
        if !(self.tol_rate > 0.0 && self.tol_ltat > 0.0) {
            return Err(invalid("tolerances", "must be positive"));
        }
        if self.max_outer == 0 || self.max_dinkelbach == 0 {
            return Err(invalid("iteration caps", "must be at least 1"));
        }
        Ok(())
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// One outer iteration of a rate optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub rates: Vec<f64>,
    pub ltat: f64,
}

/// Optimizer output.
#[derive(Debug, Clone, PartialEq)]
pub struct RateOptResult {
    pub rates: Vec<f64>,
    pub ltat: f64,
    /// Raw asymptotic `p_out,K` at `rates`.
    pub outage: f64,
    pub feasible: bool,
    pub outer_iterations: usize,
    /// Total Dinkelbach iterations over all subproblems.
    pub dinkelbach_iterations: usize,
    /// Starting point followed by one entry per outer iteration.
    pub trace: Vec<TraceEntry>,
}

impl RateOptResult {
    fn infeasible(k: usize, outage: f64) -> Self {
        Self {
            rates: vec![f64::NAN; k],
            ltat: 0.0,
            outage,
            feasible: false,
            outer_iterations: 0,
            dinkelbach_iterations: 0,
            trace: Vec::new(),
        }
    }
}

/// Starting point of [`optimize_alternating`].
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    /// Start from the fixed-rate optimum.
    Warm,
    Rates(Vec<f64>),
}

/// Asymptotic LTAT and constraint evaluator for one problem.
pub struct Objective<'a> {
    problem: &'a RateOptProblem,
    outage: AsymptoticOutage,
}

impl<'a> Objective<'a> {
    pub fn new(problem: &'a RateOptProblem) -> Result<Self> {
        problem.validate()?;
        Ok(Self {
            problem,
            outage: AsymptoticOutage::new(&problem.model)?,
        })
    }

    /// Raw asymptotic `p_out,K`.
    pub fn constraint(&self, rates: &[f64]) -> Result<f64> {
        self.outage.outage(rates, &self.problem.snr_linear, rates.len())
    }

    /// Clamped `p_out,k` for `k = 1..=K`.
    fn clamped_outages(&self, rates: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .outage
            .outage_all(rates, &self.problem.snr_linear)?
            .into_iter()
            .map(|p| p.clamp(0.0, 1.0))
            .collect())
    }

    pub fn ltat(&self, rates: &[f64]) -> Result<f64> {
        let (n, d) = self.fraction(rates, 0)?;
        Ok(n / d)
    }

    /// Numerator and denominator of the LTAT scaled by `R_j`:
    /// `N = R_j (1 − p_K)`, `D = Σ_k R_j p_{k−1} / R_k`.
    pub fn fraction(&self, rates: &[f64], j: usize) -> Result<(f64, f64)> {
        let p = self.clamped_outages(rates)?;
        let rj = rates[j];
        let n = rj * (1.0 - p[p.len() - 1]);
        let d: f64 = rates
            .iter()
            .enumerate()
            .map(|(k, rk)| {
                let prev = if k == 0 { 1.0 } else { p[k - 1] };
                if k == j {
                    prev
                } else {
                    rj * prev / rk
                }
            })
            .sum();
        if !(n.is_finite() && d.is_finite() && d > 0.0) {
            return Err(Error::NonFinite(rj));
        }
        Ok((n, d))
    }

    fn is_feasible(&self, rates: &[f64]) -> Result<bool> {
        Ok(self.constraint(rates)? <= self.problem.epsilon * (1.0 + FEASIBILITY_SLACK))
    }
}

/// Largest `R_j ∈ [R_lo, R_hi]` keeping `p_out,K ≤ ε`, the other rates fixed.
pub fn max_feasible_rate(problem: &RateOptProblem, rates: &[f64], j: usize) -> Result<f64> {
    let objective = Objective::new(problem)?;
    feasible_cap(&objective, rates, j)
}

fn feasible_cap(objective: &Objective<'_>, rates: &[f64], j: usize) -> Result<f64> {
    let problem = objective.problem;
    let (lo, hi) = problem.rate_bounds;
    let mut trial = rates.to_vec();
    let mut p = |r: f64| {
        trial[j] = r;
        objective.constraint(&trial)
    };
    if p(lo)? > problem.epsilon {
        return Err(Error::Infeasible(format!(
            "outage exceeds {} even with rate {j} at the lower bound",
            problem.epsilon
        )));
    }
    if p(hi)? <= problem.epsilon {
        return Ok(hi);
    }
    bisect_feasible(lo, hi, problem.epsilon, problem.tol_rate, 1e-7, p)
}

/// Largest common rate `R` with `p_out,K(R, …, R) ≤ ε`.
fn common_feasible_cap(objective: &Objective<'_>) -> Result<f64> {
    let problem = objective.problem;
    let k = problem.rounds();
    let (lo, hi) = problem.rate_bounds;
    let p = |r: f64| objective.constraint(&vec![r; k]);
    if p(lo)? > problem.epsilon {
        return Err(Error::Infeasible(format!(
            "outage exceeds {} with every rate at the lower bound",
            problem.epsilon
        )));
    }
    if p(hi)? <= problem.epsilon {
        return Ok(hi);
    }
    bisect_feasible(lo, hi, problem.epsilon, problem.tol_rate, 1e-7, p)
}

/// Outcome of one Dinkelbach solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemOutcome {
    pub rate: f64,
    pub ltat: f64,
    /// Feasibility cap of the coordinate.
    pub cap: f64,
    /// Ratio estimates `λ`, starting with the midpoint value.
    pub lambdas: Vec<f64>,
    /// `max F_λ` for each `λ` in `lambdas` that was solved.
    pub residuals: Vec<f64>,
    pub used_grid: bool,
}

/// Maximize the LTAT over `R_j` alone, the other rates held at `rates`.
///
/// With `N(R_j)`, `D(R_j)` from [`Objective::fraction`], Dinkelbach's
/// iteration solves `max_R N(R) − λ D(R)` on the feasible interval, then
/// sets `λ ← N(R*)/D(R*)`, until `|N(R*) − λ D(R*)| < tol_ltat · D(R*)`.
pub fn dinkelbach_subproblem(problem: &RateOptProblem, rates: &[f64], j: usize) -> Result<SubproblemOutcome> {
    let objective = Objective::new(problem)?;
    subproblem(&objective, rates, j)
}

fn subproblem(objective: &Objective<'_>, rates: &[f64], j: usize) -> Result<SubproblemOutcome> {
    let problem = objective.problem;
    let lo = problem.rate_bounds.0;
    let cap = feasible_cap(objective, rates, j)?;

    let mut trial = rates.to_vec();
    let mut fraction = |r: f64| {
        trial[j] = r;
        objective.fraction(&trial, j)
    };

    let (n0, d0) = fraction(0.5 * (lo + cap))?;
    let mut lambda = n0 / d0;
    let mut lambdas = vec![lambda];
    let mut residuals = Vec::new();
    let mut used_grid = false;
    let mut best = 0.5 * (lo + cap);

    for _ in 0..problem.max_dinkelbach {
        let m = maximize(lo, cap, problem.tol_rate, |r| {
            let (n, d) = fraction(r)?;
            Ok(n - lambda * d)
        })?;
        used_grid |= m.used_grid;
        best = m.x;
        residuals.push(m.value);
        let (n, d) = fraction(best)?;
        if m.value.abs() < problem.tol_ltat * d {
            break;
        }
        lambda = n / d;
        lambdas.push(lambda);
    }
    let (n, d) = fraction(best)?;
    Ok(SubproblemOutcome {
        rate: best,
        ltat: n / d,
        cap,
        lambdas,
        residuals,
        used_grid,
    })
}

/// Block-coordinate ascent over the rates with Dinkelbach subproblems.
pub fn optimize_alternating(problem: &RateOptProblem, initial: Initial) -> Result<RateOptResult> {
    let objective = Objective::new(problem)?;
    let k = problem.rounds();
    let (lo, hi) = problem.rate_bounds;

    let floor = objective.constraint(&vec![lo; k])?;
    if floor > problem.epsilon {
        return Ok(RateOptResult::infeasible(k, floor));
    }

    match initial {
        Initial::Warm => {
            // Coordinate ascent stalls on the constraint boundary, so run it
            // from a ladder between all-R_lo and the fixed-rate optimum.
            let fixed = optimize_fixed_rate(problem)?.rates;
            let runs: Vec<RateOptResult> = (0..=WARM_STARTS)
                .into_par_iter()
                .map(|i| {
                    let s = i as f64 / WARM_STARTS as f64;
                    let start: Vec<f64> = fixed.iter().map(|&r| lo + s * (r - lo)).collect();
                    ascend(&objective, problem, start)
                })
                .collect::<Result<_>>()?;
            // Ties go to the start nearest the fixed-rate point.
            Ok(runs
                .into_iter()
                .reduce(|best, run| if run.ltat >= best.ltat { run } else { best })
                .expect("at least one start"))
        }
        Initial::Rates(r) => {
            if r.len() != k {
                return Err(Error::Dimension {
                    what: "initial rates",
                    got: r.len(),
                    expected: k,
                });
            }
            if r.iter().any(|x| !(lo..=hi).contains(x)) {
                return Err(invalid("initial rates", "outside the rate bounds"));
            }
            if !objective.is_feasible(&r)? {
                return Err(Error::Infeasible("initial rates violate the outage constraint".into()));
            }
            ascend(&objective, problem, r)
        }
    }
}

fn ascend(objective: &Objective<'_>, problem: &RateOptProblem, mut rates: Vec<f64>) -> Result<RateOptResult> {
    let k = rates.len();
    let mut current = objective.ltat(&rates)?;
    let mut trace = vec![TraceEntry {
        rates: rates.clone(),
        ltat: current,
    }];
    let mut outer_iterations = 0;
    let mut dinkelbach_iterations = 0;

    for _ in 0..problem.max_outer {
        outer_iterations += 1;
        let start = current;
        for j in 0..k {
            let outcome = subproblem(objective, &rates, j)?;
            dinkelbach_iterations += outcome.residuals.len();
            if outcome.ltat > current {
                rates[j] = outcome.rate;
                current = outcome.ltat;
            }
        }
        trace.push(TraceEntry {
            rates: rates.clone(),
            ltat: current,
        });
        if current - start < problem.tol_ltat {
            break;
        }
    }

    Ok(RateOptResult {
        outage: objective.constraint(&rates)?,
        rates,
        ltat: current,
        feasible: true,
        outer_iterations,
        dinkelbach_iterations,
        trace,
    })
}

/// Exhaustive search on the lattice `R_lo + i·step` (plus `R_hi` itself) in
/// every coordinate. Ties go to the lexicographically largest rates.
pub fn optimize_grid(problem: &RateOptProblem, step: f64) -> Result<RateOptResult> {
    let objective = Objective::new(problem)?;
    let k = problem.rounds();
    if k > MAX_GRID_ROUNDS {
        return Err(invalid(
            "K",
            format!("grid search is limited to {MAX_GRID_ROUNDS} rounds, got {k}"),
        ));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(invalid("step", format!("{step} must be positive")));
    }
    let (lo, hi) = problem.rate_bounds;
    let axis: Vec<f64> = {
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        let mut axis: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * step).min(hi)).collect();
        if axis[n] < hi {
            axis.push(hi);
        }
        axis
    };
    let total = axis.len().pow(k as u32);

    let point = |mut index: usize| -> Vec<f64> {
        let mut rates = vec![0.0; k];
        for r in rates.iter_mut().rev() {
            *r = axis[index % axis.len()];
            index /= axis.len();
        }
        rates
    };

    // Lattice indices enumerate rates lexicographically, so the largest
    // index wins ties.
    let best = (0..total)
        .into_par_iter()
        .map(|i| -> Result<Option<(f64, usize)>> {
            let rates = point(i);
            if !objective.is_feasible(&rates)? {
                return Ok(None);
            }
            Ok(Some((objective.ltat(&rates)?, i)))
        })
        .try_reduce(
            || None,
            |a, b| {
                Ok(match (a, b) {
                    (None, x) | (x, None) => x,
                    (Some(x), Some(y)) => {
                        if y.0 > x.0 || (y.0 == x.0 && y.1 > x.1) {
                            Some(y)
                        } else {
                            Some(x)
                        }
                    }
                })
            },
        )?;

    match best {
        None => Ok(RateOptResult::infeasible(k, objective.constraint(&vec![lo; k])?)),
        Some((ltat, i)) => {
            let rates = point(i);
            Ok(RateOptResult {
                outage: objective.constraint(&rates)?,
                trace: vec![TraceEntry {
                    rates: rates.clone(),
                    ltat,
                }],
                rates,
                ltat,
                feasible: true,
                outer_iterations: 1,
                dinkelbach_iterations: 0,
            })
        }
    }
}

/// Best common rate `R_1 = … = R_K`.
pub fn optimize_fixed_rate(problem: &RateOptProblem) -> Result<RateOptResult> {
    let objective = Objective::new(problem)?;
    let k = problem.rounds();
    let lo = problem.rate_bounds.0;
    let cap = match common_feasible_cap(&objective) {
        Ok(cap) => cap,
        Err(Error::Infeasible(_)) => {
            return Ok(RateOptResult::infeasible(k, objective.constraint(&vec![lo; k])?))
        }
        Err(e) => return Err(e),
    };
    let m = maximize(lo, cap, problem.tol_rate, |r| objective.ltat(&vec![r; k]))?;
    let rates = vec![m.x; k];
    Ok(RateOptResult {
        outage: objective.constraint(&rates)?,
        trace: vec![TraceEntry {
            rates: rates.clone(),
            ltat: m.value,
        }],
        rates,
        ltat: m.value,
        feasible: true,
        outer_iterations: 1,
        dinkelbach_iterations: 0,
    })
}
