//! Built-in property and oracle checks.

use std::fmt::Write as _;

use harqbeck_core::channel::unit_diagonal_mean;
use harqbeck_core::outage::kernel::{DELTA_EQ, DISPATCH_REL_TOL};
use harqbeck_core::{db_to_linear, g_closed, g_numeric, AsymptoticOutage, ChannelModel, Complex64, GKernel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::CliError;

pub const SUITES: &[&str] = &["g-oracle", "symmetry", "convexity", "scaling", "sampler", "continuity"];

const SEED: u64 = 0x5e1f_7e57;

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestOptions {
    /// Suites to run; empty means all.
    pub suites: Vec<String>,
    /// Dispatcher threshold for the kernel under test.
    pub delta_eq: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            suites: Vec::new(),
            delta_eq: DELTA_EQ,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, passed: bool, detail: String) -> SuiteOutcome {
    SuiteOutcome { name, passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn separated_rates(rng: &mut ChaCha8Rng, k: usize, gap: f64) -> Vec<f64> {
    loop {
        let r: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..8.0)).collect();
        let ok = r
            .iter()
            .enumerate()
            .all(|(i, a)| r[i + 1..].iter().all(|b| (a - b).abs() > gap));
        if ok {
            return r;
        }
    }
}

/// Run the selected suites. `config`, when given, supplies the channel for
/// the sampler and scaling suites; otherwise they use the exponential model
/// with `ρ = 0.8` at `K = 2` and `K = 4`.
pub fn cmd_selftest(config: Option<&ExperimentConfig>, opts: &SelftestOptions) -> Result<Vec<SuiteOutcome>, CliError> {
    if let Some(bad) = opts.suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
        return Err(CliError::Config(format!(
            "--suite: unknown suite `{bad}` (expected one of {})",
            SUITES.join(", ")
        )));
    }
    if opts.delta_eq.is_nan() || opts.delta_eq < 0.0 {
        return Err(CliError::Config("--delta-eq: must be non-negative".into()));
    }
    let kernel = GKernel {
        delta_eq: opts.delta_eq,
        rel_tol: DISPATCH_REL_TOL,
    };
    let (sampled, scaled) = match config {
        Some(c) => {
            let m = c.channel.build()?;
            (m.clone(), m)
        }
        None => (
            ChannelModel::exponential(2, 0.8, &unit_diagonal_mean(2))?,
            ChannelModel::exponential(4, 0.8, &unit_diagonal_mean(4))?,
        ),
    };
    let selected = |name: &str| opts.suites.is_empty() || opts.suites.iter().any(|s| s == name);

    let mut out = Vec::new();
    for &name in SUITES.iter().filter(|n| selected(n)) {
        let result = match name {
            "g-oracle" => g_oracle(),
            "symmetry" => symmetry(&kernel),
            "convexity" => convexity_suite(&kernel),
            "scaling" => scaling(&scaled, &kernel),
            "sampler" => sampler(&sampled),
            "continuity" => continuity(&kernel),
            _ => unreachable!(),
        };
        out.push(result.unwrap_or_else(|e| outcome(name, false, format!("error: {e}"))));
    }
    Ok(out)
}

/// Closed form against quadrature on 200 separated rate vectors, K ≤ 5.
fn g_oracle() -> harqbeck_core::Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let r = separated_rates(&mut rng, 1 + i % 5, 0.05);
        worst = worst.max(rel(g_closed(&r)?, g_numeric(&r, DISPATCH_REL_TOL)?));
    }
    Ok(outcome("g-oracle", worst < 1e-6, format!("200 vectors, max relative difference {worst:.2e} (limit 1e-6)")))
}

fn symmetry(kernel: &GKernel) -> harqbeck_core::Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mut r: Vec<f64> = (0..2 + i % 4).map(|_| rng.random_range(0.3..9.0)).collect();
        let base = kernel.eval(&r)?;
        r.shuffle(&mut rng);
        worst = worst.max(rel(kernel.eval(&r)?, base));
    }
    Ok(outcome("symmetry", worst < 1e-9, format!("100 permutations, max relative change {worst:.2e} (limit 1e-9)")))
}

/// Finite differences: increasing and convex in every coordinate, K ≤ 4.
fn convexity_suite(kernel: &GKernel) -> harqbeck_core::Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let h = 1e-2;
    let mut failures = 0;
    let mut min_first = f64::INFINITY;
    let mut min_second = f64::INFINITY;
    for i in 0..100 {
        let r = separated_rates(&mut rng, 1 + i % 4, 0.05);
        let g0 = kernel.eval(&r)?;
        for t in 0..r.len() {
            let mut x = r.clone();
            x[t] = r[t] + h;
            let up = kernel.eval(&x)?;
            x[t] = r[t] - h;
            let down = kernel.eval(&x)?;
            let first = (up - g0) / g0;
            let second = (up - 2.0 * g0 + down) / g0;
            min_first = min_first.min(first);
            min_second = min_second.min(second);
            if !(first > 0.0 && second >= -1e-8) {
                failures += 1;
            }
        }
    }
    Ok(outcome(
        "convexity",
        failures == 0,
        format!("100 points, {failures} violations; min relative first difference {min_first:.2e}, min relative second difference {min_second:.2e}"),
    ))
}

/// `p_out,k(α·γ) = α^{−k}·p_out,k(γ)`.
fn scaling(model: &ChannelModel, kernel: &GKernel) -> harqbeck_core::Result<SuiteOutcome> {
    let k = model.rounds().min(4);
    let model = model.restrict(k)?;
    let asy = AsymptoticOutage::with_kernel(&model, *kernel)?;
    let rates: Vec<f64> = (0..k).map(|i| 2.0 + 0.75 * i as f64).collect();
    let snr = vec![db_to_linear(20.0); k];
    let mut worst: f64 = 0.0;
    for alpha in [0.37, 2.0, 10.0, 1e3] {
        let scaled: Vec<f64> = snr.iter().map(|s| alpha * s).collect();
        for j in 1..=k {
            let base = asy.outage(&rates, &snr, j)?;
            worst = worst.max(rel(asy.outage(&rates, &scaled, j)?, alpha.powi(-(j as i32)) * base));
        }
    }
    Ok(outcome("scaling", worst < 1e-12, format!("k = 1..{k}, max relative error {worst:.2e} (limit 1e-12)")))
}

/// 10⁶ draws reproduce mean, covariance and relation within 5 standard errors.
fn sampler(model: &ChannelModel) -> harqbeck_core::Result<SuiteOutcome> {
    let n = 1_000_000;
    let draws = model.sample(n, SEED, 0)?;
    let k = model.rounds();
    let mean = model.mean();
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    let mut check = |what: &str, want: Complex64, f: &dyn Fn(&[Complex64]) -> Complex64| {
        let mut s = Complex64::new(0.0, 0.0);
        let (mut sre, mut sim) = (0.0, 0.0);
        for h in &draws {
            let v = f(h);
            s += v;
            sre += v.re * v.re;
            sim += v.im * v.im;
        }
        let nf = n as f64;
        let m = s / nf;
        let se_re = ((sre / nf - m.re * m.re) / nf).sqrt();
        let se_im = ((sim / nf - m.im * m.im) / nf).sqrt();
        for (err, se) in [((m.re - want.re).abs(), se_re), ((m.im - want.im).abs(), se_im)] {
            // Exact entries (zero variance) must match exactly.
            let z = if se > 0.0 { err / se } else if err > 0.0 { f64::INFINITY } else { 0.0 };
            if z > worst {
                worst = z;
                detail = what.to_string();
            }
        }
    };
    for m in 0..k {
        check(&format!("mean[{m}]"), mean[m], &|h| h[m]);
        for l in 0..k {
            check(&format!("R[{m},{l}]"), model.covariance()[(m, l)], &|h| (h[m] - mean[m]) * (h[l] - mean[l]).conj());
            check(&format!("C[{m},{l}]"), model.relation()[(m, l)], &|h| (h[m] - mean[m]) * (h[l] - mean[l]));
        }
    }
    Ok(outcome(
        "sampler",
        worst <= 5.0,
        format!("{n} draws, K = {k}, worst deviation {worst:.2} standard errors at {detail} (limit 5)"),
    ))
}

/// Dispatcher against a tight quadrature reference as rates merge.
fn continuity(kernel: &GKernel) -> harqbeck_core::Result<SuiteOutcome> {
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    let bases: [&[f64]; 4] = [&[3.0, 3.0], &[2.0, 4.0, 4.0], &[5.0, 5.0, 5.0], &[1.5, 6.0, 6.0, 6.0]];
    for base in bases {
        for e in 3..=13 {
            let delta = 10f64.powi(-e);
            // Perturb the repeated entries apart by multiples of delta.
            let mut seen = 0;
            let rates: Vec<f64> = base
                .iter()
                .enumerate()
                .map(|(i, &r)| {
                    if base[..i].contains(&r) {
                        seen += 1;
                        r * (1.0 + seen as f64 * delta)
                    } else {
                        r
                    }
                })
                .collect();
            let reference = g_numeric(&rates, 1e-11)?;
            let err = rel(kernel.eval(&rates)?, reference);
            if err > worst {
                worst = err;
                at.clear();
                let _ = write!(at, "{rates:?}");
            }
        }
    }
    Ok(outcome(
        "continuity",
        worst < 1e-7,
        format!("delta_eq = {:e}, max relative error {worst:.2e} at {at} (limit 1e-7)", kernel.delta_eq),
    ))
}
