//! Outage probability and long-term average throughput of variable-rate
//! HARQ-IR.
//!
//! A message is in outage after round `k` when the normalized accumulated
//! mutual information `Σ_{j≤k} log₂(1 + γ_j|h_j|²)/R_j` is below 1. The
//! probability is estimated by Monte Carlo ([`MonteCarlo`]) or by its
//! high-SNR asymptote ([`outage_asymptotic`]):
//!
//! ```text
//! p_out,k ≈ π^k · f_h(0) · Π_{j≤k} γ_j⁻¹ · g_k(R₁,…,R_k)
//! ```

pub mod kernel;

use std::f64::consts::PI;
use std::thread;

use num_complex::Complex64;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::rng::{block_stream, stream_rng};

pub use kernel::{g, g_closed, g_numeric, min_relative_gap, GKernel, DELTA_EQ};

/// Per-round rates (bits/s/Hz) and linear transmit SNRs `γ_k = P_k/N₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarqConfig {
    rates: Vec<f64>,
    snr_linear: Vec<f64>,
}

impl HarqConfig {
    pub fn new(rates: Vec<f64>, snr_linear: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidParameter {
                name: "rates",
                reason: "need at least one round".into(),
            });
        }
        if snr_linear.len() != rates.len() {
            return Err(Error::Dimension {
                what: "snr_linear",
                got: snr_linear.len(),
                expected: rates.len(),
            });
        }
        for (name, values) in [("rates", &rates), ("snr_linear", &snr_linear)] {
            if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{v} is not a positive finite number"),
                });
            }
        }
        Ok(Self { rates, snr_linear })
    }

    /// Same SNR `γ` in every round.
    pub fn constant_power(rates: Vec<f64>, snr_linear: f64) -> Result<Self> {
        let n = rates.len();
        Self::new(rates, vec![snr_linear; n])
    }

    pub fn rounds(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn snr_linear(&self) -> &[f64] {
        &self.snr_linear
    }

    fn check_round(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.rounds() {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: format!("round {k} outside 1..={}", self.rounds()),
            });
        }
        Ok(())
    }

    fn check_model(&self, model: &ChannelModel) -> Result<()> {
        if model.rounds() != self.rounds() {
            return Err(Error::Dimension {
                what: "channel model",
                got: model.rounds(),
                expected: self.rounds(),
            });
        }
        Ok(())
    }
}

/// Monte Carlo outage estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub value: f64,
    /// Binomial standard error `√(p(1−p)/n)`.
    pub stderr: f64,
    pub n: u64,
}

impl OutageEstimate {
    pub fn from_counts(outages: u64, n: u64) -> Self {
        let value = outages as f64 / n as f64;
        Self {
            value,
            stderr: (value * (1.0 - value) / n as f64).sqrt(),
            n,
        }
    }
}

/// `Σ_{j≤k} log₂(1 + γ_j|h_j|²)/R_j`. Outage at round `k` iff this is `< 1`.
pub fn accumulated_info(config: &HarqConfig, h: &[Complex64], k: usize) -> f64 {
    config.rates[..k]
        .iter()
        .zip(&config.snr_linear[..k])
        .zip(h)
        .map(|((r, g), h)| (g * h.norm_sqr()).ln_1p() / (r * std::f64::consts::LN_2))
        .sum()
}

/// Samples per Monte Carlo block. Block `b` always draws from the same
/// stream, so results do not depend on how blocks are spread over workers.
pub const MC_BLOCK: u64 = 1 << 16;

/// Monte Carlo outage estimator.
///
/// All rounds `k = 1..=K` are estimated from one set of full-length channel
/// draws, so the per-round estimates share samples and are monotone in `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub samples: u64,
    pub seed: u64,
    /// Stream namespace; distinct namespaces give independent estimates.
    pub stream: u32,
    /// Worker threads. Does not affect the result.
    pub workers: usize,
}

impl MonteCarlo {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            stream: 0,
            workers: 1,
        }
    }

    pub fn with_stream(self, stream: u32) -> Self {
        Self { stream, ..self }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers, ..self }
    }

    /// Outage estimates for every round `1..=K`.
    pub fn outage_all(&self, model: &ChannelModel, config: &HarqConfig) -> Result<Vec<OutageEstimate>> {
        config.check_model(model)?;
        if self.samples == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "must be at least 1".into(),
            });
        }
        let blocks = self.samples.div_ceil(MC_BLOCK);
        if blocks > u64::from(u32::MAX) {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("{} samples exceed the block budget", self.samples),
            });
        }
        let form = model.real_form()?;
        let k = config.rounds();
        let workers = self.workers.clamp(1, blocks as usize);

        let run_block = |block: u64, counts: &mut [u64]| {
            let mut rng = stream_rng(self.seed, block_stream(self.stream, block as u32));
            let mut sampler = form.sampler();
            let mut h = vec![Complex64::default(); k];
            let draws = MC_BLOCK.min(self.samples - block * MC_BLOCK);
            for _ in 0..draws {
                sampler.draw(&mut rng, &mut h);
                let mut info = 0.0;
                for j in 0..k {
                    info += (config.snr_linear[j] * h[j].norm_sqr()).ln_1p()
                        / (config.rates[j] * std::f64::consts::LN_2);
                    if info < 1.0 {
                        counts[j] += 1;
                    } else {
                        break;
                    }
                }
            }
        };

        let counts = if workers == 1 {
            let mut counts = vec![0u64; k];
            for b in 0..blocks {
                run_block(b, &mut counts);
            }
            counts
        } else {
            thread::scope(|scope| {
                let handles: Vec<_> = (0..workers as u64)
                    .map(|w| {
                        let run_block = &run_block;
                        scope.spawn(move || {
                            let mut counts = vec![0u64; k];
                            let mut b = w;
                            while b < blocks {
                                run_block(b, &mut counts);
                                b += workers as u64;
                            }
                            counts
                        })
                    })
                    .collect();
                let mut total = vec![0u64; k];
                for h in handles {
                    let part = h.join().expect("Monte Carlo worker panicked");
                    for (t, p) in total.iter_mut().zip(part) {
                        *t += p;
                    }
                }
                total
            })
        };
        Ok(counts
            .into_iter()
            .map(|c| OutageEstimate::from_counts(c, self.samples))
            .collect())
    }

    /// Outage estimate after round `k`.
    pub fn outage(&self, model: &ChannelModel, config: &HarqConfig, k: usize) -> Result<OutageEstimate> {
        config.check_round(k)?;
        Ok(self.outage_all(model, config)?[k - 1])
    }
}

/// Model-dependent part of the asymptotic outage, `π^k · f_{h_k}(0)` for
/// every round `k`, precomputed once per channel model.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticOutage {
    leading: Vec<f64>,
    kernel: GKernel,
}

impl AsymptoticOutage {
    pub fn new(model: &ChannelModel) -> Result<Self> {
        Self::with_kernel(model, GKernel::default())
    }

    pub fn with_kernel(model: &ChannelModel, kernel: GKernel) -> Result<Self> {
        let leading = (1..=model.rounds())
            .map(|k| {
                let f0 = model.restrict(k)?.density_at_zero()?;
                Ok(PI.powi(k as i32) * f0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { leading, kernel })
    }

    pub fn rounds(&self) -> usize {
        self.leading.len()
    }

    /// Raw (unclamped) asymptotic outage after round `k` for the given
    /// rates and SNRs; only the first `k` entries of each are used.
    pub fn outage(&self, rates: &[f64], snr_linear: &[f64], k: usize) -> Result<f64> {
        if k == 0 || k > self.rounds() || rates.len() < k || snr_linear.len() < k {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: format!("round {k} outside 1..={}", self.rounds()),
            });
        }
        let inv_snr: f64 = snr_linear[..k].iter().map(|g| g.recip()).product();
        Ok(self.leading[k - 1] * inv_snr * self.kernel.eval(&rates[..k])?)
    }

    /// Raw asymptotic outage for every round `1..=K`.
    pub fn outage_all(&self, rates: &[f64], snr_linear: &[f64]) -> Result<Vec<f64>> {
        (1..=self.rounds())
            .map(|k| self.outage(rates, snr_linear, k))
            .collect()
    }
}

/// High-SNR outage after round `k`:
/// `π^k · f_{h_k}(0) · Π_{j≤k} γ_j⁻¹ · g_k(R₁,…,R_k)`.
///
/// Reported raw; the value can exceed 1 at low SNR.
pub fn outage_asymptotic(model: &ChannelModel, config: &HarqConfig, k: usize) -> Result<f64> {
    config.check_model(model)?;
    config.check_round(k)?;
    let f0 = model.restrict(k)?.density_at_zero()?;
    let inv_snr: f64 = config.snr_linear[..k].iter().map(|g| g.recip()).product();
    Ok(PI.powi(k as i32) * f0 * inv_snr * g(&config.rates[..k])?)
}

/// How the per-round outage probabilities entering the LTAT are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LtatMode {
    Asymptotic,
    MonteCarlo(MonteCarlo),
}

/// Long-term average throughput
/// `T = (1 − p_out,K) / Σ_k p_out,k−1 / R_k` with `p_out,0 = 1`.
///
/// `outages[k-1]` is `p_out,k`. Values are used as given.
pub fn ltat_from_outages(rates: &[f64], outages: &[f64]) -> Result<f64> {
    if outages.len() != rates.len() {
        return Err(Error::Dimension {
            what: "outages",
            got: outages.len(),
            expected: rates.len(),
        });
    }
    let mut denom = 0.0;
    let mut previous = 1.0;
    for (r, p) in rates.iter().zip(outages) {
        denom += previous / r;
        previous = *p;
    }
    Ok((1.0 - previous) / denom)
}

/// LTAT of `config` over `model`. Asymptotic outages are clamped into
/// `[0, 1]` before they are combined.
pub fn ltat(model: &ChannelModel, config: &HarqConfig, mode: LtatMode) -> Result<f64> {
    config.check_model(model)?;
    let outages = match mode {
        LtatMode::Asymptotic => AsymptoticOutage::new(model)?
            .outage_all(&config.rates, &config.snr_linear)?
            .into_iter()
            .map(|p| p.clamp(0.0, 1.0))
            .collect(),
        LtatMode::MonteCarlo(mc) => mc
            .outage_all(model, config)?
            .into_iter()
            .map(|e| e.value)
            .collect::<Vec<_>>(),
    };
    ltat_from_outages(&config.rates, &outages)
}
