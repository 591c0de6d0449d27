//! Correlated Beckmann fading: a non-circular complex Gaussian channel
//! vector `h = h̄ + h̃` over `K` HARQ rounds.
//!
//! The law of `h̃` is fixed by its covariance `R = E[h̃h̃ᴴ]` and relation
//! (pseudo-covariance) matrix `C = E[h̃h̃ᵀ]`. All density and sampling work
//! goes through the equivalent `2K`-dimensional real Gaussian on
//! `(Re h; Im h)`, whose covariance is
//!
//! ```text
//! V = ½ · [ Re(R + C)   Im(C − R) ]
//!         [ Im(R + C)   Re(R − C) ]
//! ```
//!
//! `C = 0` recovers circular (Rician / Rayleigh) statistics.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Eigenvalues of `V` down to `-PSD_REL_TOL · ‖V‖₂` count as nonnegative.
pub const PSD_REL_TOL: f64 = 1e-10;

/// Diagonal jitter levels tried in order, relative to `max |V_ij|`.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

const SYMMETRY_TOL: f64 = 1e-12;

/// Mean, covariance and relation matrix of a `K`-round Beckmann channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    mean: DVector<Complex64>,
    covariance: DMatrix<Complex64>,
    relation: DMatrix<Complex64>,
}

/// One named check of [`ChannelModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of [`ChannelModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub checks: Vec<Check>,
    /// Smallest eigenvalue of the real covariance `V`.
    pub min_eigenvalue: f64,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn summary(&self) -> String {
        self.failures()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Real `2K`-dimensional Gaussian equivalent to a [`ChannelModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealGaussianForm {
    /// `(Re h̄; Im h̄)`.
    pub mean_real: DVector<f64>,
    /// The real covariance `V`.
    pub cov_real: DMatrix<f64>,
    /// Lower-triangular `L` with `L·Lᵀ = V + jitter·I`.
    pub factor: DMatrix<f64>,
    /// Absolute diagonal jitter that was needed for the factorization.
    pub jitter: f64,
}

impl ChannelModel {
    /// Assemble a model, checking only that the shapes agree.
    ///
    /// The result may violate the model invariants; call [`validate`](Self::validate)
    /// or use [`ChannelModel::new`] to reject such input.
    pub fn from_parts(
        mean: DVector<Complex64>,
        covariance: DMatrix<Complex64>,
        relation: DMatrix<Complex64>,
    ) -> Result<Self> {
        let k = mean.len();
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "K",
                reason: "must be at least 1".into(),
            });
        }
        for (what, m) in [("covariance", &covariance), ("relation", &relation)] {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::Dimension {
                    what,
                    got: m.nrows().max(m.ncols()),
                    expected: k,
                });
            }
        }
        Ok(Self {
            mean,
            covariance,
            relation,
        })
    }

    /// Assemble and validate a model.
    pub fn new(
        mean: DVector<Complex64>,
        covariance: DMatrix<Complex64>,
        relation: DMatrix<Complex64>,
    ) -> Result<Self> {
        let model = Self::from_parts(mean, covariance, relation)?;
        let report = model.validate();
        if !report.is_valid() {
            return Err(Error::InvalidModel(report.summary()));
        }
        Ok(model)
    }

    /// Exponential-correlation covariance `R_mn = ρ^|m−n|` with the constant
    /// relation matrix `C_mn = i·ρ^K` on every entry (diagonal included).
    ///
    /// `ρ = 0` gives `C = 0`, i.e. independent Rician / Rayleigh rounds.
    pub fn exponential(k: usize, rho: f64, mean: &[Complex64]) -> Result<Self> {
        if mean.len() != k {
            return Err(Error::Dimension {
                what: "mean",
                got: mean.len(),
                expected: k,
            });
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: format!("{rho} is outside [0, 1)"),
            });
        }
        let covariance = DMatrix::from_fn(k, k, |m, n| {
            Complex64::new(rho.powi(m.abs_diff(n) as i32), 0.0)
        });
        let pseudo = if rho == 0.0 { 0.0 } else { rho.powi(k as i32) };
        let relation = DMatrix::from_element(k, k, Complex64::new(0.0, pseudo));
        Self::new(DVector::from_column_slice(mean), covariance, relation)
    }

    /// Zero-mean, unit-variance, independent circular rounds.
    pub fn rayleigh(k: usize) -> Self {
        Self {
            mean: DVector::zeros(k),
            covariance: DMatrix::identity(k, k),
            relation: DMatrix::zeros(k, k),
        }
    }

    pub fn rounds(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<Complex64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<Complex64> {
        &self.covariance
    }

    pub fn relation(&self) -> &DMatrix<Complex64> {
        &self.relation
    }

    /// The model of the first `k` rounds: leading blocks of `R`, `C` and the
    /// first `k` entries of `h̄`.
    pub fn restrict(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.rounds() {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: format!("round {k} outside 1..={}", self.rounds()),
            });
        }
        Ok(Self {
            mean: self.mean.rows(0, k).into_owned(),
            covariance: self.covariance.view((0, 0), (k, k)).into_owned(),
            relation: self.relation.view((0, 0), (k, k)).into_owned(),
        })
    }

    /// Check every model invariant, reporting the offending quantity.
    pub fn validate(&self) -> ValidityReport {
        let k = self.rounds();
        let scale = self
            .covariance
            .iter()
            .chain(self.relation.iter())
            .map(|z| z.norm())
            .fold(1.0, f64::max);
        let tol = SYMMETRY_TOL * scale;

        let mut checks = Vec::with_capacity(4);

        let herm = max_entry(k, |m, n| {
            (self.covariance[(m, n)] - self.covariance[(n, m)].conj()).norm()
        });
        checks.push(Check {
            name: "covariance hermitian",
            passed: herm <= tol,
            detail: format!("max |R - Rᴴ| = {herm:e}"),
        });

        let worst_diag = (0..k)
            .map(|i| self.covariance[(i, i)])
            .min_by(|a, b| a.re.total_cmp(&b.re))
            .unwrap_or_default();
        let max_diag_imag = (0..k)
            .map(|i| self.covariance[(i, i)].im.abs())
            .fold(0.0, f64::max);
        checks.push(Check {
            name: "covariance diagonal positive",
            passed: worst_diag.re > 0.0 && max_diag_imag <= tol,
            detail: format!("smallest diagonal entry {worst_diag}"),
        });

        let sym = max_entry(k, |m, n| {
            (self.relation[(m, n)] - self.relation[(n, m)]).norm()
        });
        checks.push(Check {
            name: "relation symmetric",
            passed: sym <= tol,
            detail: format!("max |C - Cᵀ| = {sym:e}"),
        });

        let v = self.real_covariance();
        let eig = SymmetricEigen::new(v).eigenvalues;
        let min_eigenvalue = eig.min();
        let spectral = eig.amax();
        checks.push(Check {
            name: "real covariance PSD",
            passed: min_eigenvalue.is_finite() && min_eigenvalue >= -PSD_REL_TOL * spectral,
            detail: format!("most negative eigenvalue of V = {min_eigenvalue:e}"),
        });

        ValidityReport {
            checks,
            min_eigenvalue,
        }
    }

    /// The real covariance `V` of `(Re h̃; Im h̃)`.
    pub fn real_covariance(&self) -> DMatrix<f64> {
        let k = self.rounds();
        let r = &self.covariance;
        let c = &self.relation;
        DMatrix::from_fn(2 * k, 2 * k, |i, j| {
            let (m, n) = (i % k, j % k);
            let (rv, cv) = (r[(m, n)], c[(m, n)]);
            0.5 * match (i < k, j < k) {
                (true, true) => (rv + cv).re,
                (true, false) => (cv - rv).im,
                (false, true) => (rv + cv).im,
                (false, false) => (rv - cv).re,
            }
        })
    }

    /// `(Re h̄; Im h̄)`.
    pub fn real_mean(&self) -> DVector<f64> {
        let k = self.rounds();
        DVector::from_fn(2 * k, |i, _| {
            if i < k {
                self.mean[i].re
            } else {
                self.mean[i - k].im
            }
        })
    }

    /// Real Gaussian form with a (possibly jittered) Cholesky factor.
    pub fn real_form(&self) -> Result<RealGaussianForm> {
        let cov_real = self.real_covariance();
        let scale = cov_real.amax().max(f64::MIN_POSITIVE);
        let mut last = 0.0;
        for level in JITTER_LADDER {
            let jitter = level * scale;
            last = jitter;
            let mut shifted = cov_real.clone();
            for i in 0..shifted.nrows() {
                shifted[(i, i)] += jitter;
            }
            if let Some(factor) = cholesky_factor(shifted, scale) {
                return Ok(RealGaussianForm {
                    mean_real: self.real_mean(),
                    cov_real,
                    factor,
                    jitter,
                });
            }
        }
        Err(Error::Factorization { jitter: last })
    }

    /// Draw `n` channel vectors from stream `(seed, stream)`.
    pub fn sample(&self, n: usize, seed: u64, stream: u64) -> Result<Vec<Vec<Complex64>>> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "must be at least 1".into(),
            });
        }
        let form = self.real_form()?;
        let mut rng = stream_rng(seed, stream);
        let mut sampler = form.sampler();
        Ok((0..n)
            .map(|_| {
                let mut h = vec![Complex64::default(); self.rounds()];
                sampler.draw(&mut rng, &mut h);
                h
            })
            .collect())
    }

    /// Log-density of `h` under the real `2K`-dimensional Gaussian law.
    pub fn log_density(&self, h: &[Complex64]) -> Result<f64> {
        let k = self.rounds();
        if h.len() != k {
            return Err(Error::Dimension {
                what: "h",
                got: h.len(),
                expected: k,
            });
        }
        let v = self.real_covariance();
        let scale = v.amax().max(f64::MIN_POSITIVE);
        let l = cholesky_factor(v, scale).ok_or(Error::SingularCovariance)?;
        let log_det: f64 = 2.0 * (0..2 * k).map(|i| l[(i, i)].ln()).sum::<f64>();
        let mut x = DVector::from_fn(2 * k, |i, _| {
            if i < k {
                h[i].re - self.mean[i].re
            } else {
                h[i - k].im - self.mean[i - k].im
            }
        });
        // x ← L⁻¹ x, so the quadratic form is |x|².
        l.solve_lower_triangular_mut(&mut x)
            .then_some(())
            .ok_or(Error::SingularCovariance)?;
        let quad = x.norm_squared();
        Ok(-(k as f64) * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * quad)
    }

    /// `f_h(0)`, the density at the origin; the leading constant of the
    /// high-SNR outage.
    pub fn density_at_zero(&self) -> Result<f64> {
        let zero = vec![Complex64::default(); self.rounds()];
        self.log_density(&zero).map(f64::exp)
    }
}

impl RealGaussianForm {
    pub fn dim(&self) -> usize {
        self.mean_real.len()
    }

    /// Reusable draw buffer for repeated sampling.
    pub fn sampler(&self) -> Sampler<'_> {
        Sampler {
            form: self,
            z: vec![0.0; self.dim()],
        }
    }
}

/// Draws channel vectors from a [`RealGaussianForm`] without allocating.
pub struct Sampler<'a> {
    form: &'a RealGaussianForm,
    z: Vec<f64>,
}

impl Sampler<'_> {
    /// Fill `h` with one draw `h̄ + L·z`, `z ~ N(0, I₂ₖ)`.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R, h: &mut [Complex64]) {
        let k = h.len();
        for z in self.z.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        let l = &self.form.factor;
        let mu = &self.form.mean_real;
        for (i, out) in h.iter_mut().enumerate() {
            let re = mu[i] + (0..=i).map(|j| l[(i, j)] * self.z[j]).sum::<f64>();
            let row = i + k;
            let im = mu[row] + (0..=row).map(|j| l[(row, j)] * self.z[j]).sum::<f64>();
            *out = Complex64::new(re, im);
        }
    }
}

/// Lower Cholesky factor, rejecting pivots that are zero to working
/// precision relative to `scale`.
fn cholesky_factor(v: DMatrix<f64>, scale: f64) -> Option<DMatrix<f64>> {
    let floor = 64.0 * f64::EPSILON * scale * v.nrows() as f64;
    let l = Cholesky::new(v)?.l();
    (0..l.nrows())
        .all(|i| l[(i, i)] * l[(i, i)] > floor)
        .then_some(l)
}

fn max_entry(k: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    (0..k)
        .flat_map(|m| (0..k).map(move |n| (m, n)))
        .map(|(m, n)| f(m, n))
        .fold(0.0, f64::max)
}

/// LOS mean `(1 + i)/√2` in every round.
pub fn unit_diagonal_mean(k: usize) -> Vec<Complex64> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    vec![Complex64::new(a, a); k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_k1_rho0_is_rayleigh() {
        let m = ChannelModel::exponential(1, 0.0, &[c(0.0, 0.0)]).unwrap();
        assert_eq!(m.covariance()[(0, 0)], c(1.0, 0.0));
        assert_eq!(m.relation()[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn exponential_k2_with_los_mean() {
        let m = ChannelModel::exponential(2, 0.8, &unit_diagonal_mean(2)).unwrap();
        assert_relative_eq!(m.covariance()[(0, 1)].re, 0.8);
        assert_relative_eq!(m.covariance()[(1, 1)].re, 1.0);
        for z in m.relation().iter() {
            assert_relative_eq!(z.im, 0.64, epsilon = 1e-15);
            assert_eq!(z.re, 0.0);
        }
        assert!(m.validate().is_valid());
    }

    #[test]
    fn exponential_k3_half() {
        let m = ChannelModel::exponential(3, 0.5, &[c(0.0, 0.0); 3]).unwrap();
        assert_relative_eq!(m.covariance()[(0, 1)].re, 0.5);
        assert_relative_eq!(m.covariance()[(0, 2)].re, 0.25);
        assert_relative_eq!(m.relation()[(2, 0)].im, 0.125);
        assert!(m.validate().min_eigenvalue > 0.0);
    }

    #[test]
    fn exponential_rejects_bad_input() {
        assert!(matches!(
            ChannelModel::exponential(2, 0.5, &[c(0.0, 0.0)]),
            Err(Error::Dimension { .. })
        ));
        assert!(ChannelModel::exponential(2, 1.0, &[c(0.0, 0.0); 2]).is_err());
        assert!(ChannelModel::exponential(2, -0.1, &[c(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn validate_flags_asymmetric_relation() {
        let mut rel = DMatrix::zeros(2, 2);
        rel[(0, 1)] = c(0.1, 0.0);
        let m = ChannelModel::from_parts(DVector::zeros(2), DMatrix::identity(2, 2), rel).unwrap();
        let report = m.validate();
        assert!(!report.is_valid());
        assert!(report.failures().any(|f| f.name == "relation symmetric"));
        assert!(ChannelModel::new(m.mean().clone(), m.covariance().clone(), m.relation().clone()).is_err());
    }

    #[test]
    fn validate_flags_zero_covariance() {
        let m = ChannelModel::from_parts(DVector::zeros(2), DMatrix::zeros(2, 2), DMatrix::zeros(2, 2))
            .unwrap();
        let report = m.validate();
        assert!(report
            .failures()
            .any(|f| f.name == "covariance diagonal positive"));
    }

    #[test]
    fn validate_reports_indefinite_v() {
        // |C₁₁| > R₁₁ is impossible for any complex Gaussian.
        let m = ChannelModel::from_parts(
            DVector::zeros(1),
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, c(2.0, 0.0)),
        )
        .unwrap();
        let report = m.validate();
        assert!(report.min_eigenvalue < 0.0);
        assert!(report.failures().any(|f| f.name == "real covariance PSD"));
    }

    #[test]
    fn real_form_circular_k1() {
        let f = ChannelModel::rayleigh(1).real_form().unwrap();
        assert_eq!(f.cov_real, DMatrix::identity(2, 2) * 0.5);
        assert_eq!(f.jitter, 0.0);
    }

    #[test]
    fn real_form_rank_one_needs_jitter() {
        let m = ChannelModel::new(
            DVector::zeros(1),
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, c(0.0, 1.0)),
        )
        .unwrap();
        let f = m.real_form().unwrap();
        assert_eq!(f.cov_real, DMatrix::from_element(2, 2, 0.5));
        assert!(f.jitter > 0.0);
        let recon = &f.factor * f.factor.transpose();
        let err = (recon - &f.cov_real).amax();
        assert!(err <= f.jitter + 1e-12 * f.cov_real.amax());
        assert!(matches!(m.log_density(&[c(0.0, 0.0)]), Err(Error::SingularCovariance)));
    }

    #[test]
    fn real_form_trace_is_k() {
        let m = ChannelModel::exponential(2, 0.8, &unit_diagonal_mean(2)).unwrap();
        let f = m.real_form().unwrap();
        assert_relative_eq!(f.cov_real.trace(), 2.0, epsilon = 1e-14);
        assert!(SymmetricEigen::new(f.cov_real.clone()).eigenvalues.min() > 0.0);
    }

    #[test]
    fn real_form_fails_when_indefinite() {
        let m = ChannelModel::from_parts(
            DVector::zeros(1),
            DMatrix::identity(1, 1),
            DMatrix::from_element(1, 1, c(2.0, 0.0)),
        )
        .unwrap();
        assert!(matches!(m.real_form(), Err(Error::Factorization { .. })));
    }

    #[test]
    fn log_density_at_mode() {
        let m = ChannelModel::rayleigh(1);
        assert_relative_eq!(m.log_density(&[c(0.0, 0.0)]).unwrap(), -PI.ln(), epsilon = 1e-14);
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let rician = ChannelModel::new(
            DVector::from_element(1, c(a, a)),
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert_relative_eq!(rician.log_density(&[c(a, a)]).unwrap(), -PI.ln(), epsilon = 1e-14);
    }

    #[test]
    fn density_at_zero_rician_offset() {
        assert_relative_eq!(ChannelModel::rayleigh(1).density_at_zero().unwrap(), 1.0 / PI, epsilon = 1e-15);
        let m = ChannelModel::new(
            DVector::from_element(1, c(1.0, 0.0)),
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert_relative_eq!(m.density_at_zero().unwrap(), (-1.0f64).exp() / PI, epsilon = 1e-15);
    }

    #[test]
    fn log_density_rejects_wrong_length() {
        assert!(ChannelModel::rayleigh(2).log_density(&[c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn restrict_takes_leading_blocks() {
        let m = ChannelModel::exponential(3, 0.5, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        let r = m.restrict(2).unwrap();
        assert_eq!(r.rounds(), 2);
        assert_eq!(r.mean()[1], c(2.0, 0.0));
        assert_eq!(r.covariance()[(0, 1)], c(0.5, 0.0));
        assert!(m.restrict(0).is_err());
        assert!(m.restrict(4).is_err());
    }

    #[test]
    fn sample_is_reproducible() {
        let m = ChannelModel::exponential(2, 0.8, &unit_diagonal_mean(2)).unwrap();
        let a = m.sample(100, 11, 2).unwrap();
        let b = m.sample(100, 11, 2).unwrap();
        let d = m.sample(100, 11, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
        assert!(m.sample(0, 1, 1).is_err());
    }

    #[test]
    fn sample_mean_rayleigh() {
        let draws = ChannelModel::rayleigh(1).sample(1_000_000, 5, 0).unwrap();
        let n = draws.len() as f64;
        let mean: Complex64 = draws.iter().map(|h| h[0]).sum::<Complex64>() / n;
        assert!(mean.re.abs() < 4e-3 && mean.im.abs() < 4e-3, "{mean}");
    }
}
