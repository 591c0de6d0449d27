#![allow(dead_code)]

use harqbeck_core::channel::unit_diagonal_mean;
use harqbeck_core::ChannelModel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// `(−1)^K + det(A)/det(B)`, with `A` the Vandermonde-like matrix whose rows
/// are `(R, R², …, R^{K−1}, 2^R)` and `B` the Vandermonde matrix of the rates.
pub fn g_determinant(rates: &[f64]) -> f64 {
    let k = rates.len();
    let a = DMatrix::from_fn(k, k, |i, j| {
        if j + 1 == k {
            rates[i].exp2()
        } else {
            rates[i].powi(j as i32 + 1)
        }
    });
    let b = DMatrix::from_fn(k, k, |i, j| rates[i].powi(j as i32));
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign + a.determinant() / b.determinant()
}

/// Sorted-free rejection of vectors with a pairwise gap at or below `gap`.
pub fn well_separated(rates: &[f64], gap: f64) -> bool {
    rates
        .iter()
        .enumerate()
        .all(|(i, a)| rates[i + 1..].iter().all(|b| (a - b).abs() > gap))
}

pub fn exponential_model(k: usize, rho: f64) -> ChannelModel {
    ChannelModel::exponential(k, rho, &unit_diagonal_mean(k)).unwrap()
}

/// Circular complex Gaussian log-density `−K ln π − ln det R − dᴴR⁻¹d`.
pub fn circular_log_density(mean: &[Complex64], r: &DMatrix<Complex64>, h: &[Complex64]) -> f64 {
    let k = mean.len();
    let d = DVector::from_fn(k, |i, _| h[i] - mean[i]);
    let inv = r.clone().try_inverse().unwrap();
    let quad = (d.adjoint() * inv * &d)[(0, 0)].re;
    let det = r.determinant().re;
    -(k as f64) * std::f64::consts::PI.ln() - det.ln() - quad
}

/// Sample mean and standard error of a real sequence.
pub fn mean_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
