//! The rate kernel `g_K(R₁,…,R_K)`: the volume of
//! `{t ≥ 0 : Σ_k log₂(1 + t_k)/R_k < 1}`.
//!
//! Two independent evaluators are provided. [`g_closed`] is the
//! partial-fraction expansion, valid for pairwise-distinct rates:
//!
//! ```text
//! g_K = (−1)^K + Σ_p 2^{R_p} / Π_{k≠p} (R_p − R_k)/R_k
//! ```
//!
//! [`g_numeric`] integrates the volume directly after the substitution
//! `u_k = log₂(1 + t_k)/R_k`, which maps the region onto the unit simplex:
//!
//! ```text
//! g_K = Π_k (R_k ln 2) · ∫_{u ≥ 0, Σu < 1} Π_k 2^{R_k u_k} du
//! ```
//!
//! [`GKernel`] dispatches between them.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

/// Minimum relative pairwise gap between rates for the closed form.
pub const DELTA_EQ: f64 = 1e-6;

/// Quadrature tolerance used by the dispatcher.
pub const DISPATCH_REL_TOL: f64 = 1e-8;

/// Maximum number of quadrature refinements.
pub const MAX_DEPTH: u32 = 12;

const GL_NODES: usize = 8;

fn check_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::InvalidParameter {
            name: "rates",
            reason: "need at least one rate".into(),
        });
    }
    if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "rates",
            reason: format!("rate {r} is not a positive finite number"),
        });
    }
    Ok(())
}

/// Smallest `|R_p − R_k| / max(R_p, R_k)` over all pairs; `∞` for one rate.
pub fn min_relative_gap(rates: &[f64]) -> f64 {
    let mut gap = f64::INFINITY;
    for (p, &a) in rates.iter().enumerate() {
        for &b in &rates[p + 1..] {
            gap = gap.min((a - b).abs() / a.max(b));
        }
    }
    gap
}

/// Partial-fraction value and its cancellation amplification
/// `Σ_p |ψ_p| / |g|` (the factor by which rounding in the terms is magnified).
fn partial_fraction(rates: &[f64]) -> (f64, f64) {
    let k = rates.len();
    let mut sum = 0.0;
    let mut magnitude = 1.0;
    for (p, &rp) in rates.iter().enumerate() {
        let denom: f64 = rates
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != p)
            .map(|(_, &rq)| (rp - rq) / rq)
            .product();
        let term = rp.exp2() / denom;
        sum += term;
        magnitude += term.abs();
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let value = sign + sum;
    (value, magnitude / value.abs())
}

/// Closed-form kernel for pairwise-distinct rates.
///
/// Fails with [`Error::NearEqualRates`] when two rates are within
/// [`DELTA_EQ`] of each other (relative); use [`g_numeric`] there.
pub fn g_closed(rates: &[f64]) -> Result<f64> {
    check_rates(rates)?;
    if min_relative_gap(rates) <= DELTA_EQ {
        return Err(Error::NearEqualRates(rates.to_vec()));
    }
    Ok(partial_fraction(rates).0)
}

/// Kernel by nested quadrature over the unit simplex, refined until two
/// successive estimates agree to `rel_tol`.
///
/// The simplex integral is built from the last coordinate inwards:
/// `F_{K+1} ≡ 1`, `F_k(s) = ∫₀^s e^{a_k u} F_{k+1}(s − u) du` with
/// `a_k = R_k ln 2`, so the kernel is `Π a_k · F_1(1)`. Each intermediate
/// `F_k` is entire, so it is tabulated at Chebyshev points on `[0, 1]` and
/// evaluated through barycentric interpolation; the `u`-integrals use
/// composite Gauss–Legendre panels. Refinement doubles the panel count and
/// raises the interpolation degree together.
pub fn g_numeric(rates: &[f64], rel_tol: f64) -> Result<f64> {
    check_rates(rates)?;
    if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
        return Err(Error::InvalidParameter {
            name: "rel_tol",
            reason: format!("{rel_tol} is outside (0, 1e-2]"),
        });
    }
    let scale: f64 = rates.iter().map(|r| r * LN_2).product();
    let rule = GaussLegendre::new(GL_NODES);

    let mut previous = simplex_integral(rates, &rule, 0) * scale;
    let mut change = f64::INFINITY;
    for depth in 1..=MAX_DEPTH {
        let current = simplex_integral(rates, &rule, depth) * scale;
        change = ((current - previous) / current).abs();
        if change < rel_tol {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::Quadrature {
        depth: MAX_DEPTH,
        estimate: previous,
        change,
    })
}

fn simplex_integral(rates: &[f64], rule: &GaussLegendre, depth: u32) -> f64 {
    let panels = 1usize << depth;
    let degree = (16 * (depth as usize + 1)).min(512);
    let cheb = ChebyshevGrid::new(degree);

    let exponents: Vec<f64> = rates.iter().map(|r| r * LN_2).collect();
    // Tabulated F_{k+1}; `None` stands for the constant 1.
    let mut inner: Option<Vec<f64>> = None;
    for &a in exponents[1..].iter().rev() {
        let values: Vec<f64> = cheb
            .nodes
            .iter()
            .map(|&s| {
                rule.integrate(0.0, s, panels, |u| {
                    let tail = match &inner {
                        None => 1.0,
                        Some(v) => cheb.interpolate(v, s - u),
                    };
                    (a * u).exp() * tail
                })
            })
            .collect();
        inner = Some(values);
    }
    let a = exponents[0];
    rule.integrate(0.0, 1.0, panels, |u| {
        let tail = match &inner {
            None => 1.0,
            Some(v) => cheb.interpolate(v, 1.0 - u),
        };
        (a * u).exp() * tail
    })
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub(crate) struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub(crate) fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the usual cosine guess.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Composite rule over `panels` equal panels of `[lo, hi]`.
    pub(crate) fn integrate(&self, lo: f64, hi: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let width = (hi - lo) / panels as f64;
        let half = 0.5 * width;
        let mut total = 0.0;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * width;
            let panel: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * f(mid + half * x))
                .sum();
            total += half * panel;
        }
        total
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Chebyshev–Lobatto points on `[0, 1]` with barycentric weights.
struct ChebyshevGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl ChebyshevGrid {
    fn new(degree: usize) -> Self {
        let nodes = (0..=degree)
            .map(|i| 0.5 * (1.0 - (PI * i as f64 / degree as f64).cos()))
            .collect();
        let weights = (0..=degree)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                if i == 0 || i == degree {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        Self { nodes, weights }
    }

    fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xi, &wi), &fi) in self.nodes.iter().zip(&self.weights).zip(values) {
            let d = x - xi;
            if d == 0.0 {
                return fi;
            }
            let t = wi / d;
            num += t * fi;
            den += t;
        }
        num / den
    }
}

/// Kernel dispatcher: closed form for well-separated rates, quadrature
/// otherwise.
///
/// The closed form is used when the minimum relative gap exceeds
/// `delta_eq` and its cancellation amplification stays below
/// `1/delta_eq`; the second condition catches clusters of three or more
/// nearly equal rates, where the pairwise gap alone underestimates the
/// loss of precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GKernel {
    pub delta_eq: f64,
    pub rel_tol: f64,
}

impl Default for GKernel {
    fn default() -> Self {
        Self {
            delta_eq: DELTA_EQ,
            rel_tol: DISPATCH_REL_TOL,
        }
    }
}

impl GKernel {
    pub fn eval(&self, rates: &[f64]) -> Result<f64> {
        check_rates(rates)?;
        if self.uses_closed_form(rates) {
            Ok(partial_fraction(rates).0)
        } else {
            g_numeric(rates, self.rel_tol)
        }
    }

    /// Whether [`eval`](Self::eval) takes the closed-form path for `rates`.
    pub fn uses_closed_form(&self, rates: &[f64]) -> bool {
        if min_relative_gap(rates) <= self.delta_eq {
            return false;
        }
        let (_, amplification) = partial_fraction(rates);
        amplification * self.delta_eq <= 1.0
    }
}

/// Kernel with the default dispatcher.
pub fn g(rates: &[f64]) -> Result<f64> {
    GKernel::default().eval(rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn equal_rate(r: f64, k: i32) -> f64 {
        // Equal-rate values: a^K/(K−1)! ∫₀¹ s^{K−1} e^{as} ds.
        let a = r * LN_2;
        match k {
            1 => a.exp() - 1.0,
            2 => 1.0 + a.exp() * (a - 1.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(GL_NODES);
        // Degree 15 is integrated exactly by 8 nodes.
        let v = rule.integrate(0.0, 2.0, 1, |x| x.powi(15));
        assert_relative_eq!(v, 2f64.powi(16) / 16.0, max_relative = 1e-13);
        let v = rule.integrate(0.0, 1.0, 3, |x| x.exp());
        assert_relative_eq!(v, 1f64.exp() - 1.0, max_relative = 1e-14);
    }

    #[test]
    fn closed_pinned_values() {
        assert_eq!(g_closed(&[3.0]).unwrap(), 7.0);
        assert_relative_eq!(g_closed(&[1.0, 2.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(g_closed(&[3.0, 5.0]).unwrap(), 29.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_rejects_near_equal() {
        assert!(matches!(g_closed(&[2.0, 2.0]), Err(Error::NearEqualRates(_))));
        assert!(matches!(
            g_closed(&[3.0, 3.0 + 1e-7]),
            Err(Error::NearEqualRates(_))
        ));
        assert!(g_closed(&[3.0, -1.0]).is_err());
        assert!(g_closed(&[]).is_err());
    }

    #[test]
    fn numeric_single_rate() {
        let v = g_numeric(&[3.0], 1e-10).unwrap();
        assert_relative_eq!(v, 7.0, max_relative = 1e-10);
    }

    #[test]
    fn numeric_matches_closed_pairs() {
        assert_relative_eq!(g_numeric(&[1.0, 2.0], 1e-10).unwrap(), 1.0, max_relative = 1e-9);
        assert_relative_eq!(g_numeric(&[3.0, 5.0], 1e-10).unwrap(), 29.0, max_relative = 1e-9);
    }

    #[test]
    fn numeric_equal_rates() {
        let v = g_numeric(&[2.0, 2.0], 1e-10).unwrap();
        assert_relative_eq!(v, 2.545_177_444_479_562, max_relative = 1e-9);
        assert_relative_eq!(v, equal_rate(2.0, 2), max_relative = 1e-9);
    }

    #[test]
    fn numeric_rejects_bad_tolerance() {
        assert!(g_numeric(&[1.0], 0.0).is_err());
        assert!(g_numeric(&[1.0], 0.5).is_err());
    }

    #[test]
    fn numeric_large_rates_converge() {
        let v = g_numeric(&[16.0, 16.0, 16.0, 16.0], 1e-8).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn dispatcher_paths() {
        let k = GKernel::default();
        assert!(k.uses_closed_form(&[3.0, 5.0]));
        assert_relative_eq!(g(&[3.0, 5.0]).unwrap(), 29.0, epsilon = 1e-12);
        assert!(!k.uses_closed_form(&[4.0; 4]));
        assert!(g(&[4.0; 4]).unwrap() > 0.0);
        assert!(!k.uses_closed_form(&[3.0, 3.0 + 1e-12]));
    }

    #[test]
    fn dispatcher_continuity_at_switch() {
        let equal = equal_rate(3.0, 2);
        let near = g(&[3.0, 3.0 + 1e-12]).unwrap();
        assert_relative_eq!(near, equal, max_relative = 1e-6);
        // Just above the threshold the closed form is still accurate.
        let above = g(&[3.0, 3.0 * (1.0 + 2e-6)]).unwrap();
        let numeric = g_numeric(&[3.0, 3.0 * (1.0 + 2e-6)], 1e-10).unwrap();
        assert_relative_eq!(above, numeric, max_relative = 1e-6);
    }

    #[test]
    fn dispatcher_routes_clusters_to_quadrature() {
        let rates = [4.0, 4.0 + 1e-5, 4.0 + 2e-5, 4.0 + 3e-5];
        assert!(min_relative_gap(&rates) > DELTA_EQ);
        assert!(!GKernel::default().uses_closed_form(&rates));
        let v = g(&rates).unwrap();
        let equal = g_numeric(&[4.0; 4], 1e-10).unwrap();
        assert_relative_eq!(v, equal, max_relative = 1e-4);
    }

    #[test]
    fn zero_delta_eq_uses_closed_form_on_near_ties() {
        let k = GKernel {
            delta_eq: 0.0,
            ..GKernel::default()
        };
        assert!(k.uses_closed_form(&[3.0, 3.0 + 1e-12]));
    }
}
