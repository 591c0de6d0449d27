//! One-dimensional searches used by the rate optimizer.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Result of a 1-D maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// Whether the golden-section run was abandoned for the grid fallback.
    pub used_grid: bool,
}

/// Maximize `f` on `[lo, hi]` by golden-section search down to an interval
/// of width `tol`.
///
/// If the four bracket values ever show an interior dip (a point below both
/// of its neighbours by more than round-off), `f` is not unimodal on the
/// bracket and the search restarts as a dense grid with step `√tol`,
/// followed by a golden-section polish around the best grid point.
pub fn maximize<F>(lo: f64, hi: f64, tol: f64, mut f: F) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    match golden(lo, hi, tol, &mut f)? {
        Some(m) => Ok(m),
        None => {
            let step = tol.sqrt();
            let best = grid(lo, hi, step, &mut f)?;
            let a = (best.x - step).max(lo);
            let b = (best.x + step).min(hi);
            let polished = golden(a, b, tol, &mut f)?.unwrap_or(best);
            let m = if polished.value >= best.value { polished } else { best };
            Ok(Maximum {
                used_grid: true,
                ..m
            })
        }
    }
}

/// Relative accuracy of the objective; the numeric kernel path is only good
/// to about this, and smaller dips are quadrature noise, not a second mode.
const NOISE_REL: f64 = 1e-8;

fn dips(left: f64, mid: f64, right: f64) -> bool {
    let noise = NOISE_REL * left.abs().max(mid.abs()).max(right.abs()).max(1.0);
    mid < left - noise && mid < right - noise
}

/// Golden-section maximization; `None` if non-unimodality was detected.
fn golden<F>(lo: f64, hi: f64, tol: f64, f: &mut F) -> Result<Option<Maximum>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if b - a <= tol {
        let (x, value) = if fb >= fa { (b, fb) } else { (a, fa) };
        return Ok(Some(Maximum {
            x,
            value,
            used_grid: false,
        }));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);

    // Best point seen, endpoints included, so boundary maxima come back exact.
    let mut best = [(a, fa), (b, fb), (c, fc), (d, fd)]
        .into_iter()
        .fold((a, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc });

    while b - a > tol {
        if dips(fa, fc, fd) || dips(fc, fd, fb) {
            return Ok(None);
        }
        if fc >= fd {
            b = d;
            fb = fd;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            fa = fc;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(Some(Maximum {
        x: best.0,
        value: best.1,
        used_grid: false,
    }))
}

fn grid<F>(lo: f64, hi: f64, step: f64, f: &mut F) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut best = Maximum {
        x: lo,
        value: f64::NEG_INFINITY,
        used_grid: true,
    };
    for i in 0..=n {
        let x = (lo + i as f64 * step).min(hi);
        let v = f(x)?;
        if v > best.value {
            best = Maximum { x, value: v, used_grid: true };
        }
    }
    Ok(best)
}

/// Largest `x ∈ [lo, hi]` with `p(x) ≤ limit` for nondecreasing `p`,
/// given `p(lo) ≤ limit < p(hi)`.
///
/// Bisects until the bracket is narrower than `tol` and the constraint is
/// active to `slack` (relative), or the bracket reaches float resolution.
pub fn bisect_feasible<P>(mut lo: f64, mut hi: f64, limit: f64, tol: f64, slack: f64, mut p: P) -> Result<f64>
where
    P: FnMut(f64) -> Result<f64>,
{
    let mut p_lo = p(lo)?;
    for _ in 0..200 {
        let narrow = hi - lo <= tol;
        let tight = limit - p_lo <= slack * limit;
        if (narrow && tight) || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pm = p(mid)?;
        if pm <= limit {
            lo = mid;
            p_lo = pm;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
