mod common;

use common::{exponential_model, g_determinant, well_separated};
use harqbeck_core::outage::kernel::DISPATCH_REL_TOL;
use harqbeck_core::{db_to_linear, g, g_closed, g_numeric, AsymptoticOutage};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn separated_rates(rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64, gap: f64) -> Vec<f64> {
    loop {
        let r: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi)).collect();
        if well_separated(&r, gap) {
            return r;
        }
    }
}

#[test]
fn pinned_values() {
    assert!((g_closed(&[3.0]).unwrap() - 7.0).abs() < 1e-12);
    assert!((g_closed(&[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
    assert!((g_closed(&[3.0, 5.0]).unwrap() - 29.0).abs() < 1e-12 * 29.0);
    assert!((g(&[3.0, 5.0]).unwrap() - 29.0).abs() < 1e-12 * 29.0);
}

#[test]
fn closed_matches_quadrature_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b65726e);
    for i in 0..200 {
        let k = 2 + i % 4;
        let r = separated_rates(&mut rng, k, 0.5, 8.0, 0.05);
        let c = g_closed(&r).unwrap();
        let n = g_numeric(&r, DISPATCH_REL_TOL).unwrap();
        assert!(rel(c, n) < 1e-6, "{r:?}: closed {c} numeric {n}");
    }
}

#[test]
fn determinant_form_matches_partial_fractions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x646574);
    for i in 0..200 {
        let k = 1 + i % 4;
        let r = separated_rates(&mut rng, k, 0.5, 8.0, 0.05);
        let c = g_closed(&r).unwrap();
        let d = g_determinant(&r);
        assert!(rel(d, c) < 1e-9, "{r:?}: partial fractions {c} determinant {d}");
    }
}

#[test]
fn equal_rates_match_analytic_limit() {
    // K = 2 with R₁ = R₂ = R: 1 + 2^R (R ln 2 − 1).
    for r in [0.5f64, 2.0, 4.0, 7.5] {
        let want = 1.0 + r.exp2() * (r * std::f64::consts::LN_2 - 1.0);
        assert!(rel(g(&[r, r]).unwrap(), want) < 1e-8);
    }
}

#[test]
fn convex_increasing_in_every_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7468316d);
    let h = 1e-2;
    for i in 0..100 {
        let k = 1 + i % 4;
        let r = separated_rates(&mut rng, k, 0.5, 8.0, 0.05);
        let g0 = g(&r).unwrap();
        for t in 0..k {
            let at = |d: f64| {
                let mut x = r.clone();
                x[t] += d;
                g(&x).unwrap()
            };
            let (up, down) = (at(h), at(-h));
            assert!(up - g0 > 0.0, "{r:?} coordinate {t}: forward difference {}", up - g0);
            assert!(
                up - 2.0 * g0 + down >= -1e-8 * g0,
                "{r:?} coordinate {t}: second difference {}",
                up - 2.0 * g0 + down
            );
        }
    }
}

#[test]
fn outage_scales_with_diversity_order() {
    let model = exponential_model(4, 0.8);
    let asy = AsymptoticOutage::new(&model).unwrap();
    let rates = [2.0, 3.5, 4.25, 5.0];
    let snr = [db_to_linear(20.0); 4];
    for alpha in [0.37, 2.0, 10.0, 1e3] {
        let scaled: Vec<f64> = snr.iter().map(|s| alpha * s).collect();
        for k in 1..=4 {
            let base = asy.outage(&rates, &snr, k).unwrap();
            let got = asy.outage(&rates, &scaled, k).unwrap();
            assert!(rel(got, alpha.powi(-(k as i32)) * base) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_under_permutation(mut r in prop::collection::vec(0.3f64..9.0, 1..=5), seed in any::<u64>()) {
        let base = g(&r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..r.len()).rev() {
            r.swap(i, rng.random_range(0..=i));
        }
        prop_assert!(rel(g(&r).unwrap(), base) < 1e-9);
    }

    #[test]
    fn positive(r in prop::collection::vec(0.05f64..12.0, 1..=5)) {
        prop_assert!(g(&r).unwrap() > 0.0);
    }
}
