use std::f64::consts::E;

use gaf_hole_core::coeff_models::{mid_range_end, CoefficientModel};
use gaf_hole_core::numerics::CompensatedSum;
use proptest::prelude::*;

/// Values of S(r) from a 40-digit summation done outside this crate.
const S_REFERENCE: [(f64, f64); 6] = [
    (1.5, 2.446_341_682_027_341_7),
    (2.0, 13.747_129_301_577_305),
    (3.0, 102.732_972_540_851_66),
    (5.0, 986.400_891_148_683_2),
    (7.5, 5_401.177_644_826_098),
    (10.0, 17_602.696_636_159_927),
];

/// `log n!` as a compensated sum of `log k`, independent of the log-Γ routine.
fn log_factorials(nmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let mut acc = CompensatedSum::new();
    out.push(0.0);
    for k in 1..=nmax {
        acc.add((k as f64).ln());
        out.push(acc.value());
    }
    out
}

#[test]
fn s_of_r_matches_reference_values() {
    let gef = CoefficientModel::gef();
    for (r, want) in S_REFERENCE {
        let got = gef.s_of_r(r).unwrap();
        assert!(
            (got - want).abs() <= 1e-10 * want,
            "r = {r}: {got} vs {want}"
        );
    }
}

#[test]
fn s_of_r_matches_brute_force_sum() {
    let gef = CoefficientModel::gef();
    let lf = log_factorials(2000);
    for i in 1..=100 {
        let r = 0.1 * i as f64;
        let mut sum = CompensatedSum::new();
        for (n, l) in lf
            .iter()
            .enumerate()
            .take(((3.0 * r * r) as usize).max(4) + 10)
        {
            let t = n as f64 * r.ln() - 0.5 * l;
            if t >= 0.0 {
                sum.add(t);
            }
        }
        let want = 2.0 * sum.value();
        let got = gef.s_of_r(r).unwrap();
        assert!(
            (got - want).abs() <= 1e-10 * want.max(1e-300) + 1e-12,
            "r = {r}: {got} vs {want}"
        );
    }
}

#[test]
fn unimodal_on_grid() {
    let gef = CoefficientModel::gef();
    for i in 10..=200 {
        let r = 0.1 * i as f64;
        let peak = gef.peak_index_range(r).unwrap();
        let terms: Vec<f64> = (0..(4.0 * r * r) as usize + 10)
            .map(|n| gef.log_term(n, r))
            .collect();
        for n in 0..terms.len() - 1 {
            if n < *peak.start() {
                assert!(terms[n + 1] >= terms[n] - 1e-12, "r = {r}, n = {n}");
            } else if n >= *peak.end() {
                assert!(terms[n + 1] <= terms[n] + 1e-12, "r = {r}, n = {n}");
            }
        }
    }
}

#[test]
fn stirling_sandwich() {
    let gef = CoefficientModel::gef();
    for n in 1..=10_000usize {
        let nf = n as f64;
        let upper = 0.5 * nf * (E / nf).ln();
        let lower = -0.5 * (3.0 * nf).ln() + upper;
        let l = gef.log_coeff(n);
        assert!(lower <= l && l <= upper + 1e-12, "n = {n}");
    }
}

#[test]
fn mid_range_bound() {
    let gef = CoefficientModel::gef();
    for r in 2..=10 {
        let r = r as f64;
        for n in 1..=mid_range_end(r) {
            assert!(gef.log_term(n, r) >= -(3.0 * r).ln(), "r = {r}, n = {n}");
        }
    }
}

/// The exact sum tends to `e²/4·r⁴` with a relative error of order
/// `log r / r²`. Reports the fitted constant K.
#[test]
fn asymptotic_convergence_rate() {
    let gef = CoefficientModel::gef();
    let mut last = f64::INFINITY;
    for r in [20.0f64, 40.0, 80.0] {
        let s = gef.s_of_r(r).unwrap();
        let err = (s / (E * E / 4.0 * r.powi(4)) - 1.0).abs();
        let k = err * r * r / r.ln();
        println!("r = {r}: relative error {err:.3e}, K = {k:.4}");
        assert!(err < last);
        assert!(k < 5.0);
        last = err;
    }
}

/// The leading term returned by `s_asymptotic` is `3e²/4·r⁴`; the exact sum is
/// a third of that at large r.
#[test]
fn stated_constant_is_three_times_the_limit() {
    let gef = CoefficientModel::gef();
    let r = 200.0;
    let q = gef.s_of_r(r).unwrap() / gef.s_asymptotic(r).unwrap();
    assert!((q - 1.0 / 3.0).abs() < 1e-3, "{q}");
}

#[test]
fn mittag_leffler_alpha_one_matches_exponential_series() {
    // aₙ = 1/n!: S(r) counts n with rⁿ ≥ n!.
    let ml = CoefficientModel::mittag_leffler(1.0).unwrap();
    let lf = log_factorials(200);
    for r in [1.5, 3.0, 10.0] {
        let want: f64 = 2.0
            * lf.iter()
                .enumerate()
                .map(|(n, l)| n as f64 * f64::ln(r) - l)
                .filter(|t| *t >= 0.0)
                .sum::<f64>();
        assert!((ml.s_of_r(r).unwrap() - want).abs() <= 1e-10 * want.max(1.0));
    }
}

proptest! {
    #[test]
    fn gef_log_coeff_is_half_log_gamma(n in 0usize..100_000) {
        let gef = CoefficientModel::gef();
        let want = -0.5 * libm::lgamma(n as f64 + 1.0);
        prop_assert_eq!(gef.log_coeff(n), want);
    }

    #[test]
    fn cache_entries_never_change(a in 1usize..3000, b in 1usize..3000) {
        let gef = CoefficientModel::gef();
        let first = gef.log_coeffs(a);
        gef.warm(b);
        prop_assert_eq!(&gef.log_coeffs(a), &first);
    }

    #[test]
    fn s_of_r_is_nondecreasing(r in 0.05f64..30.0, dr in 0.0f64..2.0) {
        let gef = CoefficientModel::gef();
        prop_assert!(gef.s_of_r(r + dr).unwrap() >= gef.s_of_r(r).unwrap());
    }

    #[test]
    fn peak_contains_argmax(r in 1.0f64..30.0) {
        let gef = CoefficientModel::gef();
        let peak = gef.peak_index_range(r).unwrap();
        let nmax = (4.0 * r * r) as usize + 5;
        let argmax = (0..nmax)
            .max_by(|&a, &b| gef.log_term(a, r).total_cmp(&gef.log_term(b, r)))
            .unwrap();
        prop_assert!(peak.contains(&argmax), "r = {}, argmax = {}, peak = {:?}", r, argmax, peak);
    }

    #[test]
    fn tail_bound_dominates(r in 0.5f64..20.0, extra in 0usize..500) {
        let gef = CoefficientModel::gef();
        let n = (E * r * r).ceil() as usize + extra;
        let b = gaf_hole_core::coeff_models::tail_log_bound(r, n).unwrap();
        prop_assert!(gef.log_term(n, r) <= b + 1e-12);
    }
}
