//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 1 asks for `S(r)·4/(3e²r⁴) ∈ [0.99, 1.01]`. The exact sum
//! converges to `e²/4·r⁴` instead (ratio → 1/3), so it is listed in
//! `KNOWN_UNATTAINABLE`: it is still evaluated at its stated tolerance and
//! reported as FAIL, and the run fails if it ever starts passing.

use std::f64::consts::E;
use std::process::ExitCode;
use std::time::Instant;

use gaf_hole_core::coeff_models::CoefficientModel;
use gaf_hole_core::covariance::{
    logdet_circulant, logdet_dense, minor_log_expression, vandermonde_lower_bound,
};
use gaf_hole_core::hermite::{
    annulus_escape, forced_zero_experiment, hermite_coeffs, saddle_point_approx,
};
use gaf_hole_core::hole::{hole_mc, omega_certificate, omega_conditioned_sample, omega_log_prob};
use gaf_hole_core::sampling::{draw_coeffs, sample_seed, truncation_degree, Distribution};
use gaf_hole_core::volume::{log_volume_upper_bound, volume_exact, volume_mc, VolumeQuery};
use gaf_hole_core::zeros::{count_zeros_verified, TruncatedSeries};
use gaf_hole_core::{Complex64, CovarianceSpec};
use rayon::prelude::*;

const KNOWN_UNATTAINABLE: &[u32] = &[1];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let gef = CoefficientModel::gef();
    let ratio = |r: f64| gef.s_of_r(r).unwrap() * 4.0 / (3.0 * E * E * r.powi(4));
    let (q100, q200) = (ratio(100.0), ratio(200.0));
    let (d100, d200) = ((q100 - 1.0).abs(), (q200 - 1.0).abs());
    let pass = (0.99..=1.01).contains(&q100) && d200 < d100;
    // Ratio against e²/4 for the record.
    let true_ratio = gef.s_of_r(100.0).unwrap() * 4.0 / (E * E * 1e8);
    outcome(
        pass,
        format!(
            "ratio(100) = {q100:.6}, ratio(200) = {q200:.6}; S(100)·4/(e²·100⁴) = {true_ratio:.6}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let gef = CoefficientModel::gef();
    let ratio = -omega_log_prob(20.0).unwrap() / gef.s_of_r(20.0).unwrap();
    let r_valid = (2..)
        .map(|i| 0.5 * i as f64)
        .find(|&r| omega_certificate(r).unwrap().valid)
        .unwrap();
    let cond = omega_conditioned_sample(&gef, r_valid, 1000, 2024).unwrap();
    let pass = (0.95..=1.05).contains(&ratio) && cond.fraction == 1.0;
    outcome(
        pass,
        format!(
            "-L/S at r = 20: {ratio:.6}; smallest valid radius {r_valid}, zero-free {}/{}",
            cond.zero_free, cond.samples
        ),
    )
}

fn criterion_3() -> Outcome {
    let e2 = E * E;
    let grid: [(usize, f64, f64); 20] = [
        (1, 2.0, 1.0),
        (1, 3.0, 0.5),
        (2, 2.0, 1.0),
        (2, 2.0, 0.5),
        (2, e2, 1.0),
        (2, 1.5, 2.0),
        (3, 2.0, 1.0),
        (3, e2, 1.0),
        (3, 1.0, 0.01),
        (3, 4.0, 10.0),
        (4, 2.0, 0.5),
        (4, 3.0, 5.0),
        (4, e2, 20.0),
        (5, 2.0, 3.0),
        (5, 1.0, 1e-3),
        (6, 2.0, 4.0),
        (6, 1.5, 1.0),
        (7, 2.0, 10.0),
        (8, 2.0, 20.0),
        (8, 1.2, 0.5),
    ];
    let mut worst: f64 = 0.0;
    let mut bound_checks = 0;
    let mut pass = true;
    for (i, &(k, t, s)) in grid.iter().enumerate() {
        let q = VolumeQuery::new(k, t, s).unwrap();
        let exact = volume_exact(&q);
        let mc = volume_mc(&q, 1_000_000, 300 + i as u64).unwrap();
        let z = if mc.std_err > 0.0 {
            (mc.value - exact).abs() / mc.std_err
        } else if (mc.value - exact).abs() <= 1e-12 * exact {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
        pass &= z <= 3.0;
        if let Ok(lb) = log_volume_upper_bound(&q) {
            bound_checks += 1;
            pass &= exact.ln() <= lb;
        }
    }
    outcome(
        pass,
        format!("max |exact - mc|/σ = {worst:.3} over 20 queries; {bound_checks} bound checks"),
    )
}

fn criterion_4() -> Outcome {
    let gef = CoefficientModel::gef();
    let mut pass = true;
    let mut worst_rel: f64 = 0.0;
    let mut specs: Vec<CovarianceSpec> = [1.5, 2.0, 2.5]
        .iter()
        .map(|&r| CovarianceSpec::default_for(r).unwrap())
        .collect();
    for (r, k, n) in [
        (1.5, 0.8, 8),
        (1.0, 0.5, 4),
        (2.0, 0.6, 12),
        (2.5, 0.9, 16),
        (2.5, 0.3, 16),
    ] {
        specs.push(CovarianceSpec::new(r, k, n).unwrap());
    }
    for spec in &specs {
        assert!(spec.n <= 16 && spec.r <= 2.5);
        let c = logdet_circulant(spec);
        let d = logdet_dense(spec).unwrap();
        let rel = (c - d).abs() / c.abs().max(f64::MIN_POSITIVE);
        worst_rel = worst_rel.max(rel);
        pass &= rel <= 1e-8;
    }
    let mut gaps = Vec::new();
    for r in [1.5, 2.0, 2.5, 3.0] {
        let spec = CovarianceSpec::default_for(r).unwrap();
        let logdet = logdet_circulant(&spec);
        let bound = vandermonde_lower_bound(&spec);
        let minor = minor_log_expression(&spec);
        pass &= bound <= logdet && minor <= logdet;
        let s = gef.s_of_r(spec.radius()).unwrap();
        gaps.push(format!("r={r}: minor-S(κr) = {:.3}", minor - s));
    }
    outcome(
        pass,
        format!(
            "max rel. circulant/dense difference {worst_rel:.2e}; {}",
            gaps.join(", ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let gef = CoefficientModel::gef();
    let mut mismatches = 0;
    let mut retried = 0;
    for (j, r) in [0.5, 1.0, 1.5, 2.0].into_iter().enumerate() {
        let degree = truncation_degree(&gef, r, 1e-9, 1e-9).unwrap();
        gef.warm(degree + 1);
        let (m, p) = (0..1000u64)
            .into_par_iter()
            .map(|i| {
                let draw = draw_coeffs(
                    Distribution::ComplexGaussian,
                    degree + 1,
                    sample_seed(500 + j as u64, i),
                )
                .unwrap();
                let ts = TruncatedSeries::new(&gef, &draw).unwrap();
                match count_zeros_verified(&ts, r) {
                    Ok((res, _)) => (
                        usize::from(!res.verified_by_oracle),
                        usize::from(res.radius != r),
                    ),
                    Err(_) => (1, 1),
                }
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        mismatches += m;
        retried += p;
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches in 4000 draws ({retried} counted on a perturbed radius)"),
    )
}

fn criterion_6() -> Outcome {
    let gef = CoefficientModel::gef();
    let degree = truncation_degree(&gef, 1.0, 1e-9, 1e-10).unwrap();
    gef.warm(degree + 1);
    let counts: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let draw = draw_coeffs(
                Distribution::ComplexGaussian,
                degree + 1,
                sample_seed(606, i),
            )
            .unwrap();
            let ts = TruncatedSeries::new(&gef, &draw).unwrap();
            gaf_hole_core::zeros::count_zeros_disk(&ts, 1.0)
                .unwrap()
                .count as f64
        })
        .collect();
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let z = (mean - 1.0) / se;
    outcome(
        z.abs() <= 3.0,
        format!("mean n(1) = {mean:.4}, se = {se:.4}, z = {z:.2}"),
    )
}

fn criterion_7() -> Outcome {
    let gef = CoefficientModel::gef();
    let tiny = hole_mc(&gef, 0.05, 100_000, 77).unwrap();
    let ps: Vec<f64> = [0.6, 0.8, 1.0, 1.2]
        .iter()
        .map(|&r| hole_mc(&gef, r, 100_000, 77).unwrap().point_value)
        .collect();
    let monotone = ps.windows(2).all(|w| w[1] <= w[0]);
    let pass = tiny.ci_high.unwrap() >= 0.99 && monotone;
    outcome(
        pass,
        format!(
            "p(0.05) = {:.5} [{:.5}, {:.5}]; p(0.6, 0.8, 1.0, 1.2) = {:.5}, {:.5}, {:.5}, {:.5}",
            tiny.point_value,
            tiny.ci_low.unwrap(),
            tiny.ci_high.unwrap(),
            ps[0],
            ps[1],
            ps[2],
            ps[3]
        ),
    )
}

fn criterion_8() -> Outcome {
    let beta = Complex64::new(1.0, 0.0);
    let series = hermite_coeffs(beta, 40_000).unwrap();
    let dev = |n: usize| {
        (series
            .g(n - 1)
            .ratio(&saddle_point_approx(beta, n).unwrap())
            - 1.0)
            .norm()
    };
    let (d1, d4) = (dev(10_000), dev(40_000));
    outcome(
        d1 <= 0.05 && d4 <= 0.6 * d1,
        format!(
            "deviation {d1:.3e} at n = 1e4, {d4:.3e} at n = 4e4 (ratio {:.3})",
            d4 / d1
        ),
    )
}

fn criterion_9() -> Outcome {
    let rad = forced_zero_experiment(Distribution::Rademacher, 1000, 200, 9, 0.0).unwrap();
    let ste = forced_zero_experiment(Distribution::Steinhaus, 1000, 200, 9, 0.0).unwrap();
    let escape = annulus_escape(Complex64::new(1.0, 0.0), 0.5, 2.0, 100_000).unwrap();
    outcome(
        rad.all_finite && ste.all_finite && escape.is_some(),
        format!(
            "max min-zero-modulus: Rademacher {:.4}, Steinhaus {:.4}; escape index {:?}",
            rad.max, ste.max, escape
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "S(r) leading constant", criterion_1),
        (
            2,
            "Omega_r probability and zero-free implication",
            criterion_2,
        ),
        (3, "volume formula vs Monte Carlo", criterion_3),
        (4, "covariance log-determinant", criterion_4),
        (5, "argument principle vs companion roots", criterion_5),
        (6, "first intensity E n(1) = 1", criterion_6),
        (7, "hole Monte Carlo sanity", criterion_7),
        (8, "saddle-point coefficient asymptotics", criterion_8),
        (9, "forced zeros for bounded coefficients", criterion_9),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = match (o.pass, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known unattainable)",
            (true, true) => "PASS (unexpected)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {id} [{name}]: {tag} ({:.1} s) {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if o.pass == known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcomes for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
