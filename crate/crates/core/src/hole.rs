//! Hole probability `P_H(r) = P(f ≠ 0 on |z| ≤ r)`: direct Monte Carlo, the
//! exact probability of the coefficient event `Ω_r`, and sampling conditioned
//! on `Ω_r`.
//!
//! `Ω_r` asks for
//! (i) `|φ₀| ≥ 2r`,
//! (ii) `|φₙ| ≤ (3r·aₙrⁿ)^{-1}` for `1 ≤ n ≤ ⌊e r²⌋`,
//! (iii) `|φₙ| ≤ exp((n - e r²)/4)` for `n > ⌊e r²⌋`.

use std::f64::consts::{E, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff_models::{mid_range_end, CoefficientModel};
use crate::numerics::{ln_one_minus_exp_neg_from_log, wilson_interval, CompensatedSum, Z_975};
use crate::sampling::{
    deterministic_tail_degree, draw_coeffs, exp1_inverse_cdf, index_rng, sample_seed,
    truncation_degree, unit_uniform, CoefficientDraw, Distribution,
};
use crate::zeros::{count_zeros_disk, count_zeros_disk_with, TruncatedSeries, ZeroCountResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoleMethod {
    DirectMc,
    OmegaBound,
    ConditionedCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleEstimate {
    pub radius: f64,
    pub method: HoleMethod,
    /// A probability, or its logarithm when `log_scale` is set.
    pub point_value: f64,
    pub log_scale: bool,
    /// 95% Wilson interval (direct Monte Carlo only).
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Samples whose zero count could not be resolved and were left out.
    pub failed_samples: usize,
    pub truncation_degree: usize,
}

/// Zero count with up to two further radius perturbations after the default one.
fn robust_count(ts: &TruncatedSeries, r: f64) -> Result<ZeroCountResult> {
    match count_zeros_disk(ts, r) {
        Err(Error::BoundaryZero { .. }) => match count_zeros_disk_with(ts, r, 1e-7) {
            Err(Error::BoundaryZero { .. }) => count_zeros_disk_with(ts, r, 1e-5),
            other => other,
        },
        other => other,
    }
}

/// Fraction of complex Gaussian draws with no zero in `|z| < r`.
///
/// Sample `i` uses the coefficient streams of `sample_seed(seed, i)`, so runs
/// at different radii with the same seed share their random numbers.
pub fn hole_mc(
    model: &CoefficientModel,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<HoleEstimate> {
    if samples < 100 {
        return Err(Error::invalid(
            "samples",
            format!("must be at least 100, got {samples}"),
        ));
    }
    let degree = truncation_degree(model, r, 1e-9, 1e-6 / samples as f64)?;
    model.warm(degree + 1);
    let (hits, failed) = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(u64, u64)> {
            let draw = draw_coeffs(
                Distribution::ComplexGaussian,
                degree + 1,
                sample_seed(seed, i as u64),
            )?;
            let ts = TruncatedSeries::new(model, &draw)?;
            match robust_count(&ts, r) {
                Ok(c) => Ok((u64::from(c.count == 0), 0)),
                Err(Error::BoundaryZero { .. }) => Ok((0, 1)),
                Err(e) => Err(e),
            }
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let failed = failed as usize;
    if failed * 1000 > samples {
        return Err(Error::TooManyFailures { failed, samples });
    }
    let used = (samples - failed) as u64;
    let (lo, hi) = wilson_interval(hits, used, Z_975);
    Ok(HoleEstimate {
        radius: r,
        method: HoleMethod::DirectMc,
        point_value: hits as f64 / used as f64,
        log_scale: false,
        ci_low: Some(lo),
        ci_high: Some(hi),
        samples,
        seed,
        failed_samples: failed,
        truncation_degree: degree,
    })
}

fn check_omega_radius(r: f64) -> Result<()> {
    if r.is_finite() && r >= 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "the event Ω_r is used for r ≥ 1, got r = {r}"
        )))
    }
}

/// `log λₙ² = -2 log(3r·aₙrⁿ)`, the squared clause (ii) radius.
fn log_lambda_sq(gef: &CoefficientModel, r: f64, n: usize) -> f64 {
    -2.0 * ((3.0 * r).ln() + gef.log_term(n, r))
}

/// `log μₙ² = (n - e r²)/2`, the squared clause (iii) radius.
fn log_mu_sq(r: f64, n: usize) -> f64 {
    (n as f64 - E * r * r) / 2.0
}

/// The three clause contributions to `log P(Ω_r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaLogProb {
    pub clause_i: f64,
    pub clause_ii: f64,
    pub clause_iii: f64,
    /// Last index included in the clause (iii) sum.
    pub tail_cut: usize,
}

impl OmegaLogProb {
    pub fn total(&self) -> f64 {
        self.clause_i + self.clause_ii + self.clause_iii
    }
}

pub fn omega_log_prob_parts(r: f64) -> Result<OmegaLogProb> {
    check_omega_radius(r)?;
    let gef = CoefficientModel::gef();
    let mid = mid_range_end(r);
    let clause_ii: CompensatedSum = (1..=mid)
        .map(|n| ln_one_minus_exp_neg_from_log(log_lambda_sq(&gef, r, n)))
        .collect();
    let mut clause_iii = CompensatedSum::new();
    let mut n = mid + 1;
    loop {
        clause_iii.add(ln_one_minus_exp_neg_from_log(log_mu_sq(r, n)));
        // For μ² > 1 each later term is ≥ -2e^{-μ²} and μ² grows by a factor
        // e^{1/2}, so the remainder is below twice its first term.
        let next = log_mu_sq(r, n + 1).exp();
        if next > 1.0 && 4.0 * (-next).exp() < 1e-15 {
            break;
        }
        n += 1;
    }
    Ok(OmegaLogProb {
        clause_i: -4.0 * r * r,
        clause_ii: clause_ii.value(),
        clause_iii: clause_iii.value(),
        tail_cut: n,
    })
}

/// `log P(Ω_r)`, exact up to the summation tolerance.
pub fn omega_log_prob(r: f64) -> Result<f64> {
    Ok(omega_log_prob_parts(r)?.total())
}

/// `Σ_{j≥0} e^{-j/4}`: the first clause (iii) index has `n - e r² ∈ (0, 1]`.
pub const TAIL_GEOMETRIC: f64 = 4.520_811_664_187_799;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaCertificate {
    pub radius: f64,
    pub log_prob: f64,
    /// Lower bound for `|f|` on `|z| ≤ r` under `Ω_r`.
    pub margin: f64,
    pub valid: bool,
    pub tail_cut: usize,
}

/// Under `Ω_r` and `|z| ≤ r`:
/// `|f(z)| ≥ 2r - ⌊e r²⌋/(3r) - Σ_{n>⌊e r²⌋} e^{-(n - e r²)/4}`.
/// The certificate uses the bounds `⌊e r²⌋ ≤ e r²` and
/// `Σ_{n>⌊e r²⌋} e^{-(n - e r²)/4} ≤ Σ_{j≥0} e^{-j/4}`, giving the margin
/// `(2 - e/3) r - 1/(1 - e^{-1/4})`, which is increasing in `r`.
pub fn omega_certificate(r: f64) -> Result<OmegaCertificate> {
    let parts = omega_log_prob_parts(r)?;
    let margin = (2.0 - E / 3.0) * r - TAIL_GEOMETRIC;
    Ok(OmegaCertificate {
        radius: r,
        log_prob: parts.total(),
        margin,
        valid: margin > 0.0,
        tail_cut: parts.tail_cut,
    })
}

/// `P_H(r) ≥ P(Ω_r)` as a log-scale estimate (certified only when the
/// certificate is valid).
pub fn omega_bound_estimate(r: f64) -> Result<HoleEstimate> {
    let cert = omega_certificate(r)?;
    Ok(HoleEstimate {
        radius: r,
        method: HoleMethod::OmegaBound,
        point_value: cert.log_prob,
        log_scale: true,
        ci_low: None,
        ci_high: None,
        samples: 0,
        seed: 0,
        failed_samples: 0,
        truncation_degree: cert.tail_cut,
    })
}

/// Standard exponential conditioned on `[0, b]`, by inverse CDF.
fn truncated_exp(u: f64, b: f64) -> f64 {
    (-(u * (-b).exp_m1()).ln_1p()).min(b)
}

/// One draw of `φ₀, …, φ_degree` conditioned on `Ω_r`, without rejection.
pub fn omega_conditioned_draw(r: f64, degree: usize, seed: u64) -> Result<CoefficientDraw> {
    check_omega_radius(r)?;
    let gef = CoefficientModel::gef();
    let mid = mid_range_end(r);
    let values = (0..=degree)
        .map(|n| {
            let mut rng = index_rng(seed, n as u64);
            let u = unit_uniform(&mut rng);
            let e = if n == 0 {
                4.0 * r * r + exp1_inverse_cdf(u)
            } else if n <= mid {
                truncated_exp(u, log_lambda_sq(&gef, r, n).exp())
            } else {
                truncated_exp(u, log_mu_sq(r, n).exp())
            };
            Complex64::from_polar(e.sqrt(), TAU * unit_uniform(&mut rng))
        })
        .collect();
    Ok(CoefficientDraw::from_values(
        Distribution::ComplexGaussian,
        values,
        seed,
    ))
}

/// Whether every coefficient of `draw` satisfies its `Ω_r` clause.
pub fn omega_clauses_hold(draw: &CoefficientDraw, r: f64) -> bool {
    let gef = CoefficientModel::gef();
    let mid = mid_range_end(r);
    draw.values.iter().enumerate().all(|(n, phi)| {
        let m2 = phi.norm_sqr();
        if n == 0 {
            m2 >= 4.0 * r * r
        } else if n <= mid {
            m2.ln() <= log_lambda_sq(&gef, r, n) || m2 == 0.0
        } else {
            m2.ln() <= log_mu_sq(r, n) || m2 == 0.0
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionedOutcome {
    pub radius: f64,
    pub samples: usize,
    pub zero_free: usize,
    pub fraction: f64,
    pub certificate_valid: bool,
    pub truncation_degree: usize,
    pub seed: u64,
}

impl ConditionedOutcome {
    pub fn estimate(&self) -> HoleEstimate {
        HoleEstimate {
            radius: self.radius,
            method: HoleMethod::ConditionedCheck,
            point_value: self.fraction,
            log_scale: false,
            ci_low: None,
            ci_high: None,
            samples: self.samples,
            seed: self.seed,
            failed_samples: 0,
            truncation_degree: self.truncation_degree,
        }
    }
}

/// Zero-free fraction among draws conditioned on `Ω_r`. The truncation degree
/// makes the discarded clause (iii) tail at most `1e-12` on `|z| ≤ r`.
pub fn omega_conditioned_sample(
    model: &CoefficientModel,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<ConditionedOutcome> {
    if !model.is_gef() {
        return Err(Error::Precondition(
            "the event Ω_r is defined for the GEF model".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "must be positive"));
    }
    let cert = omega_certificate(r)?;
    let degree = deterministic_tail_degree(r, 1e-12);
    model.warm(degree + 1);
    let zero_free = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<usize> {
            let draw = omega_conditioned_draw(r, degree, sample_seed(seed, i as u64))?;
            let ts = TruncatedSeries::new(model, &draw)?;
            Ok(usize::from(robust_count(&ts, r)?.count == 0))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(ConditionedOutcome {
        radius: r,
        samples,
        zero_free,
        fraction: zero_free as f64 / samples as f64,
        certificate_valid: cert.valid,
        truncation_degree: degree,
        seed,
    })
}

/// Above this value of `S(r)` the hole probability is out of Monte Carlo reach.
pub const MC_S_CUTOFF: f64 = 25.0;

/// Both sides of the hole-probability asymptotics at one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleBracket {
    pub r: f64,
    pub s_of_r: f64,
    pub s_asymptotic: f64,
    /// `None` outside the `Ω_r` range (`r < 1` or a non-GEF model).
    pub omega_log_prob: Option<f64>,
    pub certificate_valid: bool,
    pub certificate_margin: Option<f64>,
    /// "certified" or "uncertified".
    pub bound_status: String,
    pub mc: Option<HoleEstimate>,
    pub mc_skipped: bool,
    /// `P(Ω_r) ≤ ci_high`, when both sides are available and certified.
    pub bound_consistent: Option<bool>,
}

pub fn hole_bracket_report(
    model: &CoefficientModel,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<HoleBracket> {
    let s = model.s_of_r(r)?;
    let s_asym = model.s_asymptotic(r)?;
    let cert = if model.is_gef() && r >= 1.0 {
        Some(omega_certificate(r)?)
    } else {
        None
    };
    let mc_skipped = s > MC_S_CUTOFF;
    let mc = if mc_skipped {
        None
    } else {
        Some(hole_mc(model, r, samples, seed)?)
    };
    let valid = cert.is_some_and(|c| c.valid);
    let bound_consistent = match (cert, mc) {
        (Some(c), Some(m)) if c.valid => m.ci_high.map(|hi| c.log_prob.exp() <= hi),
        _ => None,
    };
    Ok(HoleBracket {
        r,
        s_of_r: s,
        s_asymptotic: s_asym,
        omega_log_prob: cert.map(|c| c.log_prob),
        certificate_valid: valid,
        certificate_margin: cert.map(|c| c.margin),
        bound_status: if valid { "certified" } else { "uncertified" }.to_string(),
        mc,
        mc_skipped,
        bound_consistent,
    })
}
