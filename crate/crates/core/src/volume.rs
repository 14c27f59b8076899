//! Volume of `C_k(t, s) = {x ∈ [0, t]^k : Π xⱼ ≤ s}`.
//!
//! Closed form:
//! `V_k(t, s) = t^k` if `s ≥ t^k`, otherwise `s · Σ_{m<k} L^m / m!` with
//! `L = log(t^k / s)`. All evaluation is in log scale so that `k` in the
//! thousands and `s = exp(10⁵)` are fine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff_models::mid_range_end;
use crate::numerics::{ln_gamma, LogSumExp};
use crate::sampling::{index_rng, unit_uniform};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeQuery {
    pub k: usize,
    ln_t: f64,
    ln_s: f64,
}

impl VolumeQuery {
    pub fn new(k: usize, t: f64, s: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("t", format!("must be positive, got {t}")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid("s", format!("must be positive, got {s}")));
        }
        Self::from_logs(k, t.ln(), s.ln())
    }

    /// Query given `log t` and `log s`, for parameters outside double range.
    pub fn from_logs(k: usize, ln_t: f64, ln_s: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k", "must be at least 1"));
        }
        if !(ln_t.is_finite() && ln_s.is_finite()) {
            return Err(Error::invalid("t, s", "logarithms must be finite"));
        }
        Ok(Self { k, ln_t, ln_s })
    }

    pub fn t(&self) -> f64 {
        self.ln_t.exp()
    }

    pub fn s(&self) -> f64 {
        self.ln_s.exp()
    }

    pub fn ln_t(&self) -> f64 {
        self.ln_t
    }

    pub fn ln_s(&self) -> f64 {
        self.ln_s
    }

    /// `log(t^k / s)`.
    pub fn log_ratio(&self) -> f64 {
        self.k as f64 * self.ln_t - self.ln_s
    }
}

/// `log V_k(t, s)`.
pub fn log_volume_exact(q: &VolumeQuery) -> f64 {
    let l = q.log_ratio();
    if l <= 0.0 {
        return q.k as f64 * q.ln_t;
    }
    let ln_l = l.ln();
    let mut acc = LogSumExp::new();
    for m in 0..q.k {
        acc.add(m as f64 * ln_l - ln_gamma(m as f64 + 1.0));
    }
    q.ln_s + acc.value()
}

pub fn volume_exact(q: &VolumeQuery) -> f64 {
    log_volume_exact(q).exp()
}

/// `log[s/(k-1)! · log^k(t^k/s)]`, valid when `log(t^k/s) ≥ k`.
pub fn log_volume_upper_bound(q: &VolumeQuery) -> Result<f64> {
    let l = q.log_ratio();
    if l < q.k as f64 {
        return Err(Error::VolumeHypothesis {
            k: q.k,
            log_ratio: l,
        });
    }
    Ok(q.ln_s - ln_gamma(q.k as f64) + q.k as f64 * l.ln())
}

pub fn volume_upper_bound(q: &VolumeQuery) -> Result<f64> {
    Ok(log_volume_upper_bound(q)?.exp())
}

/// Hit-or-miss estimate of `V_k(t, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub samples: u64,
}

const MC_CHUNK: u64 = 1 << 16;

/// Uniform points in `[0, t]^k`, counting those with `Π xⱼ ≤ s`. The count is
/// accumulated over fixed chunks with their own streams, so the result does
/// not depend on the worker count.
pub fn volume_mc(q: &VolumeQuery, samples: u64, seed: u64) -> Result<VolumeEstimate> {
    if q.k > 8 {
        return Err(Error::Precondition(format!(
            "hit-or-miss volume is limited to k ≤ 8, got k = {}",
            q.k
        )));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "must be positive"));
    }
    // Π xⱼ ≤ s  ⇔  Π uⱼ ≤ s / t^k with uⱼ uniform on [0, 1).
    let threshold = (-q.log_ratio()).exp();
    let hits = if threshold >= 1.0 {
        samples
    } else {
        let chunks = samples.div_ceil(MC_CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = index_rng(seed, c);
                let len = MC_CHUNK.min(samples - c * MC_CHUNK);
                (0..len)
                    .filter(|_| {
                        let prod: f64 = (0..q.k).map(|_| unit_uniform(&mut rng)).product();
                        prod <= threshold
                    })
                    .count() as u64
            })
            .sum()
    };
    let cube = (q.k as f64 * q.ln_t).exp();
    let n = samples as f64;
    let p = hits as f64 / n;
    let std_err = cube * (p * (1.0 - p) / n).sqrt();
    let (lo, hi) = crate::numerics::wilson_interval(hits, samples, crate::numerics::Z_975);
    Ok(VolumeEstimate {
        value: cube * p,
        std_err,
        ci_low: cube * lo,
        ci_high: cube * hi,
        hits,
        samples,
    })
}

/// Bound on `log I'` from the volume estimate with
/// `s = exp(4N log r + C δ^{-2} r²)`, `t = exp(2r²)`, `N = ⌊e r²⌋`, set next
/// to the target `C (log r + δ^{-2}) r²`. `C` is a free parameter.
///
/// No lower bound on `δ` is enforced; the intended range is `δ ≥ r^{-2+ε}`,
/// which covers `δ = r^{-4/5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryAnnotation {
    pub r: f64,
    pub delta: f64,
    pub c: f64,
    pub n: usize,
    pub ln_s: f64,
    pub ln_t: f64,
    /// `log(t^N / s)`; the volume bound needs this to be at least `N`.
    pub log_ratio: f64,
    pub hypothesis_holds: bool,
    /// `log V_N(t, s)` from the closed form.
    pub log_volume_exact: f64,
    /// `N log 2 + log s + log V_N(t, s)` with the upper bound on `V_N`.
    pub log_i_prime_bound: Option<f64>,
    /// `C (log r + δ^{-2}) r²`.
    pub corollary_rhs: f64,
}

pub fn corollary_annotation(r: f64, delta: f64, c: f64) -> Result<CorollaryAnnotation> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::invalid("r", format!("must exceed 1, got {r}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(
            "delta",
            format!("must lie in (0, 1), got {delta}"),
        ));
    }
    let n = mid_range_end(r);
    let r2 = r * r;
    let ln_s = 4.0 * n as f64 * r.ln() + c * r2 / (delta * delta);
    let ln_t = 2.0 * r2;
    let q = VolumeQuery::from_logs(n, ln_t, ln_s)?;
    let bound = log_volume_upper_bound(&q).ok();
    Ok(CorollaryAnnotation {
        r,
        delta,
        c,
        n,
        ln_s,
        ln_t,
        log_ratio: q.log_ratio(),
        hypothesis_holds: bound.is_some(),
        log_volume_exact: log_volume_exact(&q),
        log_i_prime_bound: bound.map(|b| n as f64 * std::f64::consts::LN_2 + ln_s + b),
        corollary_rhs: c * (r.ln() + 1.0 / (delta * delta)) * r2,
    })
}
