//! Deterministic coefficient sequences `aₙ` and the function `S(r)`.
//!
//! Everything is carried in log scale: `aₙrⁿ` overflows a double near
//! `n ≈ r²` once `r` is a few tens.

use std::f64::consts::E;
use std::ops::RangeInclusive;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::numerics::{ln_gamma, CompensatedSum};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `aₙ = (n!)^{-1/2}`.
    Gef,
    /// `aₙ = 1/Γ(αn + 1)`.
    MittagLeffler { alpha: f64 },
}

/// A coefficient sequence with an append-only cache of `log aₙ`.
#[derive(Debug)]
pub struct CoefficientModel {
    kind: ModelKind,
    cache: RwLock<Vec<f64>>,
}

impl Clone for CoefficientModel {
    fn clone(&self) -> Self {
        let cache = self
            .cache
            .read()
            .expect("coefficient cache poisoned")
            .clone();
        Self {
            kind: self.kind,
            cache: RwLock::new(cache),
        }
    }
}

impl PartialEq for CoefficientModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl CoefficientModel {
    pub fn gef() -> Self {
        Self {
            kind: ModelKind::Gef,
            cache: RwLock::new(Vec::new()),
        }
    }

    pub fn mittag_leffler(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(
                "alpha",
                format!("must be positive, got {alpha}"),
            ));
        }
        Ok(Self {
            kind: ModelKind::MittagLeffler { alpha },
            cache: RwLock::new(Vec::new()),
        })
    }

    pub fn from_kind(kind: ModelKind) -> Result<Self> {
        match kind {
            ModelKind::Gef => Ok(Self::gef()),
            ModelKind::MittagLeffler { alpha } => Self::mittag_leffler(alpha),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn is_gef(&self) -> bool {
        self.kind == ModelKind::Gef
    }

    fn compute(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self.kind {
            ModelKind::Gef => -0.5 * ln_gamma(n as f64 + 1.0),
            ModelKind::MittagLeffler { alpha } => -ln_gamma(alpha * n as f64 + 1.0),
        }
    }

    /// Extends the cache so that `log aₙ` is stored for all `n < len`.
    pub fn warm(&self, len: usize) {
        if self.cache.read().expect("coefficient cache poisoned").len() >= len {
            return;
        }
        let mut cache = self.cache.write().expect("coefficient cache poisoned");
        let start = cache.len();
        cache.extend((start..len).map(|n| self.compute(n)));
    }

    /// `log aₙ`.
    pub fn log_coeff(&self, n: usize) -> f64 {
        {
            let cache = self.cache.read().expect("coefficient cache poisoned");
            if let Some(&v) = cache.get(n) {
                return v;
            }
        }
        self.warm(n + 1);
        self.cache.read().expect("coefficient cache poisoned")[n]
    }

    /// `log a₀, …, log a_{len-1}`.
    pub fn log_coeffs(&self, len: usize) -> Vec<f64> {
        self.warm(len);
        self.cache.read().expect("coefficient cache poisoned")[..len].to_vec()
    }

    /// `log(aₙ rⁿ)`.
    #[inline]
    pub fn log_term(&self, n: usize, r: f64) -> f64 {
        if n == 0 {
            return self.log_coeff(0);
        }
        self.log_coeff(n) + n as f64 * r.ln()
    }

    /// Exact `S(r)` together with its index set.
    pub fn s_of_r_detail(&self, r: f64) -> Result<SSum> {
        check_radius(r)?;
        let ln_r = r.ln();
        let mut sum = CompensatedSum::new();
        let mut count = 0usize;
        let mut last = None;
        let mut prev = f64::NEG_INFINITY;
        let mut n = 0usize;
        loop {
            let t = self.log_coeff(n) + n as f64 * ln_r;
            if t >= 0.0 {
                sum.add(t);
                count += 1;
                last = Some(n);
            } else if t < prev {
                // log aₙ is concave in n, so the sequence only decreases from here.
                break;
            }
            prev = t;
            n += 1;
        }
        Ok(SSum {
            value: 2.0 * sum.value(),
            index_count: count,
            last_index: last,
        })
    }

    /// `S(r) = 2 Σ_{aₙrⁿ ≥ 1} log(aₙrⁿ)`.
    pub fn s_of_r(&self, r: f64) -> Result<f64> {
        Ok(self.s_of_r_detail(r)?.value)
    }

    /// Leading-order asymptotics of `S(r)`.
    pub fn s_asymptotic(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(match self.kind {
            ModelKind::Gef => 0.75 * E * E * r.powi(4),
            ModelKind::MittagLeffler { alpha } => r.powf(2.0 / alpha) / (2.0 * alpha),
        })
    }

    /// Indices where `n ↦ aₙrⁿ` attains its maximum.
    pub fn peak_index_range(&self, r: f64) -> Result<RangeInclusive<usize>> {
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::Precondition(format!(
                "peak_index_range needs r ≥ 1, got {r}"
            )));
        }
        match self.kind {
            ModelKind::Gef => {
                let r2 = r * r;
                let lo = (r2 - 1.0).ceil() as usize;
                let hi = r2.floor() as usize;
                Ok(lo..=hi)
            }
            ModelKind::MittagLeffler { .. } => Ok(self.scan_peak(r)),
        }
    }

    fn scan_peak(&self, r: f64) -> RangeInclusive<usize> {
        let ln_r = r.ln();
        let mut best = f64::NEG_INFINITY;
        let mut best_lo = 0usize;
        let mut best_hi = 0usize;
        let mut n = 0usize;
        loop {
            let t = self.log_coeff(n) + n as f64 * ln_r;
            let tol = 1e-12 * best.abs().max(1.0);
            if best == f64::NEG_INFINITY || t > best + tol {
                best = t;
                best_lo = n;
                best_hi = n;
            } else if (t - best).abs() <= tol {
                best_hi = n;
            } else {
                break;
            }
            n += 1;
        }
        best_lo..=best_hi
    }
}

/// Result of the exact `S(r)` summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SSum {
    pub value: f64,
    /// Number of indices with `aₙrⁿ ≥ 1`.
    pub index_count: usize,
    pub last_index: Option<usize>,
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "r",
            format!("must be positive and finite, got {r}"),
        ))
    }
}

/// Upper bound `-(n - e r²)/2` on `log(aₙrⁿ)` for the GEF, valid once `n ≥ e r²`.
pub fn tail_log_bound(r: f64, n: usize) -> Result<f64> {
    check_radius(r)?;
    let er2 = E * r * r;
    if (n as f64) < er2 {
        return Err(Error::Precondition(format!(
            "tail bound needs n ≥ e·r² = {er2}, got n = {n}"
        )));
    }
    Ok(-(n as f64 - er2) / 2.0)
}

/// `⌊e r²⌋`, the last index of the mid range.
pub fn mid_range_end(r: f64) -> usize {
    (E * r * r).floor() as usize
}
