//! Taylor coefficients of `exp(z²/2 + βz) = Σ gₙ(β) zⁿ`, their saddle-point
//! approximation, and the forced-zero experiments for bounded coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff_models::CoefficientModel;
use crate::numerics::{ln_gamma, quantile_sorted};
use crate::sampling::{draw_coeffs, sample_seed, CoefficientDraw, Distribution};
use crate::zeros::{min_zero_modulus, rotate, TruncatedSeries};
use crate::{Error, Result};

/// A complex number `mantissa · e^{log_scale}` for magnitudes outside double range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl ScaledComplex {
    pub fn ln_norm(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// The plain value; overflows or underflows when the scale is extreme.
    pub fn to_complex(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    /// `self / other` as an ordinary complex number.
    pub fn ratio(&self, other: &ScaledComplex) -> Complex64 {
        self.mantissa / other.mantissa * (self.log_scale - other.log_scale).exp()
    }
}

const RESCALE_AT: f64 = 1e100;

/// `hₙ = gₙ(β)·√(n!)` for `n ≤ nmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteSeries {
    beta: Complex64,
    mantissa: Vec<Complex64>,
    log_scale: Vec<f64>,
}

impl HermiteSeries {
    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn nmax(&self) -> usize {
        self.mantissa.len() - 1
    }

    pub fn h(&self, n: usize) -> ScaledComplex {
        ScaledComplex {
            mantissa: self.mantissa[n],
            log_scale: self.log_scale[n],
        }
    }

    /// `log |hₙ|`.
    pub fn ln_abs_h(&self, n: usize) -> f64 {
        self.h(n).ln_norm()
    }

    /// `gₙ(β) = hₙ / √(n!)`.
    pub fn g(&self, n: usize) -> ScaledComplex {
        let mut v = self.h(n);
        v.log_scale -= 0.5 * ln_gamma(n as f64 + 1.0);
        v
    }
}

/// Runs `h₀ = 1`, `h₁ = β`, `h_{n+1} = β hₙ/√(n+1) + h_{n-1} √(n/(n+1))`.
pub fn hermite_coeffs(beta: Complex64, nmax: usize) -> Result<HermiteSeries> {
    if nmax < 2 {
        return Err(Error::invalid(
            "nmax",
            format!("must be at least 2, got {nmax}"),
        ));
    }
    if !(beta.re.is_finite() && beta.im.is_finite()) {
        return Err(Error::invalid("beta", "must be finite"));
    }
    let mut mantissa = Vec::with_capacity(nmax + 1);
    let mut log_scale = Vec::with_capacity(nmax + 1);
    let mut scale = 0.0;
    let mut prev = Complex64::new(1.0, 0.0);
    let mut cur = beta;
    mantissa.extend([prev, cur]);
    log_scale.extend([0.0, 0.0]);
    for n in 1..nmax {
        let nf = n as f64;
        let next = beta * cur / (nf + 1.0).sqrt() + prev * (nf / (nf + 1.0)).sqrt();
        prev = cur;
        cur = next;
        if cur.norm() > RESCALE_AT {
            prev /= RESCALE_AT;
            cur /= RESCALE_AT;
            scale += RESCALE_AT.ln();
        }
        mantissa.push(cur);
        log_scale.push(scale);
    }
    Ok(HermiteSeries {
        beta,
        mantissa,
        log_scale,
    })
}

/// Saddle-point approximation of `g_{n-1}(β)`:
/// `(4π)^{-1/2} n^{-n/2} e^{n/2 - β²/4} (e^{β√n} + (-1)ⁿ e^{-β√n})`.
pub fn saddle_point_approx(beta: Complex64, n: usize) -> Result<ScaledComplex> {
    if beta == Complex64::new(0.0, 0.0) {
        return Err(Error::invalid("beta", "the approximation needs beta != 0"));
    }
    if n < 16 {
        return Err(Error::invalid("n", format!("must be at least 16, got {n}")));
    }
    let nf = n as f64;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let w = beta * nf.sqrt();
    // Factor out the dominant exponential.
    let (lead, rest) = if w.re >= 0.0 {
        (w, Complex64::new(1.0, 0.0) + sign * (-2.0 * w).exp())
    } else {
        (
            -w,
            sign * (Complex64::new(1.0, 0.0) + sign * (2.0 * w).exp()),
        )
    };
    let q = beta * beta / 4.0;
    let phase = Complex64::from_polar(1.0, lead.im - q.im);
    Ok(ScaledComplex {
        mantissa: phase * rest,
        log_scale: -0.5 * (4.0 * PI).ln() - 0.5 * nf * nf.ln() + 0.5 * nf + lead.re - q.re,
    })
}

/// Smallest `n ≤ nmax` with `|hₙ| ∉ [c1, c2]`.
pub fn annulus_escape(beta: Complex64, c1: f64, c2: f64, nmax: usize) -> Result<Option<usize>> {
    if !(c1 > 0.0 && c1 <= c2 && c2.is_finite()) {
        return Err(Error::invalid(
            "c1, c2",
            format!("need 0 < c1 ≤ c2, got {c1}, {c2}"),
        ));
    }
    let series = hermite_coeffs(beta, nmax.max(2))?;
    let (lo, hi) = (c1.ln(), c2.ln());
    Ok((0..=nmax).find(|&n| {
        let l = series.ln_abs_h(n);
        !(lo..=hi).contains(&l)
    }))
}

/// Summary of the smallest root moduli over many bounded-coefficient draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcedZeroStats {
    pub dist: Distribution,
    pub samples: usize,
    pub degree: usize,
    pub seed: u64,
    pub rotation: f64,
    pub max: f64,
    pub mean: f64,
    /// `(level, value)` pairs.
    pub quantiles: Vec<(f64, f64)>,
    pub all_finite: bool,
    /// Per-sample minimum root modulus, sample 0 being the all-ones draw.
    pub values: Vec<f64>,
}

pub const FORCED_ZERO_QUANTILES: [f64; 6] = [0.1, 0.25, 0.5, 0.75, 0.9, 0.99];

/// For each draw of `φ₀, …, φ_degree` computes the smallest root modulus of
/// `Σ φₙ zⁿ/√(n!)` (after `φₙ ↦ φₙ e^{inθ}` with `θ = rotation`). Sample 0 is
/// the all-ones draw.
pub fn forced_zero_experiment(
    dist: Distribution,
    samples: usize,
    degree: usize,
    seed: u64,
    rotation: f64,
) -> Result<ForcedZeroStats> {
    if dist == Distribution::ComplexGaussian {
        return Err(Error::invalid(
            "dist",
            "forced-zero experiments use Rademacher or Steinhaus",
        ));
    }
    if degree < 50 {
        return Err(Error::invalid(
            "degree",
            format!("must be at least 50, got {degree}"),
        ));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "must be positive"));
    }
    let gef = CoefficientModel::gef();
    gef.warm(degree + 1);
    let values = (0..samples)
        .into_par_iter()
        .map(|i| {
            let draw = if i == 0 {
                CoefficientDraw::from_values(dist, vec![Complex64::new(1.0, 0.0); degree + 1], seed)
            } else {
                draw_coeffs(dist, degree + 1, sample_seed(seed, i as u64))?
            };
            let ts = TruncatedSeries::new(&gef, &draw)?;
            let ts = if rotation == 0.0 {
                ts
            } else {
                rotate(&ts, rotation)
            };
            min_zero_modulus(&ts)
        })
        .collect::<Result<Vec<f64>>>()?;
    let all_finite = values.iter().all(|v| v.is_finite());
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = FORCED_ZERO_QUANTILES
        .iter()
        .map(|&q| (q, quantile_sorted(&sorted, q)))
        .collect();
    Ok(ForcedZeroStats {
        dist,
        samples,
        degree,
        seed,
        rotation,
        max: sorted[sorted.len() - 1],
        mean: values.iter().sum::<f64>() / samples as f64,
        quantiles,
        all_finite,
        values,
    })
}
