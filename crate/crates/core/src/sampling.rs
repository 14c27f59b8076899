//! Reproducible coefficient draws and truncation certificates.
//!
//! Every coefficient index owns an independent ChaCha8 stream keyed by the
//! master seed, so a draw can be extended or generated out of order (e.g.
//! across worker threads) without changing any value.

use std::f64::consts::{E, TAU};

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeff_models::{mid_range_end, CoefficientModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Density `π^{-1} exp(-|z|²)`.
    ComplexGaussian,
    /// Uniform on `{-1, +1}`.
    Rademacher,
    /// Uniform on the unit circle.
    Steinhaus,
}

/// One realization `φ₀, …, φ_N` of the random coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDraw {
    pub dist: Distribution,
    pub values: Vec<Complex64>,
    pub master_seed: u64,
    pub truncation_degree: usize,
}

impl CoefficientDraw {
    /// Wraps explicit coefficient values (deterministic polynomials in tests
    /// and experiments).
    pub fn from_values(dist: Distribution, values: Vec<Complex64>, master_seed: u64) -> Self {
        assert!(!values.is_empty(), "a draw holds at least φ₀");
        let truncation_degree = values.len() - 1;
        Self {
            dist,
            values,
            master_seed,
            truncation_degree,
        }
    }
}

/// The generator owned by coefficient `index` under `master_seed`.
pub fn index_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Seed of Monte Carlo sample `sample` derived from a run seed. Kept in a
/// separate key space from the coefficient streams.
pub fn sample_seed(run_seed: u64, sample: u64) -> u64 {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&run_seed.to_le_bytes());
    key[8..24].copy_from_slice(b"gaf-sample-seeds");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(sample);
    rng.next_u64()
}

/// Uniform on `[0, 1)` with 53 random bits.
#[inline]
pub(crate) fn unit_uniform(rng: &mut impl Rng) -> f64 {
    rng.random::<f64>()
}

/// Standard exponential via the inverse CDF.
#[inline]
pub(crate) fn exp1_inverse_cdf(u: f64) -> f64 {
    -(-u).ln_1p()
}

fn draw_one(dist: Distribution, master_seed: u64, index: u64) -> Complex64 {
    let mut rng = index_rng(master_seed, index);
    match dist {
        Distribution::ComplexGaussian => {
            let e = exp1_inverse_cdf(unit_uniform(&mut rng));
            let phase = TAU * unit_uniform(&mut rng);
            Complex64::from_polar(e.sqrt(), phase)
        }
        Distribution::Rademacher => {
            if rng.next_u64() >> 63 == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(-1.0, 0.0)
            }
        }
        Distribution::Steinhaus => Complex64::from_polar(1.0, TAU * unit_uniform(&mut rng)),
    }
}

/// Draws `φ₀, …, φ_{count-1}`.
pub fn draw_coeffs(dist: Distribution, count: usize, master_seed: u64) -> Result<CoefficientDraw> {
    if count == 0 {
        return Err(Error::invalid(
            "count",
            "at least one coefficient is required",
        ));
    }
    let values = (0..count as u64)
        .map(|n| draw_one(dist, master_seed, n))
        .collect();
    Ok(CoefficientDraw {
        dist,
        values,
        master_seed,
        truncation_degree: count - 1,
    })
}

/// `log P(|φ| > x)` for a standard complex Gaussian, with `x = exp(log_x)`.
fn log_tail_prob(log_x: f64) -> f64 {
    -(2.0 * log_x).exp()
}

/// Union bound `Σ_{n>N} P(|φₙ| aₙ rⁿ > eps·2^{-(n-N)})` for a truncation at
/// degree `degree`.
pub fn truncation_union_bound(model: &CoefficientModel, r: f64, eps: f64, degree: usize) -> f64 {
    let ln_r = r.ln();
    let ln_eps = eps.ln();
    let mut total = 0.0;
    let mut prev_x2 = f64::NEG_INFINITY;
    let mut n = degree + 1;
    loop {
        let k = (n - degree) as f64;
        let log_x = ln_eps - k * std::f64::consts::LN_2 - (model.log_coeff(n) + n as f64 * ln_r);
        let x2 = (2.0 * log_x).exp();
        total += log_tail_prob(log_x).exp().min(1.0);
        // Once x² ≥ 700 and grows by at least 1 per step the remainder is
        // below e^{-700}/(1 - e^{-1}).
        if x2 >= 700.0 && x2 - prev_x2 >= 1.0 {
            break;
        }
        prev_x2 = x2;
        n += 1;
    }
    total
}

/// Smallest `N ≥ ⌊e r²⌋ + 1` such that, with probability at least
/// `1 - fail_prob`, the discarded tail `Σ_{n>N} |φₙ| aₙ rⁿ` is at most `eps`
/// on `|z| ≤ r` (complex Gaussian coefficients).
pub fn truncation_degree(
    model: &CoefficientModel,
    r: f64,
    eps: f64,
    fail_prob: f64,
) -> Result<usize> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("r", format!("must be positive, got {r}")));
    }
    for (name, v) in [("eps", eps), ("fail_prob", fail_prob)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(name, format!("must lie in (0, 1), got {v}")));
        }
    }
    let mut degree = mid_range_end(r) + 1;
    while truncation_union_bound(model, r, eps, degree) > fail_prob {
        degree += 1;
    }
    Ok(degree)
}

/// `⌊e r²⌋`-based degree used when the tail is controlled deterministically by
/// `|φₙ| ≤ exp((n - e r²)/4)`: the GEF tail is then at most
/// `Σ_{n>N} exp(-(n - e r²)/4) ≤ tol`.
pub fn deterministic_tail_degree(r: f64, tol: f64) -> usize {
    let er2 = E * r * r;
    let geom = 1.0 / (1.0 - (-0.25f64).exp());
    // exp(-(N+1-er²)/4)·geom ≤ tol
    let need = er2 - 1.0 + 4.0 * (geom / tol).ln();
    (need.ceil() as usize).max(mid_range_end(r) + 1)
}
