//! Covariance of `(f(z₀), …, f(z_{N-1}))` for the GEF on the circle
//! `|z| = κr`, `zⱼ = κr·e^{2πij/N}`: `Σᵢⱼ = exp(zᵢ z̄ⱼ)`.
//!
//! Because `zᵢ z̄ⱼ = x·ω^{i-j}` with `x = (κr)²`, `Σ` is circulant and its
//! eigenvalues are `λₘ = N Σ_{n ≡ m (mod N)} xⁿ/n!`. The dense route
//! factorizes the Taylor–Vandermonde generator `V` (`Σ = V V*`) instead.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeff_models::{mid_range_end, CoefficientModel};
use crate::numerics::{ln_gamma, CompensatedSum, LogSumExp};
use crate::{Error, Result};

/// Grid parameters: radius `r`, shrink factor `κ`, and number of points `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub r: f64,
    pub kappa: f64,
    pub n: usize,
    /// `δ` with `κ = 1 - δ^{1/2}` when the spec came from [`CovarianceSpec::default_for`].
    pub delta: Option<f64>,
}

impl CovarianceSpec {
    pub fn new(r: f64, kappa: f64, n: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid("r", format!("must be positive, got {r}")));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::invalid(
                "kappa",
                format!("must lie in (0, 1), got {kappa}"),
            ));
        }
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        Ok(Self {
            r,
            kappa,
            n,
            delta: None,
        })
    }

    /// `δ = r^{-4/5}`, `κ = 1 - δ^{1/2}`, `N = ⌊e r²⌋`. Needs `r > 1`.
    pub fn default_for(r: f64) -> Result<Self> {
        if !(r > 1.0 && r.is_finite()) {
            return Err(Error::invalid(
                "r",
                format!("default grid needs r > 1, got {r}"),
            ));
        }
        let delta = r.powf(-0.8);
        let mut spec = Self::new(r, 1.0 - delta.sqrt(), mid_range_end(r).max(1))?;
        spec.delta = Some(delta);
        Ok(spec)
    }

    /// `κr`.
    pub fn radius(&self) -> f64 {
        self.kappa * self.r
    }

    /// `x = (κr)²`.
    pub fn x(&self) -> f64 {
        self.radius() * self.radius()
    }
}

pub fn grid_points(spec: &CovarianceSpec) -> Vec<Complex64> {
    let rho = spec.radius();
    (0..spec.n)
        .map(|j| Complex64::from_polar(rho, TAU * j as f64 / spec.n as f64))
        .collect()
}

/// `log n!`-scale term `n log x - log n!`.
#[inline]
fn log_series_term(n: usize, ln_x: f64) -> f64 {
    n as f64 * ln_x - ln_gamma(n as f64 + 1.0)
}

/// `log λₘ` for `m = 0, …, N-1`.
pub fn circulant_log_eigenvalues(spec: &CovarianceSpec) -> Vec<f64> {
    let x = spec.x();
    let ln_x = x.ln();
    let ln_n = (spec.n as f64).ln();
    // Terms below 1e-18 of the running sum are dropped.
    let cutoff = 18.0 * std::f64::consts::LN_10;
    (0..spec.n)
        .map(|m| {
            let mut acc = LogSumExp::new();
            let mut n = m;
            loop {
                let t = log_series_term(n, ln_x);
                acc.add(t);
                if n as f64 > x && t < acc.value() - cutoff {
                    break;
                }
                n += spec.n;
            }
            ln_n + acc.value()
        })
        .collect()
}

/// `log det Σ = Σₘ log λₘ`.
pub fn logdet_circulant(spec: &CovarianceSpec) -> f64 {
    circulant_log_eigenvalues(spec)
        .into_iter()
        .collect::<CompensatedSum>()
        .value()
}

fn check_dense_feasible(spec: &CovarianceSpec) -> Result<()> {
    if spec.n > 64 || spec.x() > 300.0 {
        return Err(Error::Precondition(format!(
            "dense log-determinant needs N ≤ 64 and (κr)² ≤ 300, got N = {}, (κr)² = {}",
            spec.n,
            spec.x()
        )));
    }
    Ok(())
}

/// Dense `log det Σ` from the Cholesky factor of `Σ`, obtained by Householder
/// QR of the explicit generator `V*` (`V*_{n,j} = aₙ z̄ⱼⁿ`, rows sorted by
/// decreasing norm): with `V* = QR`, `Σ = V V* = R* R`.
pub fn logdet_dense(spec: &CovarianceSpec) -> Result<f64> {
    check_dense_feasible(spec)?;
    let n = spec.n;
    let rho = spec.radius();
    let x = spec.x();
    let ln_x = x.ln();
    // Keep rows until N consecutive ones past the peak each sit below e^{-46}
    // of the largest kept row in their residue class.
    let mut class_max = vec![f64::NEG_INFINITY; n];
    let mut quiet = 0usize;
    let mut k = 0usize;
    while quiet < n {
        let t = log_series_term(k, ln_x);
        let m = k % n;
        if k as f64 > x && t < class_max[m] - 46.0 {
            quiet += 1;
        } else {
            quiet = 0;
        }
        class_max[m] = class_max[m].max(t);
        k += 1;
    }
    let rows = k - n;
    let gef = CoefficientModel::gef();
    let log_a = gef.log_coeffs(rows);
    let mut order: Vec<usize> = (0..rows).collect();
    let row_log_norm = |k: usize| log_a[k] + if k == 0 { 0.0 } else { k as f64 * rho.ln() };
    order.sort_by(|&a, &b| row_log_norm(b).total_cmp(&row_log_norm(a)));
    let generator = DMatrix::from_fn(rows, n, |i, j| {
        let k = order[i];
        let theta = -TAU * ((k * j) % n) as f64 / n as f64;
        Complex64::from_polar(row_log_norm(k).exp(), theta)
    });
    let r = generator.qr().r();
    let mut sum = CompensatedSum::new();
    for i in 0..n {
        let pivot = r[(i, i)].norm_sqr();
        if !(pivot > 0.0 && pivot.is_finite()) {
            return Err(Error::NonPositivePivot {
                index: i,
                value: pivot,
            });
        }
        sum.add(pivot.ln());
    }
    Ok(sum.value())
}

/// `Σ` as an explicit dense matrix.
pub fn covariance_matrix(spec: &CovarianceSpec) -> DMatrix<Complex64> {
    let z = grid_points(spec);
    DMatrix::from_fn(spec.n, spec.n, |i, j| (z[i] * z[j].conj()).exp())
}

/// `log det Σ` by Cholesky factorization of the explicitly formed matrix.
/// Only meaningful while `Σ` is well conditioned; reports the first
/// nonpositive pivot otherwise.
pub fn logdet_dense_explicit(spec: &CovarianceSpec) -> Result<f64> {
    check_dense_feasible(spec)?;
    let a = covariance_matrix(spec);
    let n = spec.n;
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    let mut sum = CompensatedSum::new();
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::NonPositivePivot { index: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        sum.add(d.ln());
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(sum.value())
}

/// `log(Π₁Π₂Π₃)` for the principal minor on columns `1..=N` of `V`:
/// `Σ_{n=1}^{N} 2 log aₙ + 2N log(κr) + N(N-1) log(κr) + N log N`.
pub fn vandermonde_lower_bound(spec: &CovarianceSpec) -> f64 {
    let n = spec.n;
    let nf = n as f64;
    let ln_rho = spec.radius().ln();
    let gef = CoefficientModel::gef();
    let pi1: CompensatedSum = (1..=n).map(|k| 2.0 * gef.log_coeff(k)).collect();
    pi1.value() + 2.0 * nf * ln_rho + nf * (nf - 1.0) * ln_rho + nf * nf.ln()
}

/// The same minor after collecting the powers of `κr`:
/// `Σ_{n=1}^{N} 2 log(aₙ (κr)ⁿ) + N log N`.
pub fn minor_log_expression(spec: &CovarianceSpec) -> f64 {
    let gef = CoefficientModel::gef();
    let rho = spec.radius();
    let s: CompensatedSum = (1..=spec.n).map(|k| 2.0 * gef.log_term(k, rho)).collect();
    s.value() + spec.n as f64 * (spec.n as f64).ln()
}

/// All determinant quantities for one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeterminantReport {
    pub spec: CovarianceSpec,
    pub logdet_circulant: f64,
    pub logdet_dense: Option<f64>,
    pub vandermonde_lower_bound: f64,
    /// `S(κr)`.
    pub s_kappa_r: f64,
    /// `vandermonde_lower_bound - S(κr)`.
    pub minor_gap_to_s: f64,
    /// `logdet_circulant - S(κr)`.
    pub logdet_gap_to_s: f64,
    pub min_log_eigenvalue: f64,
}

pub fn determinant_report(spec: &CovarianceSpec) -> Result<DeterminantReport> {
    let logdet = logdet_circulant(spec);
    let bound = vandermonde_lower_bound(spec);
    let s = CoefficientModel::gef().s_of_r(spec.radius())?;
    let dense = match logdet_dense(spec) {
        Ok(v) => Some(v),
        Err(Error::Precondition(_)) => None,
        Err(e) => return Err(e),
    };
    let min_log_eigenvalue = circulant_log_eigenvalues(spec)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(DeterminantReport {
        spec: *spec,
        logdet_circulant: logdet,
        logdet_dense: dense,
        vandermonde_lower_bound: bound,
        s_kappa_r: s,
        minor_gap_to_s: bound - s,
        logdet_gap_to_s: logdet - s,
        min_log_eigenvalue,
    })
}

/// The product identity `Π_{j≥1} (z₀ - zⱼ) = N (κr)^{N-1}`, evaluated directly.
pub fn root_of_unity_product(spec: &CovarianceSpec) -> Complex64 {
    let z = grid_points(spec);
    z[1..]
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, zj| acc * (z[0] - zj))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let spec = CovarianceSpec::new(1.0, 0.5, 4).unwrap();
        let z = grid_points(&spec);
        let want = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, -0.5),
        ];
        for (a, b) in z.iter().zip(want) {
            assert!((a - b).norm() < 1e-16);
        }
        assert_eq!(z[0].im, 0.0);
        let spec = CovarianceSpec::default_for(2.0).unwrap();
        assert!(grid_points(&spec)
            .iter()
            .all(|p| (p.norm() - spec.radius()).abs() <= 1e-15));
    }

    #[test]
    fn root_product_identity() {
        for (r, k, n) in [(1.0, 0.5, 4), (2.0, 0.8, 10), (1.5, 0.3, 7)] {
            let spec = CovarianceSpec::new(r, k, n).unwrap();
            let p = root_of_unity_product(&spec);
            let want = n as f64 * spec.radius().powi(n as i32 - 1);
            assert!((p - Complex64::new(want, 0.0)).norm() <= 1e-12 * want);
        }
    }

    #[test]
    fn one_by_one() {
        let spec = CovarianceSpec::new(1.3, 0.7, 1).unwrap();
        assert!((logdet_circulant(&spec) - spec.x()).abs() < 1e-14);
        assert!((logdet_dense(&spec).unwrap() - spec.x()).abs() < 1e-14);
        assert!((logdet_dense_explicit(&spec).unwrap() - spec.x()).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_closed_form() {
        // Σ = [[eˣ, e⁻ˣ], [e⁻ˣ, eˣ]], det = e^{2x} - e^{-2x}.
        let spec = CovarianceSpec::new(1.2, 0.9, 2).unwrap();
        let x = spec.x();
        let want = ((2.0 * x).exp() - (-2.0 * x).exp()).ln();
        assert!((logdet_circulant(&spec) - want).abs() <= 1e-10 * want.abs());
        assert!((logdet_dense(&spec).unwrap() - want).abs() <= 1e-10 * want.abs());
    }

    #[test]
    fn circulant_matches_dense_example() {
        let spec = CovarianceSpec::new(1.5, 0.8, 8).unwrap();
        let c = logdet_circulant(&spec);
        let d = logdet_dense(&spec).unwrap();
        assert!((c - d).abs() <= 1e-8 * c.abs());
        let e = logdet_dense_explicit(&spec).unwrap();
        assert!((c - e).abs() <= 1e-8 * c.abs());
    }

    #[test]
    fn explicit_factorization_reports_pivot() {
        // Default grid at r = 3: Σ is numerically singular in double precision.
        let spec = CovarianceSpec::default_for(3.0).unwrap();
        match logdet_dense_explicit(&spec) {
            Err(Error::NonPositivePivot { index, .. }) => assert!(index < spec.n),
            Ok(v) => assert!((v - logdet_circulant(&spec)).abs() > 0.0),
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn dense_route_rejects_infeasible() {
        let spec = CovarianceSpec::new(30.0, 0.9, 100).unwrap();
        assert!(matches!(logdet_dense(&spec), Err(Error::Precondition(_))));
    }

    #[test]
    fn eigenvalues_positive() {
        for r in [1.5, 2.0, 2.5, 3.0, 10.0, 20.0] {
            let spec = CovarianceSpec::default_for(r).unwrap();
            let logs = circulant_log_eigenvalues(&spec);
            assert!(logs.iter().all(|l| l.is_finite()), "r = {r}");
        }
    }

    #[test]
    fn regrouping_identity() {
        for r in [1.5, 2.0, 3.0, 7.0] {
            let spec = CovarianceSpec::default_for(r).unwrap();
            let a = vandermonde_lower_bound(&spec);
            let b = minor_log_expression(&spec);
            assert!(
                (a - b).abs() <= 1e-10 * a.abs().max(1.0),
                "r = {r}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn one_point_bound() {
        let spec = CovarianceSpec::new(1.5, 0.9, 1).unwrap();
        let bound = vandermonde_lower_bound(&spec);
        assert!((bound - 2.0 * spec.radius().ln()).abs() < 1e-14);
        assert!(bound <= logdet_circulant(&spec));
    }

    #[test]
    fn default_grid_rejects_small_r() {
        assert!(CovarianceSpec::default_for(1.0).is_err());
        assert!(CovarianceSpec::new(1.0, 1.0, 3).is_err());
        assert!(CovarianceSpec::new(1.0, 0.5, 0).is_err());
    }
}
