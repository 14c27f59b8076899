//! Truncated series: evaluation, maximum modulus, zero counting in a disk
//! and a companion-matrix root oracle.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeff_models::CoefficientModel;
use crate::numerics::CompensatedSum;
use crate::sampling::CoefficientDraw;
use crate::{Error, Result};

/// Finest angular resolution (number of points on the full circle) used by
/// argument tracking.
pub const MAX_CIRCLE_POINTS: usize = 1 << 20;

/// Relative radius perturbation used when a zero sits on the contour.
pub const BOUNDARY_PERTURBATION: f64 = 1e-9;

const BOUNDARY_FLOOR: f64 = 1e-290;
/// ln(1e300): coefficients below `1e-300·max|c|` are dropped from the top.
const LN_STRIP: f64 = 690.775_527_898_213_7;

/// `f(z) = Σ_{n≤N} φₙ aₙ zⁿ`, stored as `φₙ` and `log aₙ` so that scaled
/// coefficients `φₙ aₙ ρⁿ` never underflow prematurely.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    phi: Vec<Complex64>,
    log_a: Vec<f64>,
}

impl TruncatedSeries {
    pub fn new(model: &CoefficientModel, draw: &CoefficientDraw) -> Result<Self> {
        let log_a = model.log_coeffs(draw.values.len());
        Self::from_parts(draw.values.clone(), log_a)
    }

    /// Polynomial `Σ cₙ zⁿ` with explicit coefficients.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        let log_a = vec![0.0; coeffs.len()];
        Self::from_parts(coeffs, log_a)
    }

    fn from_parts(phi: Vec<Complex64>, log_a: Vec<f64>) -> Result<Self> {
        if phi.is_empty() || phi.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            return Err(Error::DegeneratePolynomial);
        }
        if phi.iter().any(|c| !c.is_finite()) || log_a.iter().any(|l| !l.is_finite()) {
            return Err(Error::invalid("coefficients", "must be finite"));
        }
        Ok(Self { phi, log_a })
    }

    pub fn degree(&self) -> usize {
        self.phi.len() - 1
    }

    /// `cₙ = φₙ aₙ`.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.phi[n] * self.log_a[n].exp()
    }

    pub fn coeffs(&self) -> Vec<Complex64> {
        (0..self.phi.len()).map(|n| self.coeff(n)).collect()
    }

    /// `φₙ aₙ ρⁿ`, the coefficients of `w ↦ f(ρw)`.
    pub fn scaled_coeffs(&self, rho: f64) -> Vec<Complex64> {
        let ln_rho = rho.ln();
        self.phi
            .iter()
            .zip(&self.log_a)
            .enumerate()
            .map(|(n, (p, la))| {
                if n == 0 {
                    *p * la.exp()
                } else {
                    *p * (la + n as f64 * ln_rho).exp()
                }
            })
            .collect()
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs(), z)
    }

    /// Independent evaluation: every term `φₙ exp(log aₙ + n log|z|) e^{inθ}`
    /// is formed in polar form and summed with Neumaier compensation.
    pub fn eval_compensated(&self, z: Complex64) -> Complex64 {
        let (modulus, theta) = z.to_polar();
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for (n, (p, la)) in self.phi.iter().zip(&self.log_a).enumerate() {
            let term = if n == 0 {
                *p * la.exp()
            } else if modulus == 0.0 {
                continue;
            } else {
                *p * Complex64::from_polar((la + n as f64 * modulus.ln()).exp(), n as f64 * theta)
            };
            re.add(term.re);
            im.add(term.im);
        }
        Complex64::new(re.value(), im.value())
    }
}

#[inline]
pub(crate) fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn horner_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    coeffs
        .iter()
        .rev()
        .fold((zero, zero), |(p, dp), c| (p * z + c, dp * z + p))
}

fn unit(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Maximum of `|f|` over `grid_size` equispaced points of `|z| = r`, doubling
/// the grid until the relative change drops below `1e-6`. This is a lower
/// bound for `M(r) = max_{|z|≤r} |f(z)|`.
pub fn max_modulus(ts: &TruncatedSeries, r: f64, grid_size: usize) -> Result<f64> {
    if grid_size < 64 {
        return Err(Error::invalid(
            "grid_size",
            format!("must be at least 64, got {grid_size}"),
        ));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("r", format!("must be positive, got {r}")));
    }
    let d = ts.scaled_coeffs(r);
    let grid_max = |m: usize| {
        (0..m)
            .map(|k| horner(&d, unit(TAU * k as f64 / m as f64)).norm())
            .fold(0.0f64, f64::max)
    };
    let mut m = grid_size;
    let mut best = grid_max(m);
    while m < MAX_CIRCLE_POINTS {
        m *= 2;
        let next = grid_max(m).max(best);
        let change = (next - best) / next.max(f64::MIN_POSITIVE);
        best = next;
        if change < 1e-6 {
            break;
        }
    }
    Ok(best)
}

/// Number of zeros of the truncated series in `|z| < r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroCountResult {
    pub count: usize,
    /// Radius actually used (perturbed if a boundary zero was suspected).
    pub radius: f64,
    /// Deepest bisection level reached below the initial grid.
    pub refinement_levels: u32,
    pub verified_by_oracle: bool,
}

struct Tracker<'a> {
    coeffs: &'a [Complex64],
    max_depth: u32,
    deepest: u32,
    unresolved: bool,
    min_abs: f64,
    max_abs: f64,
}

impl Tracker<'_> {
    fn eval(&mut self, theta: f64) -> Complex64 {
        let v = horner(self.coeffs, unit(theta));
        let a = v.norm();
        self.min_abs = self.min_abs.min(a);
        self.max_abs = self.max_abs.max(a);
        v
    }

    /// Continuous change of arg f along the arc `[a, b]`.
    fn increment(&mut self, a: f64, b: f64, fa: Complex64, fb: Complex64, depth: u32) -> f64 {
        let step = (fb * fa.conj()).arg();
        if step.abs() < FRAC_PI_2 {
            return step;
        }
        if depth >= self.max_depth {
            self.unresolved = true;
            return step;
        }
        self.deepest = self.deepest.max(depth + 1);
        let mid = 0.5 * (a + b);
        let fm = self.eval(mid);
        self.increment(a, mid, fa, fm, depth + 1) + self.increment(mid, b, fm, fb, depth + 1)
    }
}

struct Winding {
    count: usize,
    levels: u32,
}

/// Winding number of `w ↦ Σ dₙ wⁿ` along the unit circle, or `None` when a
/// zero on (or numerically at) the contour is suspected.
fn winding_on_unit_circle(d: &[Complex64]) -> Option<Winding> {
    let degree = d.len() - 1;
    let initial = (4 * (degree + 1)).next_power_of_two().max(64);
    let max_depth = (MAX_CIRCLE_POINTS / initial).max(1).trailing_zeros();
    let mut tracker = Tracker {
        coeffs: d,
        max_depth,
        deepest: 0,
        unresolved: false,
        min_abs: f64::INFINITY,
        max_abs: 0.0,
    };
    let thetas: Vec<f64> = (0..=initial)
        .map(|k| TAU * k as f64 / initial as f64)
        .collect();
    let values: Vec<Complex64> = thetas[..initial].iter().map(|&t| tracker.eval(t)).collect();
    let mut total = 0.0;
    for k in 0..initial {
        let fb = values[(k + 1) % initial];
        total += tracker.increment(thetas[k], thetas[k + 1], values[k], fb, 0);
    }
    let turns = total / TAU;
    let rounded = turns.round();
    if tracker.unresolved
        || tracker.min_abs < BOUNDARY_FLOOR * tracker.max_abs
        || tracker.min_abs == 0.0
        || (turns - rounded).abs() > 1e-3
        || rounded < 0.0
    {
        return None;
    }
    Some(Winding {
        count: rounded as usize,
        levels: tracker.deepest,
    })
}

fn count_at(ts: &TruncatedSeries, r: f64) -> Option<ZeroCountResult> {
    winding_on_unit_circle(&ts.scaled_coeffs(r)).map(|w| ZeroCountResult {
        count: w.count,
        radius: r,
        refinement_levels: w.levels,
        verified_by_oracle: false,
    })
}

/// Zeros in `|z| < r` by the argument principle, refining the circular grid
/// until every argument increment is below `π/2`.
pub fn count_zeros_disk(ts: &TruncatedSeries, r: f64) -> Result<ZeroCountResult> {
    count_zeros_disk_with(ts, r, BOUNDARY_PERTURBATION)
}

/// As [`count_zeros_disk`] with a custom relative perturbation for the
/// boundary-zero retry.
pub fn count_zeros_disk_with(
    ts: &TruncatedSeries,
    r: f64,
    perturbation: f64,
) -> Result<ZeroCountResult> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("r", format!("must be positive, got {r}")));
    }
    if let Some(res) = count_at(ts, r) {
        return Ok(res);
    }
    let inner = count_at(ts, r * (1.0 - perturbation));
    let outer = count_at(ts, r * (1.0 + perturbation));
    match (inner, outer) {
        (Some(a), Some(b)) if a.count == b.count => Ok(a),
        _ => Err(Error::BoundaryZero {
            radius: r,
            inner: inner.map(|c| c.count),
            outer: outer.map(|c| c.count),
        }),
    }
}

/// Argument-principle count cross-checked against the companion-matrix roots.
/// `verified_by_oracle` is set only when both counts agree.
pub fn count_zeros_verified(ts: &TruncatedSeries, r: f64) -> Result<(ZeroCountResult, usize)> {
    let mut res = count_zeros_disk(ts, r)?;
    let oracle = roots_truncated(ts)?
        .iter()
        .filter(|z| z.norm() < res.radius)
        .count();
    res.verified_by_oracle = oracle == res.count;
    Ok((res, oracle))
}

/// Row-major square matrix used by the eigenvalue routine.
struct Square {
    n: usize,
    a: Vec<Complex64>,
}

impl Square {
    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.a[i * self.n + j]
    }
}

#[inline]
fn cabs1(c: Complex64) -> f64 {
    c.re.abs() + c.im.abs()
}

/// Parlett–Reinsch balancing by powers of two (1-norms on complex entries).
fn balance(m: &mut Square) {
    let n = m.n;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += cabs1(m.at(j, i));
                    row += cabs1(m.at(i, j));
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut c = col;
            let g = row / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            let g = row * 2.0;
            while c >= g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + row) / f < 0.95 * total {
                converged = false;
                for j in 0..n {
                    *m.at_mut(i, j) /= f;
                    *m.at_mut(j, i) *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the complex single-shift QR
/// algorithm with Wilkinson shifts (eigenvalues only, no Schur vectors).
fn hessenberg_eigenvalues(h: &mut Square) -> Option<Vec<Complex64>> {
    let n = h.n;
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return Some(eig);
    }
    let eps = f64::EPSILON;
    let max_its = 30 * n.max(10);
    let mut its_total = 0usize;
    let mut ihi = n - 1;
    let mut its = 0usize;
    loop {
        // Look for a negligible subdiagonal entry in the active block.
        let mut l = ihi;
        while l > 0 {
            let mut scale = cabs1(h.at(l - 1, l - 1)) + cabs1(h.at(l, l));
            if scale == 0.0 {
                scale = (l.saturating_sub(1)..=ihi)
                    .map(|k| cabs1(h.at(k, k)))
                    .sum::<f64>()
                    + cabs1(h.at(l, l - 1));
            }
            if cabs1(h.at(l, l - 1)) <= eps * scale {
                *h.at_mut(l, l - 1) = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == ihi {
            eig[ihi] = h.at(ihi, ihi);
            if ihi == 0 {
                return Some(eig);
            }
            ihi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        its_total += 1;
        if its_total > max_its {
            return None;
        }
        let mu = if its.is_multiple_of(10) {
            // Exceptional shift to break cycles.
            h.at(ihi, ihi) + 0.75 * cabs1(h.at(ihi, ihi - 1))
        } else {
            let a = h.at(ihi - 1, ihi - 1);
            let b = h.at(ihi - 1, ihi);
            let c = h.at(ihi, ihi - 1);
            let d = h.at(ihi, ihi);
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            // Eigenvalues of the trailing 2×2 block; take the one nearer d.
            let t1 = (a + d) * 0.5 + disc;
            let t2 = (a + d) * 0.5 - disc;
            if (t1 - d).norm() <= (t2 - d).norm() {
                t1
            } else {
                t2
            }
        };
        for k in l..ihi {
            let (x, y) = if k == l {
                (h.at(l, l) - mu, h.at(l + 1, l))
            } else {
                (h.at(k, k - 1), h.at(k + 1, k - 1))
            };
            let norm = x.norm().hypot(y.norm());
            if norm == 0.0 {
                continue;
            }
            let (c, s) = if x.norm() == 0.0 {
                (0.0, y.conj() / y.norm())
            } else {
                let alpha = x / x.norm();
                (x.norm() / norm, alpha * y.conj() / norm)
            };
            let first = if k == l { l } else { k - 1 };
            for j in first..=ihi {
                let t1 = h.at(k, j);
                let t2 = h.at(k + 1, j);
                *h.at_mut(k, j) = t1 * c + s * t2;
                *h.at_mut(k + 1, j) = t2 * c - s.conj() * t1;
            }
            if k > l {
                *h.at_mut(k + 1, k - 1) = Complex64::new(0.0, 0.0);
            }
            for i in l..=(k + 2).min(ihi) {
                let t1 = h.at(i, k);
                let t2 = h.at(i, k + 1);
                *h.at_mut(i, k) = t1 * c + s.conj() * t2;
                *h.at_mut(i, k + 1) = t2 * c - s * t1;
            }
        }
    }
}

/// All roots of the truncated polynomial, as eigenvalues of the balanced
/// companion matrix followed by Newton polishing.
///
/// Trailing coefficients with `|cₙ| < 1e-300·max|c|` are dropped and the
/// variable is rescaled so that the constant and leading coefficients have
/// equal modulus before the companion matrix is formed.
pub fn roots_truncated(ts: &TruncatedSeries) -> Result<Vec<Complex64>> {
    let log_mag: Vec<f64> = ts
        .phi
        .iter()
        .zip(&ts.log_a)
        .map(|(p, la)| {
            if p.norm() == 0.0 {
                f64::NEG_INFINITY
            } else {
                p.norm().ln() + la
            }
        })
        .collect();
    let top = log_mag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::DegeneratePolynomial);
    }
    let lo = log_mag
        .iter()
        .position(|&l| l > f64::NEG_INFINITY)
        .unwrap_or(0);
    let hi = log_mag
        .iter()
        .rposition(|&l| l >= top - LN_STRIP)
        .unwrap_or(lo);
    let mut roots = vec![Complex64::new(0.0, 0.0); lo];
    let degree = hi - lo;
    if degree == 0 {
        return Ok(roots);
    }

    let ln_rho = (log_mag[lo] - log_mag[hi]) / degree as f64;
    let norm = log_mag[hi] + degree as f64 * ln_rho;
    // q(w) = Σ e_k w^k with z = ρw, normalized so that |e_0| = |e_deg| = 1.
    let e: Vec<Complex64> = (0..=degree)
        .map(|k| {
            let n = lo + k;
            if log_mag[n] == f64::NEG_INFINITY {
                Complex64::new(0.0, 0.0)
            } else {
                ts.phi[n] * (ts.log_a[n] + k as f64 * ln_rho - norm).exp()
            }
        })
        .collect();
    let lead = e[degree];
    let mut companion = Square {
        n: degree,
        a: vec![Complex64::new(0.0, 0.0); degree * degree],
    };
    for i in 1..degree {
        *companion.at_mut(i, i - 1) = Complex64::new(1.0, 0.0);
    }
    for (k, ek) in e.iter().take(degree).enumerate() {
        *companion.at_mut(k, degree - 1) = -ek / lead;
    }
    balance(&mut companion);
    let eig = hessenberg_eigenvalues(&mut companion).ok_or(Error::EigenSolver { degree })?;
    let rho = ln_rho.exp();
    roots.extend(eig.into_iter().map(|w| polish(&e, w) * rho));
    Ok(roots)
}

fn polish(coeffs: &[Complex64], mut w: Complex64) -> Complex64 {
    let (mut p, mut dp) = horner_with_derivative(coeffs, w);
    for _ in 0..4 {
        if p.norm() == 0.0 || dp.norm() == 0.0 {
            break;
        }
        let next = w - p / dp;
        let (np, ndp) = horner_with_derivative(coeffs, next);
        if np.norm().is_nan() || np.norm() >= p.norm() {
            break;
        }
        w = next;
        p = np;
        dp = ndp;
    }
    w
}

/// Smallest root modulus, `+∞` for a nonzero constant.
pub fn min_zero_modulus(ts: &TruncatedSeries) -> Result<f64> {
    Ok(roots_truncated(ts)?
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min))
}

/// Maps `f(z)` to `f(e^{iθ} z)` by multiplying `φₙ` with `e^{inθ}`.
pub fn rotate(ts: &TruncatedSeries, theta: f64) -> TruncatedSeries {
    TruncatedSeries {
        phi: ts
            .phi
            .iter()
            .enumerate()
            .map(|(n, p)| p * unit((n as f64 * theta) % TAU))
            .collect(),
        log_a: ts.log_a.clone(),
    }
}

/// Residual test for a computed root: `|p(z)| ≤ tol · max_{|w|=|z|} |p(w)|`.
pub fn root_residual_ok(ts: &TruncatedSeries, z: Complex64, tol: f64) -> bool {
    let rho = z.norm();
    if rho == 0.0 {
        return ts.coeff(0).norm() <= tol * ts.coeff(0).norm().max(f64::MIN_POSITIVE);
    }
    let d = ts.scaled_coeffs(rho);
    let value = horner(&d, unit(z.arg()));
    let m = (0..1024)
        .map(|k| horner(&d, unit(PI * k as f64 / 512.0)).norm())
        .fold(value.norm(), f64::max);
    value.norm() <= tol * m
}
