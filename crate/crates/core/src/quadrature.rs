//! Weighted radial inner products (f|g) = |𝕊^{d−1}| ∫₀^∞ f g r^{w} r^{d−1} dr
//! for profiles with exponential decay, plus convergence probing.
//!
//! Integrals are evaluated in the radial variable on [0, R_max] (the
//! truncation error is ~e^{−2R_max} for ground-state integrands) with either
//! mapped Gauss–Legendre or mapped Clenshaw–Curtis points.

use serde::{Deserialize, Serialize};

use crate::{CoreError, Result};

/// Node family of a quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    GaussLegendreMapped,
    ClenshawCurtisMapped,
}

/// How the reference interval is mapped onto the radial domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mapping {
    /// Affine map [−1, 1] → [0, R_max].
    Affine,
}

/// A mapped quadrature rule on [0, R_max].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub scheme: Scheme,
    /// Number of quadrature points (single panel).
    pub panels: usize,
    /// Radius beyond which integrands are treated as zero.
    pub r_max: f64,
    pub mapping: Mapping,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            scheme: Scheme::GaussLegendreMapped,
            panels: 64,
            r_max: 40.0,
            mapping: Mapping::Affine,
        }
    }
}

impl QuadratureRule {
    pub fn gauss(points: usize, r_max: f64) -> Self {
        Self {
            scheme: Scheme::GaussLegendreMapped,
            panels: points,
            r_max,
            mapping: Mapping::Affine,
        }
    }

    pub fn clenshaw_curtis(points: usize, r_max: f64) -> Self {
        Self {
            scheme: Scheme::ClenshawCurtisMapped,
            panels: points,
            r_max,
            mapping: Mapping::Affine,
        }
    }

    /// Checks the structural invariants (panels ≥ 8, R_max ≥ 20).
    pub fn validate(&self) -> Result<()> {
        if self.panels < 8 {
            return Err(CoreError::InvalidArgument(format!(
                "quadrature needs at least 8 points, got {}",
                self.panels
            )));
        }
        if !(self.r_max >= 20.0) {
            return Err(CoreError::InvalidArgument(format!(
                "truncation radius must be at least 20, got {}",
                self.r_max
            )));
        }
        Ok(())
    }

    /// Radii and weights of the mapped rule on [0, R_max].
    pub fn points(&self) -> (Vec<f64>, Vec<f64>) {
        let (x, w) = match self.scheme {
            Scheme::GaussLegendreMapped => gauss_legendre(self.panels),
            Scheme::ClenshawCurtisMapped => clenshaw_curtis(self.panels),
        };
        let half = 0.5 * self.r_max;
        let r = x.iter().map(|&xi| half * (xi + 1.0)).collect();
        let wr = w.iter().map(|&wi| half * wi).collect();
        (r, wr)
    }
}

/// Surface measure |𝕊^{d−1}| of the unit sphere in ℝ^d (|𝕊¹| = 2π).
pub fn sphere_surface(d: usize) -> f64 {
    assert!(d >= 1, "dimension must be at least 1");
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI * sphere_surface(d - 2) / (d as f64 - 2.0),
    }
}

/// (f|g) with radial weight r^{weight_power}:
/// |𝕊^{d−1}| ∫₀^{R_max} f(r) g(r) r^{weight_power} r^{d−1} dr.
pub fn inner_product(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    weight_power: u32,
    d: usize,
    rule: &QuadratureRule,
) -> Result<f64> {
    assert!(d >= 2, "inner products are defined for d >= 2");
    let (r, w) = rule.points();
    let mut sum = 0.0;
    for (&ri, &wi) in r.iter().zip(&w) {
        let sample = f(ri) * g(ri) * ri.powi(weight_power as i32 + d as i32 - 1);
        if !sample.is_finite() {
            return Err(CoreError::NonFiniteSample(format!("integrand at r = {ri}")));
        }
        sum += wi * sample;
    }
    Ok(sphere_surface(d) * sum)
}

/// Result of a panel-doubling convergence probe.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// (points, value) at each doubling.
    pub values: Vec<(usize, f64)>,
    /// Whether the final two values agree to the requested tolerance.
    pub converged: bool,
}

/// Evaluates the inner product at doubling point counts (up to 6 doublings)
/// until two successive values agree to `tol` absolutely.
pub fn convergence_probe(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    weight_power: u32,
    d: usize,
    rule: &QuadratureRule,
    tol: f64,
) -> Result<ConvergenceReport> {
    let mut values = Vec::new();
    let mut points = rule.panels;
    let mut converged = false;
    for _ in 0..=6 {
        let refined = QuadratureRule {
            panels: points,
            ..*rule
        };
        let v = inner_product(&f, &g, weight_power, d, &refined)?;
        values.push((points, v));
        if let [.., (_, a), (_, b)] = values.as_slice() {
            if (a - b).abs() <= tol {
                converged = true;
                break;
            }
        }
        points *= 2;
    }
    Ok(ConvergenceReport { values, converged })
}

// ---------------------------------------------------------------------------
// node construction
// ---------------------------------------------------------------------------

/// Legendre polynomial value and derivative at `x` by the three-term
/// recurrence.
fn legendre_jet(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P_n = p1, P_{n−1} = p0; derivative from the standard identity
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess, accurate to O(n^{-3})
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_jet(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_jet(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Clenshaw–Curtis nodes x_j = cos(jπ/N) and weights on [−1, 1]
/// (m points, N = m − 1 intervals; exact cosine-sum weight formula).
pub fn clenshaw_curtis(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 2);
    let n = m - 1;
    let nf = n as f64;
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for j in 0..=n {
        let theta = j as f64 * std::f64::consts::PI / nf;
        nodes[n - j] = theta.cos();
        let mut s = 1.0;
        for k in 1..=(n / 2) {
            let b = if 2 * k == n { 1.0 } else { 2.0 };
            s -= b * (2.0 * k as f64 * theta).cos() / ((4 * k * k - 1) as f64);
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        weights[n - j] = c * s / nf;
    }
    (nodes, weights)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
