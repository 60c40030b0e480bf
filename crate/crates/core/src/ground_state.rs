//! Euclidean ground-state profiles: the positive radial solution of
//! Q″ + (d−1)Q′/r − Q + Q^p = 0, Q′(0) = 0, Q(∞) = 0.
//!
//! Two independent methods are provided:
//! * a constrained-Chebyshev collocation Newton solve of the compactified
//!   equation (d = 2, p = 3 only), producing a [`SpectralFunction`];
//! * a shooting method with bisection on Q(0) for general (d, p), used as a
//!   cross-validation oracle.
//!
//! In compactified variables f(r) = (1 + r)^{−1/2} e^{−r} g(x),
//! x = (r − 1)/(r + 1), the d = 2 cubic equation becomes (after clearing the
//! denominators that are singular at x = ±1)
//!
//! ```text
//! (1−x)²(1+x)·g″ + (3x²−6x−5)·g′ − ¾(3−x)·g + 2r·e^{−2r}·g³ = 0,
//! r = (1+x)/(1−x),
//! ```
//!
//! collocated at the Chebyshev–Gauss nodes of the active basis.

use nalgebra::{DMatrix, DVector};

use crate::cheb_basis::{build_basis, collocation_nodes, Prefactor, SpectralFunction};
use crate::quadrature::{inner_product, QuadratureRule};
use crate::{CoreError, Result, SolverConfig};

/// A converged spectral ground state.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub profile: SpectralFunction,
    pub d: usize,
    pub p: f64,
    /// Max absolute cleared residual over the collocation nodes.
    pub residual_norm: f64,
    pub newton_iters: usize,
    /// Residual sup-norms of the successive Newton iterates (diagnostic).
    pub residual_history: Vec<f64>,
}

// ---------------------------------------------------------------------------
// collocation system (shared by the Newton solve and the S₁ linear solve)
// ---------------------------------------------------------------------------

struct CollocationSystem {
    p0: DMatrix<f64>,
    p1: DMatrix<f64>,
    p2: DMatrix<f64>,
    lin2: DVector<f64>,
    lin1: DVector<f64>,
    lin0: DVector<f64>,
    /// Coefficient of g³ in the cleared equation: 2r·e^{−2r}.
    nl: DVector<f64>,
    /// Radii r = (1+x)/(1−x) of the nodes.
    radii: DVector<f64>,
}

impl CollocationSystem {
    fn new(n_max: usize) -> Self {
        let basis = build_basis(n_max);
        let grid = collocation_nodes(basis.active_count());
        let [p0, p1, p2] = basis.collocation_matrices(grid.nodes());
        let x = DVector::from_column_slice(grid.nodes());
        let lin2 = x.map(|x| (1.0 - x) * (1.0 - x) * (1.0 + x));
        let lin1 = x.map(|x| 3.0 * x * x - 6.0 * x - 5.0);
        let lin0 = x.map(|x| -0.75 * (3.0 - x));
        let radii = x.map(|x| (1.0 + x) / (1.0 - x));
        let nl = radii.map(|r| 2.0 * r * (-2.0 * r).exp());
        Self {
            p0,
            p1,
            p2,
            lin2,
            lin1,
            lin0,
            nl,
            radii,
        }
    }

    fn residual(&self, beta: &DVector<f64>) -> DVector<f64> {
        let g = &self.p0 * beta;
        let gp = &self.p1 * beta;
        let gpp = &self.p2 * beta;
        DVector::from_fn(g.len(), |k, _| {
            self.lin2[k] * gpp[k]
                + self.lin1[k] * gp[k]
                + self.lin0[k] * g[k]
                + self.nl[k] * g[k] * g[k] * g[k]
        })
    }

    /// Linearization around `g` samples: the linear part plus the 3·nl·g²
    /// mass term.
    fn linearized_matrix(&self, g: &DVector<f64>) -> DMatrix<f64> {
        let (rows, cols) = self.p0.shape();
        DMatrix::from_fn(rows, cols, |k, j| {
            self.lin2[k] * self.p2[(k, j)]
                + self.lin1[k] * self.p1[(k, j)]
                + (self.lin0[k] + 3.0 * self.nl[k] * g[k] * g[k]) * self.p0[(k, j)]
        })
    }
}

// ---------------------------------------------------------------------------
// spectral Newton solve
// ---------------------------------------------------------------------------

/// Solves the compactified ground-state equation by damped Newton iteration
/// on the constrained-Chebyshev coefficients.
///
/// Only d = 2, p = 3 is supported on this path (the compactified coefficient
/// functions and the basis regularity conditions are derived for that case);
/// other parameters go through [`shoot_ground_state`].
pub fn solve_ground_state(d: usize, p: f64, config: &SolverConfig) -> Result<GroundState> {
    config.validate()?;
    if d != 2 || p != 3.0 {
        return Err(CoreError::InvalidArgument(format!(
            "the spectral solver handles d = 2, p = 3 only (got d = {d}, p = {p}); \
             use the shooting oracle for other parameters"
        )));
    }

    let sys = CollocationSystem::new(config.n_max);
    let k = sys.p0.nrows();

    // initial guess: the series interpolating the constant 2.2 (near the
    // known amplitude f(0) ≈ 2.206)
    let mut beta = sys
        .p0
        .clone()
        .lu()
        .solve(&DVector::from_element(k, 2.2))
        .ok_or_else(|| CoreError::SingularSystem("collocation value matrix".into()))?;

    let mut residual = sys.residual(&beta);
    let mut res_norm = residual.amax();
    let mut history = vec![res_norm];
    let max_iters = 60;

    for iter in 0..max_iters {
        if res_norm < config.newton_tol {
            let profile = SpectralFunction::new(
                config.n_max,
                beta.iter().copied().collect(),
                Prefactor::GroundStateForm,
            );
            return Ok(GroundState {
                profile,
                d,
                p,
                residual_norm: res_norm,
                newton_iters: iter,
                residual_history: history,
            });
        }

        let jac = sys.linearized_matrix(&(&sys.p0 * &beta));
        let delta = jac
            .lu()
            .solve(&residual)
            .ok_or_else(|| CoreError::SingularSystem("Newton Jacobian".into()))?;

        // Armijo backtracking: accept the first step with sufficient decrease.
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= 2f64.powi(-40) {
            let trial = &beta - lambda * &delta;
            let trial_res = sys.residual(&trial);
            let trial_norm = trial_res.amax();
            if trial_norm < (1.0 - 1e-4 * lambda) * res_norm {
                beta = trial;
                residual = trial_res;
                res_norm = trial_norm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        history.push(res_norm);
        if !accepted {
            return Err(CoreError::NewtonDiverged {
                iters: iter,
                residual: res_norm,
            });
        }
    }
    Err(CoreError::NewtonDiverged {
        iters: max_iters,
        residual: res_norm,
    })
}

/// The cleared compactified residual of a spectral profile at any x ∈ (−1, 1)
/// (vanishes at the collocation nodes of a converged solve; small but nonzero
/// in between, at the level of the coefficient truncation).
pub fn residual_at(profile: &SpectralFunction, x: f64) -> f64 {
    assert!(x.abs() < 1.0, "residual is defined on the open interval");
    let g = profile.eval(x);
    let gp = profile.eval_deriv(x, 1);
    let gpp = profile.eval_deriv(x, 2);
    let r = (1.0 + x) / (1.0 - x);
    (1.0 - x) * (1.0 - x) * (1.0 + x) * gpp + (3.0 * x * x - 6.0 * x - 5.0) * gp
        - 0.75 * (3.0 - x) * g
        + 2.0 * r * (-2.0 * r).exp() * g * g * g
}

/// Solves the linear collocation system for the first-order profile
/// correction S₁, defined by  L₊S₁ = −r²Q³  with L₊ = −Δ + 1 − 3Q², in the
/// same compactified representation as the ground state (`n_max` may be
/// larger than the ground state's for extra resolution).
pub fn solve_s1(gs: &GroundState, n_max: usize) -> Result<SpectralFunction> {
    let sys = CollocationSystem::new(n_max);
    // ground-state samples g₀ at the S₁ nodes, via the compactified series
    let g0 = DVector::from_fn(sys.p0.nrows(), |k, _| {
        let r = sys.radii[k];
        gs.profile.eval((r - 1.0) / (r + 1.0))
    });
    let a = sys.linearized_matrix(&g0);
    // cleared right side: 2r³e^{−2r}·g₀³
    let rhs = DVector::from_fn(g0.len(), |k, _| {
        let r = sys.radii[k];
        2.0 * r * r * r * (-2.0 * r).exp() * g0[k].powi(3)
    });
    let gamma = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CoreError::SingularSystem("S1 collocation matrix".into()))?;
    Ok(SpectralFunction::new(
        n_max,
        gamma.iter().copied().collect(),
        Prefactor::GroundStateForm,
    ))
}

/// ‖Q‖² over ℝ^d (for d = 2: 2π ∫ Q² r dr), via Gauss–Legendre quadrature.
pub fn mass(gs: &GroundState) -> Result<f64> {
    let rule = QuadratureRule::gauss(256, 40.0);
    inner_product(
        |r| gs.profile.to_radial(r),
        |r| gs.profile.to_radial(r),
        0,
        gs.d,
        &rule,
    )
}

// ---------------------------------------------------------------------------
// shooting oracle
// ---------------------------------------------------------------------------

/// A profile obtained by shooting: dense RK4 samples of (f, f′) on a uniform
/// grid with cubic-Hermite interpolation in between.
#[derive(Debug, Clone)]
pub struct ShootingProfile {
    d: usize,
    p: f64,
    step: f64,
    /// (f, f′) at rᵢ = i·step.
    samples: Vec<(f64, f64)>,
}

const SHOOT_STEP: f64 = 1e-3;
const SHOOT_R_END: f64 = 25.0;

fn shoot_rhs(d: usize, p: f64, r: f64, f: f64, fp: f64) -> f64 {
    let nonlinear = f.abs().powf(p - 1.0) * f;
    if r == 0.0 {
        // f′(0) = 0 and f′/r → f″(0) turn the equation into d·f″(0) = f − f^p
        (f - nonlinear) / d as f64
    } else {
        -((d - 1) as f64) * fp / r + f - nonlinear
    }
}

fn rk4_step(d: usize, p: f64, r: f64, h: f64, y: (f64, f64)) -> (f64, f64) {
    let (f, fp) = y;
    let k1 = (fp, shoot_rhs(d, p, r, f, fp));
    let k2 = (
        fp + 0.5 * h * k1.1,
        shoot_rhs(d, p, r + 0.5 * h, f + 0.5 * h * k1.0, fp + 0.5 * h * k1.1),
    );
    let k3 = (
        fp + 0.5 * h * k2.1,
        shoot_rhs(d, p, r + 0.5 * h, f + 0.5 * h * k2.0, fp + 0.5 * h * k2.1),
    );
    let k4 = (
        fp + h * k3.1,
        shoot_rhs(d, p, r + h, f + h * k3.0, fp + h * k3.1),
    );
    (
        f + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        fp + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

enum ShotOutcome {
    /// f crossed zero: amplitude too large.
    Overshoot,
    /// f turned back upward below the constant state 1: amplitude too small.
    Undershoot,
    /// integrated to the end without either signal (near the ground state)
    Decayed(Vec<(f64, f64)>),
}

fn integrate_shot(d: usize, p: f64, a: f64, keep: bool) -> ShotOutcome {
    let h = SHOOT_STEP;
    let n = (SHOOT_R_END / h).round() as usize;
    let mut y = (a, 0.0);
    let mut samples = if keep { Vec::with_capacity(n + 1) } else { Vec::new() };
    if keep {
        samples.push(y);
    }
    for i in 0..n {
        let r = i as f64 * h;
        y = rk4_step(d, p, r, h, y);
        if y.0 < 0.0 {
            return ShotOutcome::Overshoot;
        }
        if y.1 > 0.0 && y.0 < 1.0 {
            return ShotOutcome::Undershoot;
        }
        if keep {
            samples.push(y);
        }
    }
    ShotOutcome::Decayed(samples)
}

/// Computes the ground state of f″ + (d−1)f′/r − f + |f|^{p−1}f = 0 by
/// bisection on the amplitude f(0), integrating with fixed-step RK4.
///
/// Subcriticality 1 < p < 1 + 4/(d−2) is required for d ≥ 3 (any p > 1 for
/// d ≤ 2); outside that range no decaying ground state exists.
pub fn shoot_ground_state(d: usize, p: f64) -> Result<ShootingProfile> {
    if d == 0 || p <= 1.0 {
        return Err(CoreError::InvalidArgument(format!(
            "shooting needs d >= 1 and p > 1, got d = {d}, p = {p}"
        )));
    }
    if d >= 3 && p >= 1.0 + 4.0 / (d as f64 - 2.0) {
        return Err(CoreError::InvalidArgument(format!(
            "p = {p} is not subcritical for d = {d} (need p < {})",
            1.0 + 4.0 / (d as f64 - 2.0)
        )));
    }

    let mut lo = 1.05;
    let mut hi = 10.0;
    let is_over = |a: f64| matches!(integrate_shot(d, p, a, false), ShotOutcome::Overshoot);
    if is_over(lo) || !is_over(hi) {
        return Err(CoreError::BracketNotFound(format!(
            "no undershoot/overshoot bracket in [{lo}, {hi}] for d = {d}, p = {p}"
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if is_over(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let a = 0.5 * (lo + hi);

    let samples = match integrate_shot(d, p, a, true) {
        ShotOutcome::Decayed(s) => s,
        // At the bisection limit the trajectory may still peel off within the
        // last fraction of the range; re-integrate keeping samples and pad by
        // pure exponential decay from the departure point.
        _ => {
            let h = SHOOT_STEP;
            let n = (SHOOT_R_END / h).round() as usize;
            let mut y = (a, 0.0);
            let mut s = Vec::with_capacity(n + 1);
            s.push(y);
            for i in 0..n {
                let r = i as f64 * h;
                y = rk4_step(d, p, r, h, y);
                if y.0 < 0.0 || (y.1 > 0.0 && y.0 < 1.0) {
                    break;
                }
                s.push(y);
            }
            // pad with the asymptotic form f ~ r^{−(d−1)/2}e^{−r}
            let half_pow = (d as f64 - 1.0) / 2.0;
            while s.len() < n + 1 {
                let i = s.len();
                let r_prev = (i - 1) as f64 * h;
                let r_next = i as f64 * h;
                let (f, _) = *s.last().unwrap();
                let decayed = f * (r_prev / r_next).powf(half_pow) * (-h).exp();
                s.push((decayed, decayed * (-1.0 - half_pow / r_next)));
            }
            s
        }
    };

    Ok(ShootingProfile {
        d,
        p,
        step: SHOOT_STEP,
        samples,
    })
}

impl ShootingProfile {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// The shooting amplitude f(0).
    pub fn f0(&self) -> f64 {
        self.samples[0].0
    }

    pub fn r_end(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.step
    }

    /// f(r) by cubic Hermite interpolation between stored (f, f′) samples;
    /// beyond the integration range the profile is continued by the
    /// asymptotic form f ~ r^{−(d−1)/2} e^{−r}.
    ///
    /// # Panics
    /// Panics if `r` is negative or NaN.
    pub fn eval(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "radius must be nonnegative, got {r}");
        let r_end = self.r_end();
        if r >= r_end {
            let (f_end, _) = *self.samples.last().unwrap();
            let geom = (r_end / r).powf((self.d as f64 - 1.0) / 2.0);
            return f_end * geom * (r_end - r).exp();
        }
        let i = (r / self.step).floor() as usize;
        let i = i.min(self.samples.len() - 2);
        let t = (r - i as f64 * self.step) / self.step;
        let (f0, d0) = self.samples[i];
        let (f1, d1) = self.samples[i + 1];
        let h = self.step;
        // cubic Hermite basis
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * h * d1
    }

    /// ‖f‖²_{L²(ℝ^d)} by trapezoidal quadrature over the stored samples.
    pub fn mass(&self) -> f64 {
        let surface = crate::quadrature::sphere_surface(self.d);
        let h = self.step;
        let mut sum = 0.0;
        for (i, w) in self.samples.windows(2).enumerate() {
            let r0 = i as f64 * h;
            let r1 = r0 + h;
            let v0 = w[0].0 * w[0].0 * r0.powi(self.d as i32 - 1);
            let v1 = w[1].0 * w[1].0 * r1.powi(self.d as i32 - 1);
            sum += 0.5 * h * (v0 + v1);
        }
        surface * sum
    }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
