//! Numerical library for solitary waves of the focusing nonlinear Schrödinger
//! equation on rotationally symmetric warped-product manifolds.
//!
//! The library computes, for the L²-critical case d = 2, p = 3:
//!
//! * the Euclidean ground-state profile Q (Townes profile) via constrained
//!   Chebyshev collocation on the compactified half-line, cross-validated by an
//!   independent shooting method ([`ground_state`]);
//! * the curved-space soliton correction ρ_α by contraction iteration, for a
//!   warping function A(r) from the polynomial family r + c₁r³ + c₂r⁵, the
//!   hyperbolic warp sinh r, or the flat warp r ([`manifold_soliton`],
//!   [`geometry`]);
//! * the radial linearized operators L₊ and L₋ at infinite and finite scaling
//!   parameter α, their low-lying spectra, and Volterra-built fundamental
//!   systems with controlled asymptotics ([`linearized`]);
//! * the stability constants b₁ and b₂, the classification number
//!   κ = c₁²·b₁ + c₂·b₂ whose sign decides linear instability of the soliton,
//!   and cross-validation of κ against the finite-difference mass derivative
//!   (Vakhitov–Kolokolov criterion) ([`stability`]).
//!
//! Weighted radial inner products live in [`quadrature`], and the constrained
//! Chebyshev basis machinery in [`cheb_basis`].

pub mod cheb_basis;
mod config;
mod error;
pub mod geometry;
pub mod ground_state;
pub mod linearized;
pub mod manifold_soliton;
pub mod quadrature;
pub mod stability;
pub mod tables;

pub use config::SolverConfig;
pub use error::{CoreError, Result};
