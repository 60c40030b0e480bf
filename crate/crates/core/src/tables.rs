//! Reference coefficient fixtures for cross-validation.
//!
//! Rational approximations (numerator, denominator) of the constrained
//! Chebyshev coefficients of two benchmark expansions: the compactified
//! ground-state profile and the first dilation-correction profile.  Both
//! sets were obtained independently of this implementation and serve as
//! external checks; index k corresponds to basis element k+3.

/// Ground-state profile coefficients β₃..β₂₅ (23 entries).
pub const PROFILE_SERIES: [(i64, i64); 23] = [
    (-2542, 141001),
    (8061, 72860),
    (23, 25643),
    (-17127, 731900),
    (-113, 61446),
    (407, 88530),
    (80, 79969),
    (-195, 296276),
    (-167, 607101),
    (3, 91531),
    (3, 109289),
    (1, 42237921),
    (1, 163112),
    (1, 171418),
    (1, 1839428),
    (-1, 412985),
    (-1, 693490),
    (-1, 3459389),
    (1, 5641102),
    (1, 2626342),
    (1, 45286837),
    (1, 10226264),
    (-1, 9836273),
];

/// Dilation-correction profile coefficients γ₃..γ₄₀ (38 entries).
pub const CORRECTION_SERIES: [(i64, i64); 38] = [
    (54973, 96387),
    (-3088, 102021),
    (-11563, 65730),
    (-622, 123831),
    (935, 19694),
    (715, 80273),
    (-972, 107461),
    (-245, 66869),
    (43, 75440),
    (6, 13097),
    (7, 79466),
    (23, 138473),
    (10, 87071),
    (-1, 41044),
    (-7, 100544),
    (-3, 79736),
    (-1, 247350),
    (1, 98688),
    (1, 104302),
    (1, 181864),
    (1, 1748151),
    (-1, 795239),
    (-1, 519650),
    (-1, 1141942),
    (-1, 2632970),
    (1, 3481458),
    (1, 4334802),
    (1, 3856839),
    (1, 14342913),
    (-1, 142634956),
    (-1, 42463795),
    (-1, 12658667),
    (1, 45132528),
    (-1, 14926347),
    (1, 15529718),
    (-1, 15419336),
    (1, 13135736),
    (-1, 36714512),
];

/// The fixture values as floating-point numbers.
pub fn as_floats(table: &[(i64, i64)]) -> Vec<f64> {
    table.iter().map(|&(n, d)| n as f64 / d as f64).collect()
}
