//! Frozen corpus constants behind the verification suites.
//!
//! The inequalities these guard hold with unspecified constants; the values
//! here were measured once on the fixed-seed corpus (see
//! `examples/calibrate.rs`, seeds 0..100, 2D grid N = 64, energy-mode
//! partition with the default annuli) and frozen with a 1.1 safety margin so
//! they act as regression bounds, not tuned targets. Preset regression values
//! carry no margin; runs are deterministic in the seed, and the acceptance
//! checks allow +-5% for platform rounding differences.

/// Besov/Sobolev equivalence bracket `[1/C, C]` for `B^s_{2,2}` vs `H^s`,
/// indexed by `s`. Raw measurements: 1.017359 (s = 0.5), 1.026498 (s = 1),
/// 1.063099 (s = 2).
pub fn besov_sobolev_equivalence_bound(s: f64) -> Option<f64> {
    if s == 0.5 {
        Some(1.119095)
    } else if s == 1.0 {
        Some(1.129148)
    } else if s == 2.0 {
        Some(1.169409)
    } else {
        None
    }
}

/// Bernstein quotient bound for `p = 1` (2D): the sharp value over the shell
/// family is `2 * vol^{1/2} = 4 pi ~ 12.566371`, attained by the
/// near-constant low block.
pub const BERNSTEIN_BOUND_P1: f64 = 13.823008;

/// Bernstein quotient bound for `p = 2`: the quotient is identically 1 on
/// energetic shells.
pub const BERNSTEIN_BOUND_P2: f64 = 1.1;

/// Final kinetic energy of each built-in preset (fixed seed).
pub fn preset_final_energy(name: &str) -> Option<f64> {
    match name {
        "taylor-green-2d" => Some(6.615793676492),
        "stokes-mode" => Some(9.388258114498),
        "forced-single-mode" => Some(243.4262684431),
        "random-div-free" => Some(0.4964212390105),
        _ => None,
    }
}

/// Smallest empirical constant of the Besov a-priori bound
/// (`B^{1.5}_{2,2}` observer) on each built-in preset.
///
/// The decaying presets give exactly 1 (the norm never exceeds its initial
/// value); the forced run peaks at the first sample with
/// `(1 - exp(-nu t)) / (nu t)` at `t = 0.1`.
pub fn preset_besov_apriori_constant(name: &str) -> Option<f64> {
    match name {
        "taylor-green-2d" => Some(1.0),
        "stokes-mode" => Some(1.0),
        "forced-single-mode" => Some(0.9950166250832),
        "random-div-free" => Some(1.0),
        _ => None,
    }
}

/// Relative tolerance on the preset regression values.
pub const PRESET_REGRESSION_TOLERANCE: f64 = 0.05;
