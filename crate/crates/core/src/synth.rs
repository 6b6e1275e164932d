//! Seeded synthetic fields for presets, verification suites, and tests.
//!
//! Everything here is deterministic in the seed (ChaCha8), so fixed-seed
//! corpora and regression values are reproducible across runs and platforms.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fft::{transform, Direction};
use crate::field::{PhysicalField, SpectralField};
use crate::fourier::inverse_transform_unchecked;
use crate::grid::PeriodicGrid;

/// Uniform iid samples in `[-1, 1)`.
pub fn random_field(grid: PeriodicGrid, seed: u64) -> PhysicalField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..grid.num_points())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    PhysicalField::from_raw(grid, samples)
}

/// Zeroes every coefficient with a Nyquist component (`k_a = -n/2`).
pub(crate) fn zero_nyquist(field: &mut SpectralField) {
    let grid = *field.grid();
    let nyq = -(grid.n_per_axis() as i64) / 2;
    for (flat, c) in field.coeffs_mut().iter_mut().enumerate() {
        let modes = grid.modes(flat);
        if (0..grid.dim()).any(|a| modes[a] == nyq) {
            *c = Complex64::ZERO;
        }
    }
}

/// Random field with the Nyquist planes removed.
///
/// Odd-order spectral derivatives zero the unpaired Nyquist modes, so
/// identities that compare derivative routes against weight routes hold to
/// rounding only on data without Nyquist content.
pub fn band_limited_field(grid: PeriodicGrid, seed: u64) -> PhysicalField {
    let mut spec = crate::fourier::forward_transform(&random_field(grid, seed));
    zero_nyquist(&mut spec);
    inverse_transform_unchecked(&spec)
}

/// Random-phase field with the isotropic spectral envelope
/// `exp(-|xi|^2 / (2 k0^2))`, Hermitian-symmetrized and Nyquist-free.
pub fn gaussian_spectrum_field(grid: PeriodicGrid, seed: u64, k0: f64) -> PhysicalField {
    inverse_transform_unchecked(&gaussian_spectrum_coeffs(grid, seed, k0))
}

pub(crate) fn gaussian_spectrum_coeffs(
    grid: PeriodicGrid,
    seed: u64,
    k0: f64,
) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs: Vec<Complex64> = (0..grid.num_points())
        .map(|flat| {
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let envelope = (-grid.wavevector_norm2(flat) / (2.0 * k0 * k0)).exp();
            Complex64::new(phase.cos(), phase.sin()) * envelope
        })
        .collect();
    // Hermitian symmetrization: c'(k) = (c(k) + conj(c(-k))) / 2.
    let symmetrized: Vec<Complex64> = (0..coeffs.len())
        .map(|flat| 0.5 * (coeffs[flat] + coeffs[grid.reflected_index(flat)].conj()))
        .collect();
    coeffs = symmetrized;
    let mut field = SpectralField::from_raw(grid, coeffs);
    zero_nyquist(&mut field);
    field
}

/// Random divergence-free velocity components with a Gaussian spectral
/// envelope, zero mean, normalized so the largest pointwise speed is
/// `target_max_speed`. Modes with any `|k_a| > truncation` are zeroed.
pub fn random_div_free(
    grid: PeriodicGrid,
    seed: u64,
    k0: f64,
    truncation: usize,
    target_max_speed: f64,
) -> Vec<SpectralField> {
    let dim = grid.dim();
    let mut comps: Vec<SpectralField> = (0..dim)
        .map(|c| gaussian_spectrum_coeffs(grid, seed.wrapping_add(1000 * c as u64 + 1), k0))
        .collect();
    for comp in &mut comps {
        comp.coeffs_mut()[0] = Complex64::ZERO;
        truncate_modes(comp, truncation);
    }
    leray_project_raw(&grid, &mut comps);
    // Normalize by the measured maximum speed.
    let mut max_speed2 = 0.0f64;
    let physical: Vec<PhysicalField> = comps.iter().map(inverse_transform_unchecked).collect();
    for flat in 0..grid.num_points() {
        let speed2: f64 = physical.iter().map(|f| f.samples()[flat].powi(2)).sum();
        max_speed2 = max_speed2.max(speed2);
    }
    if max_speed2 > 0.0 {
        let scale = Complex64::new(target_max_speed / max_speed2.sqrt(), 0.0);
        for comp in &mut comps {
            *comp = comp.scaled(scale);
        }
    }
    comps
}

/// Zeroes modes with any `|k_a| > truncation`.
pub(crate) fn truncate_modes(field: &mut SpectralField, truncation: usize) {
    let grid = *field.grid();
    let cut = truncation as i64;
    for (flat, c) in field.coeffs_mut().iter_mut().enumerate() {
        let modes = grid.modes(flat);
        if (0..grid.dim()).any(|a| modes[a].abs() > cut) {
            *c = Complex64::ZERO;
        }
    }
}

/// Pointwise projection onto divergence-free fields (shared kernel; the
/// public operation with validation lives in the solver module).
pub(crate) fn leray_project_raw(grid: &PeriodicGrid, comps: &mut [SpectralField]) {
    let dim = grid.dim();
    for flat in 0..grid.num_points() {
        let xi = grid.wavevector(flat);
        let xi2 = grid.wavevector_norm2(flat);
        if xi2 == 0.0 {
            continue;
        }
        let mut div = Complex64::ZERO;
        for (a, comp) in comps.iter().enumerate().take(dim) {
            div += xi[a] * comp.coeffs()[flat];
        }
        let factor = div / xi2;
        for (a, comp) in comps.iter_mut().enumerate().take(dim) {
            comp.coeffs_mut()[flat] -= xi[a] * factor;
        }
    }
}

/// Physical-space white noise transformed once; kept for spectra with flat
/// envelopes where sample-space noise is the natural corpus.
pub fn random_spectrum(grid: PeriodicGrid, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<Complex64> = (0..grid.num_points())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    transform(&grid, &mut data, Direction::Forward);
    let scale = 1.0 / grid.num_points() as f64;
    for c in &mut data {
        *c *= scale;
    }
    SpectralField::from_raw(grid, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic_in_the_seed() {
        let grid = PeriodicGrid::standard(2, 16).unwrap();
        assert_eq!(
            random_field(grid, 42).samples(),
            random_field(grid, 42).samples()
        );
        assert_ne!(
            random_field(grid, 42).samples(),
            random_field(grid, 43).samples()
        );
    }

    #[test]
    fn band_limited_field_has_no_nyquist_content() {
        let grid = PeriodicGrid::standard(2, 16).unwrap();
        let spec = crate::fourier::forward_transform(&band_limited_field(grid, 3));
        for (flat, c) in spec.coeffs().iter().enumerate() {
            let modes = grid.modes(flat);
            if modes[0] == -8 || modes[1] == -8 {
                assert!(c.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn gaussian_spectrum_field_is_real_and_hermitian() {
        let grid = PeriodicGrid::standard(2, 32).unwrap();
        let spec = gaussian_spectrum_coeffs(grid, 5, 4.0);
        assert!(spec.symmetry_residual().relative < 1e-14);
    }

    #[test]
    fn random_div_free_is_divergence_free_and_normalized() {
        let grid = PeriodicGrid::standard(2, 32).unwrap();
        let comps = random_div_free(grid, 9, 4.0, 10, 0.75);
        let mut worst = 0.0f64;
        for flat in 0..grid.num_points() {
            let xi = grid.wavevector(flat);
            let mut div = Complex64::ZERO;
            let mut mag = 0.0f64;
            for (a, comp) in comps.iter().enumerate() {
                div += xi[a] * comp.coeffs()[flat];
                mag += comp.coeffs()[flat].norm_sqr();
            }
            if mag > 0.0 {
                worst = worst.max(div.norm() / mag.sqrt());
            }
        }
        assert!(worst < 1e-12, "divergence {worst}");
        let physical: Vec<PhysicalField> =
            comps.iter().map(inverse_transform_unchecked).collect();
        let mut max_speed2 = 0.0f64;
        for flat in 0..grid.num_points() {
            let s2: f64 = physical.iter().map(|f| f.samples()[flat].powi(2)).sum();
            max_speed2 = max_speed2.max(s2);
        }
        assert!((max_speed2.sqrt() - 0.75).abs() < 1e-12);
    }
}
