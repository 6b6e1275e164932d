//! Littlewood-Paley decomposition: a dyadic partition of unity in frequency,
//! the shell projections `Delta_j`, and their reconstruction/energy residuals.
//!
//! The partition is inhomogeneous: a finite grid resolves finitely many
//! annuli, so the doubly infinite family is replaced by one low-frequency
//! block (indexed `j_min - 1`) plus annuli `j = 0 .. j_max`, with the top
//! block extended outward so the family sums to one on every resolved
//! wavevector. The multipliers are radial samples of smooth cutoffs glued
//! from `t -> exp(-1/t)` and telescoped, so the mode-appropriate sum is one
//! exactly by construction.

use thiserror::Error;

use crate::field::{FieldError, PhysicalField};
use crate::fourier::{forward_transform, inverse_transform_unchecked};
use crate::grid::PeriodicGrid;
use crate::SpectralField;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("annulus bounds must satisfy 0 < c1 < 1 < c2 and 2*c1 < c2, got c1={c1}, c2={c2}")]
    BadBounds { c1: f64, c2: f64 },
    #[error("grid with n_per_axis={0} is too small to host one annulus (need >= 8)")]
    GridTooSmall(usize),
    #[error("shell index {j} out of range; valid shells are {lo}..={hi}")]
    ShellOutOfRange { j: i32, lo: i32, hi: i32 },
    #[error("operation requires a {required:?}-mode partition, got {got:?}")]
    WrongMode {
        required: PartitionMode,
        got: PartitionMode,
    },
    #[error("partition and field live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Which power of the multipliers telescopes to one.
///
/// `Reconstruction` gives `sum_j phi_j = 1` (so the shell projections sum back
/// to the field); `Energy` gives `sum_j phi_j^2 = 1` (so shell energies add up
/// to the total). One profile cannot do both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    Reconstruction,
    Energy,
}

/// Annulus bounds and mode for a dyadic partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionProfile {
    pub mode: PartitionMode,
    pub c1: f64,
    pub c2: f64,
}

impl PartitionProfile {
    pub fn new(mode: PartitionMode, c1: f64, c2: f64) -> Result<Self, PartitionError> {
        // c1 < c2/2 leaves room for the smooth transition between the nested
        // cutoffs; without it the difference profile would go negative.
        if !(c1 > 0.0 && c1 < 1.0 && c2 > 1.0 && 2.0 * c1 < c2)
            || !c1.is_finite()
            || !c2.is_finite()
        {
            return Err(PartitionError::BadBounds { c1, c2 });
        }
        Ok(Self { mode, c1, c2 })
    }

    /// Standard annuli `[2^{j-1}, 2^{j+1}]`.
    pub fn reconstruction() -> Self {
        Self {
            mode: PartitionMode::Reconstruction,
            c1: 0.5,
            c2: 2.0,
        }
    }

    pub fn energy() -> Self {
        Self {
            mode: PartitionMode::Energy,
            c1: 0.5,
            c2: 2.0,
        }
    }
}

/// The sampled multiplier family `phi_j` on a grid.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: PeriodicGrid,
    profile: PartitionProfile,
    j_min: i32,
    j_max: i32,
    /// `multipliers[0]` is the low block (shell `j_min - 1`), then `j = j_min ..= j_max`.
    multipliers: Vec<Vec<f64>>,
}

/// `C^inf` step: 0 for `t <= 0`, 1 for `t >= 1`, strictly monotone between.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Build the partition; fails if the grid cannot host one annulus.
pub fn build_partition(
    grid: PeriodicGrid,
    profile: PartitionProfile,
) -> Result<DyadicPartition, PartitionError> {
    PartitionProfile::new(profile.mode, profile.c1, profile.c2)?;
    if grid.n_per_axis() < 8 {
        return Err(PartitionError::GridTooSmall(grid.n_per_axis()));
    }
    let j_min = 0i32;
    let j_max = grid.max_wavevector_norm().log2().floor().max(0.0) as i32;

    // Nested cutoffs chi_j(xi) = chi(|xi| / 2^j) with chi = 1 on [0, c1] and
    // 0 on [c2/2, inf). Shells telescope: low = chi_0, middle = chi_{j+1} -
    // chi_j, top = 1 - chi_{j_max}, so the sum is 1 identically.
    let c1 = profile.c1;
    let b = profile.c2 / 2.0;
    let chi = move |r: f64| smooth_step((b - r) / (b - c1));

    let num_shells = (j_max - j_min + 2) as usize;
    let points = grid.num_points();
    let mut multipliers = vec![vec![0.0f64; points]; num_shells];
    for flat in 0..points {
        let r = grid.wavevector_norm2(flat).sqrt();
        let mut chi_prev = chi(r); // chi_0
        multipliers[0][flat] = chi_prev;
        for j in j_min..=j_max {
            let value = if j == j_max {
                1.0 - chi_prev
            } else {
                let chi_next = chi(r / 2f64.powi(j + 1));
                let v = chi_next - chi_prev;
                chi_prev = chi_next;
                v
            };
            // The smooth step is monotone, so the telescoped difference is
            // nonnegative up to rounding.
            let v = value.max(0.0);
            multipliers[(j - j_min + 1) as usize][flat] = match profile.mode {
                PartitionMode::Reconstruction => v,
                PartitionMode::Energy => v.sqrt(),
            };
        }
    }

    Ok(DyadicPartition {
        grid,
        profile,
        j_min,
        j_max,
        multipliers,
    })
}

impl DyadicPartition {
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn profile(&self) -> &PartitionProfile {
        &self.profile
    }

    pub fn mode(&self) -> PartitionMode {
        self.profile.mode
    }

    /// Index of the low-frequency block.
    pub fn low_shell(&self) -> i32 {
        self.j_min - 1
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// All shell indices: the low block followed by `j_min ..= j_max`.
    pub fn shells(&self) -> impl Iterator<Item = i32> + '_ {
        (self.j_min - 1)..=self.j_max
    }

    pub fn num_shells(&self) -> usize {
        self.multipliers.len()
    }

    fn slot(&self, j: i32) -> Result<usize, PartitionError> {
        if j < self.j_min - 1 || j > self.j_max {
            return Err(PartitionError::ShellOutOfRange {
                j,
                lo: self.j_min - 1,
                hi: self.j_max,
            });
        }
        Ok((j - (self.j_min - 1)) as usize)
    }

    /// Multiplier samples of shell `j` over all wavevectors.
    pub fn multiplier(&self, j: i32) -> Result<&[f64], PartitionError> {
        Ok(&self.multipliers[self.slot(j)?])
    }

    /// Worst pointwise defect of the mode-appropriate partition sum.
    pub fn partition_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for flat in 0..self.grid.num_points() {
            let mut sum = 0.0;
            for shell in &self.multipliers {
                let m = shell[flat];
                sum += match self.profile.mode {
                    PartitionMode::Reconstruction => m,
                    PartitionMode::Energy => m * m,
                };
            }
            worst = worst.max((sum - 1.0).abs());
        }
        worst
    }

    pub(crate) fn require_mode(&self, required: PartitionMode) -> Result<(), PartitionError> {
        if self.profile.mode != required {
            return Err(PartitionError::WrongMode {
                required,
                got: self.profile.mode,
            });
        }
        Ok(())
    }

    pub(crate) fn check_grid(&self, other: &PeriodicGrid) -> Result<(), PartitionError> {
        if &self.grid != other {
            return Err(PartitionError::GridMismatch);
        }
        Ok(())
    }
}

/// Frequency block `Delta_j f`: mask the spectrum with shell `j`'s multiplier.
pub fn project(
    partition: &DyadicPartition,
    field: &PhysicalField,
    j: i32,
) -> Result<PhysicalField, PartitionError> {
    partition.check_grid(field.grid())?;
    let spec = forward_transform(field);
    Ok(inverse_transform_unchecked(&project_spectral(
        partition, &spec, j,
    )?))
}

/// Spectral-side shell mask, for callers that already hold the transform.
pub fn project_spectral(
    partition: &DyadicPartition,
    spectrum: &SpectralField,
    j: i32,
) -> Result<SpectralField, PartitionError> {
    partition.check_grid(spectrum.grid())?;
    let mask = partition.multiplier(j)?;
    let mut out = spectrum.clone();
    for (c, m) in out.coeffs_mut().iter_mut().zip(mask) {
        *c *= m;
    }
    Ok(out)
}

/// `||f - sum_j Delta_j f||_2 / ||f||_2`; zero field gives 0 by convention.
///
/// Only meaningful in `Reconstruction` mode; `Energy` mode is rejected since
/// its multipliers sum to one in square, not in value.
pub fn reconstruction_residual(
    partition: &DyadicPartition,
    field: &PhysicalField,
) -> Result<f64, PartitionError> {
    partition.require_mode(PartitionMode::Reconstruction)?;
    partition.check_grid(field.grid())?;
    let norm = field.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let mut sum = PhysicalField::zero(*field.grid());
    for j in partition.shells() {
        let block = project(partition, field, j)?;
        sum = sum.add_scaled(&block, 1.0)?;
    }
    let defect = field.add_scaled(&sum, -1.0)?;
    Ok(defect.l2_norm() / norm)
}

/// Shell energy `E_j = ||Delta_j f||^2_{L^2}`, evaluated spectrally so that
/// energy-mode additivity `sum_j E_j = ||f||^2` is exact up to rounding.
pub fn shell_energy(
    partition: &DyadicPartition,
    field: &PhysicalField,
    j: i32,
) -> Result<f64, PartitionError> {
    partition.check_grid(field.grid())?;
    shell_energy_spectral(partition, &forward_transform(field), j)
}

pub fn shell_energy_spectral(
    partition: &DyadicPartition,
    spectrum: &SpectralField,
    j: i32,
) -> Result<f64, PartitionError> {
    partition.check_grid(spectrum.grid())?;
    let mask = partition.multiplier(j)?;
    let grid = partition.grid();
    let sum: f64 = spectrum
        .coeffs()
        .iter()
        .zip(mask)
        .map(|(c, m)| m * m * c.norm_sqr())
        .sum();
    Ok(sum * grid.length().powi(grid.dim() as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::random_field;

    fn grid64() -> PeriodicGrid {
        PeriodicGrid::standard(2, 64).unwrap()
    }

    #[test]
    fn smooth_step_endpoints_are_exact() {
        assert_eq!(smooth_step(-0.5), 0.0);
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert_eq!(smooth_step(2.0), 1.0);
        let mid = smooth_step(0.5);
        assert!((mid - 0.5).abs() < 1e-15);
        assert!(smooth_step(0.3) < smooth_step(0.4));
    }

    #[test]
    fn rejects_bad_profiles_and_small_grids() {
        assert!(matches!(
            PartitionProfile::new(PartitionMode::Reconstruction, 0.9, 1.5),
            Err(PartitionError::BadBounds { .. })
        ));
        assert!(matches!(
            PartitionProfile::new(PartitionMode::Reconstruction, 0.0, 2.0),
            Err(PartitionError::BadBounds { .. })
        ));
        let small = PeriodicGrid::standard(2, 4).unwrap();
        assert!(matches!(
            build_partition(small, PartitionProfile::reconstruction()),
            Err(PartitionError::GridTooSmall(4))
        ));
    }

    #[test]
    fn shell_range_matches_resolved_frequencies_at_n64() {
        let partition = build_partition(grid64(), PartitionProfile::reconstruction()).unwrap();
        // Largest |xi| is 32*sqrt(2) ~ 45.3, so the top annulus is j = 5.
        assert_eq!(partition.low_shell(), -1);
        assert_eq!(partition.j_max(), 5);
        assert_eq!(partition.num_shells(), 7);
    }

    #[test]
    fn partition_sums_to_one_in_both_modes() {
        for profile in [PartitionProfile::reconstruction(), PartitionProfile::energy()] {
            let partition = build_partition(grid64(), profile).unwrap();
            assert!(
                partition.partition_residual() <= 1e-12,
                "mode {:?}",
                profile.mode
            );
        }
        // 3D as well.
        let g3 = PeriodicGrid::standard(3, 16).unwrap();
        let partition = build_partition(g3, PartitionProfile::energy()).unwrap();
        assert!(partition.partition_residual() <= 1e-12);
    }

    #[test]
    fn multiplier_at_zero_mode_is_low_block_only() {
        let partition = build_partition(grid64(), PartitionProfile::reconstruction()).unwrap();
        assert_eq!(partition.multiplier(-1).unwrap()[0], 1.0);
        for j in 0..=partition.j_max() {
            assert_eq!(partition.multiplier(j).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn supports_are_confined_to_annuli() {
        let partition = build_partition(grid64(), PartitionProfile::reconstruction()).unwrap();
        let grid = grid64();
        for j in 0..=partition.j_max() {
            let mask = partition.multiplier(j).unwrap();
            let lo = 0.5 * 2f64.powi(j);
            // The top block is extended outward to cover the corner modes.
            let hi = if j == partition.j_max() {
                f64::INFINITY
            } else {
                2.0 * 2f64.powi(j)
            };
            for flat in 0..grid.num_points() {
                let r = grid.wavevector_norm2(flat).sqrt();
                if r < lo || r > hi {
                    assert_eq!(mask[flat], 0.0, "j={j} r={r}");
                }
            }
        }
        // Low block vanishes outside |xi| <= c2.
        let mask = partition.multiplier(-1).unwrap();
        for flat in 0..grid.num_points() {
            if grid.wavevector_norm2(flat).sqrt() > 2.0 {
                assert_eq!(mask[flat], 0.0);
            }
        }
    }

    #[test]
    fn only_adjacent_shells_overlap() {
        let partition = build_partition(grid64(), PartitionProfile::reconstruction()).unwrap();
        let shells: Vec<i32> = partition.shells().collect();
        for &a in &shells {
            for &b in &shells {
                if (a - b).abs() >= 2 {
                    let ma = partition.multiplier(a).unwrap();
                    let mb = partition.multiplier(b).unwrap();
                    let overlap: f64 = ma.iter().zip(mb).map(|(x, y)| x * y).sum();
                    assert_eq!(overlap, 0.0, "shells {a},{b}");
                }
            }
        }
    }

    #[test]
    fn centered_mode_projects_to_its_shell_only() {
        let grid = grid64();
        let partition = build_partition(grid, PartitionProfile::reconstruction()).unwrap();
        // |xi| = 8 = 2^3 sits at the flat center of annulus j = 3.
        let f = crate::fourier::inverse_transform_unchecked(&SpectralField::cosine_mode(
            grid,
            &[8, 0],
            1.0,
            0.0,
        ));
        let own = project(&partition, &f, 3).unwrap();
        for (a, b) in own.samples().iter().zip(f.samples()) {
            assert!((a - b).abs() < 1e-13);
        }
        for j in partition.shells() {
            if (j - 3).abs() >= 2 {
                assert!(project(&partition, &f, j).unwrap().max_abs() < 1e-14);
            }
        }
        // Projection is idempotent there.
        let twice = project(&partition, &own, 3).unwrap();
        for (a, b) in twice.samples().iter().zip(own.samples()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn project_rejects_out_of_range_shells() {
        let partition = build_partition(grid64(), PartitionProfile::reconstruction()).unwrap();
        let f = PhysicalField::zero(grid64());
        match project(&partition, &f, 9) {
            Err(PartitionError::ShellOutOfRange { j: 9, lo: -1, hi: 5 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_field_projects_to_zero_everywhere() {
        let partition = build_partition(grid64(), PartitionProfile::reconstruction()).unwrap();
        let f = PhysicalField::zero(grid64());
        for j in partition.shells() {
            assert_eq!(project(&partition, &f, j).unwrap().max_abs(), 0.0);
            assert_eq!(shell_energy(&partition, &f, j).unwrap(), 0.0);
        }
        assert_eq!(reconstruction_residual(&partition, &f).unwrap(), 0.0);
    }

    #[test]
    fn random_field_reconstructs_from_shells() {
        let partition = build_partition(grid64(), PartitionProfile::reconstruction()).unwrap();
        let f = random_field(grid64(), 21);
        assert!(reconstruction_residual(&partition, &f).unwrap() <= 1e-10);
        let single = crate::fourier::inverse_transform_unchecked(&SpectralField::cosine_mode(
            grid64(),
            &[5, 2],
            1.0,
            0.4,
        ));
        assert!(reconstruction_residual(&partition, &single).unwrap() <= 1e-12);
    }

    #[test]
    fn reconstruction_residual_rejects_energy_mode() {
        let partition = build_partition(grid64(), PartitionProfile::energy()).unwrap();
        let f = random_field(grid64(), 2);
        assert!(matches!(
            reconstruction_residual(&partition, &f),
            Err(PartitionError::WrongMode { .. })
        ));
    }

    #[test]
    fn energy_mode_shells_add_up_to_total_energy() {
        let partition = build_partition(grid64(), PartitionProfile::energy()).unwrap();
        let f = random_field(grid64(), 33);
        let total: f64 = partition
            .shells()
            .map(|j| shell_energy(&partition, &f, j).unwrap())
            .sum();
        let expected = f.l2_norm().powi(2);
        assert!((total - expected).abs() / expected < 1e-10);
    }

    #[test]
    fn single_mode_energy_lands_in_its_shell() {
        let grid = grid64();
        let partition = build_partition(grid, PartitionProfile::energy()).unwrap();
        let amp = 3.0;
        let f = crate::fourier::inverse_transform_unchecked(&SpectralField::cosine_mode(
            grid,
            &[0, 4],
            amp,
            0.0,
        ));
        let e2 = shell_energy(&partition, &f, 2).unwrap();
        let expected = f.l2_norm().powi(2);
        assert!((e2 - expected).abs() / expected < 1e-12);
        for j in partition.shells() {
            if j != 2 {
                assert!(shell_energy(&partition, &f, j).unwrap() < 1e-20);
            }
        }
    }

    #[test]
    fn projection_is_linear() {
        let grid = grid64();
        let partition = build_partition(grid, PartitionProfile::reconstruction()).unwrap();
        let f = random_field(grid, 1);
        let g = random_field(grid, 2);
        let combo = f.add_scaled(&g, 2.5).unwrap();
        let lhs = project(&partition, &combo, 3).unwrap();
        let rhs = project(&partition, &f, 3)
            .unwrap()
            .add_scaled(&project(&partition, &g, 3).unwrap(), 2.5)
            .unwrap();
        let scale = lhs.max_abs().max(1e-300);
        for (a, b) in lhs.samples().iter().zip(rhs.samples()) {
            assert!((a - b).abs() / scale < 1e-12);
        }
    }
}
