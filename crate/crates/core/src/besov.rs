//! Besov norms `B^s_{p,q}` from Littlewood-Paley shell data, the `q = inf`
//! supremum variant, Sobolev-equivalence and Bernstein diagnostics, and the
//! Besov-side transform diagnostic.

use thiserror::Error;

use crate::dyadic::{
    build_partition, project_spectral, DyadicPartition, PartitionError, PartitionProfile,
};
use crate::field::PhysicalField;
use crate::fourier::{
    coefficient_modulus_field, forward_transform, inverse_transform_unchecked, sobolev_norm,
    SobolevOrder,
};

#[derive(Debug, Error)]
pub enum BesovError {
    #[error("integrability exponent must satisfy p >= 1 (or inf), got {0}")]
    BadExponent(f64),
    #[error("Besov parameters require p, q >= 1 (or inf) and finite s, got s={s}, p={p}, q={q}")]
    BadParams { s: f64, p: f64, q: f64 },
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Parameters of the Besov space `B^s_{p,q}`; `p` and `q` admit `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self, BesovError> {
        let exponent_ok = |e: f64| e >= 1.0 && !e.is_nan();
        if !s.is_finite() || !exponent_ok(p) || !exponent_ok(q) {
            return Err(BesovError::BadParams { s, p, q });
        }
        Ok(Self { s, p, q })
    }
}

/// Per-shell `L^p` norms `(j, ||Delta_j f||_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellNormProfile {
    values: Vec<(i32, f64)>,
}

impl ShellNormProfile {
    pub fn new(values: Vec<(i32, f64)>) -> Self {
        debug_assert!(values.iter().all(|(_, v)| *v >= 0.0));
        Self { values }
    }

    pub fn values(&self) -> &[(i32, f64)] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `L^p` quadrature norms of every shell projection of `f`.
pub fn shell_lp_norms(
    partition: &DyadicPartition,
    field: &PhysicalField,
    p: f64,
) -> Result<ShellNormProfile, BesovError> {
    if !(p >= 1.0) {
        return Err(BesovError::BadExponent(p));
    }
    partition.check_grid(field.grid())?;
    let spectrum = forward_transform(field);
    let mut values = Vec::with_capacity(partition.num_shells());
    for j in partition.shells() {
        let block = project_spectral(partition, &spectrum, j)?;
        let norm = inverse_transform_unchecked(&block).lp_norm(p);
        values.push((j, norm));
    }
    Ok(ShellNormProfile::new(values))
}

/// Weighted `l^q` aggregation `( sum_j (2^{js} ||Delta_j f||_p)^q )^{1/q}`;
/// `q = inf` takes the supremum. Shells with zero norm carry no information
/// and are skipped.
pub fn besov_norm(profile: &ShellNormProfile, params: &BesovParams) -> f64 {
    let terms: Vec<f64> = profile
        .values
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(j, v)| 2f64.powi(*j).powf(params.s) * v)
        .collect();
    if terms.is_empty() {
        return 0.0;
    }
    let sup = terms.iter().fold(0.0f64, |m, t| m.max(*t));
    if params.q.is_infinite() || sup == 0.0 {
        return sup;
    }
    // Factor out the largest term so large q cannot overflow.
    let sum: f64 = terms.iter().map(|t| (t / sup).powf(params.q)).sum();
    sup * sum.powf(1.0 / params.q)
}

/// Besov vs Sobolev norm of the same field at `p = q = 2`.
#[derive(Debug, Clone, Copy)]
pub struct EquivalenceReport {
    pub besov: f64,
    pub sobolev: f64,
    pub ratio: f64,
    /// Zero field: the ratio is reported as 1 by convention.
    pub degenerate: bool,
}

/// Compares `B^s_{2,2}` (energy-mode default partition) against `H^s`.
pub fn sobolev_equivalence_report(
    field: &PhysicalField,
    s: f64,
) -> Result<EquivalenceReport, BesovError> {
    let partition = build_partition(*field.grid(), PartitionProfile::energy())?;
    sobolev_equivalence_report_with(&partition, field, s)
}

/// Same report against a caller-supplied partition (must be energy mode for
/// the `s = 0` ratio to be exactly one).
pub fn sobolev_equivalence_report_with(
    partition: &DyadicPartition,
    field: &PhysicalField,
    s: f64,
) -> Result<EquivalenceReport, BesovError> {
    let params = BesovParams::new(s, 2.0, 2.0)?;
    let profile = shell_lp_norms(partition, field, 2.0)?;
    let besov = besov_norm(&profile, &params);
    let sobolev = sobolev_norm(
        field,
        SobolevOrder::new(s).expect("finite s checked by BesovParams"),
    );
    if sobolev == 0.0 {
        return Ok(EquivalenceReport {
            besov,
            sobolev,
            ratio: 1.0,
            degenerate: true,
        });
    }
    Ok(EquivalenceReport {
        besov,
        sobolev,
        ratio: besov / sobolev,
        degenerate: false,
    })
}

/// Per-shell Bernstein quotients
/// `||Delta_j f||_p / (2^{j n (1/p - 1/2)} ||Delta_j f||_2)`, with `0/0 -> 0`.
pub fn bernstein_ratio(
    partition: &DyadicPartition,
    field: &PhysicalField,
    p: f64,
) -> Result<Vec<(i32, f64)>, BesovError> {
    if !(p >= 1.0) {
        return Err(BesovError::BadExponent(p));
    }
    let n = partition.grid().dim() as f64;
    let exponent = n * (1.0 / p - 0.5); // 1/p = 0 at p = inf
    let lp = shell_lp_norms(partition, field, p)?;
    let l2 = shell_lp_norms(partition, field, 2.0)?;
    Ok(lp
        .values()
        .iter()
        .zip(l2.values())
        .map(|((j, vp), (_, v2))| {
            let ratio = if *v2 == 0.0 {
                0.0
            } else {
                vp / (2f64.powi(*j).powf(exponent) * v2)
            };
            (*j, ratio)
        })
        .collect())
}

/// Both sides of the Besov-space transform diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct BesovPlancherelDiagnostic {
    /// Besov norm of the field itself.
    pub lhs: f64,
    /// Besov norm of its coefficient-modulus field laid out on the grid.
    pub rhs: f64,
}

/// Evaluates the Besov norm of `f` and of the (rescaled) moduli of its
/// Fourier coefficients placed on the physical grid in wavevector order.
///
/// The two values coincide (to rounding) only at `p = q = 2, s = 0`, where
/// both reduce to the Plancherel identity; for any other parameters the pair
/// is reported for inspection and nothing is asserted.
pub fn extended_plancherel_besov_diagnostic(
    field: &PhysicalField,
    params: &BesovParams,
) -> Result<BesovPlancherelDiagnostic, BesovError> {
    let partition = build_partition(*field.grid(), PartitionProfile::energy())?;
    let lhs = besov_norm(&shell_lp_norms(&partition, field, params.p)?, params);
    let modulus = coefficient_modulus_field(&forward_transform(field));
    let rhs = besov_norm(&shell_lp_norms(&partition, &modulus, params.p)?, params);
    Ok(BesovPlancherelDiagnostic { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::PartitionMode;
    use crate::grid::PeriodicGrid;
    use crate::synth::{gaussian_spectrum_field, random_field};
    use crate::SpectralField;

    fn grid64() -> PeriodicGrid {
        PeriodicGrid::standard(2, 64).unwrap()
    }

    fn energy_partition() -> DyadicPartition {
        build_partition(grid64(), PartitionProfile::energy()).unwrap()
    }

    fn centered_mode(amp: f64) -> PhysicalField {
        // |xi| = 4 = 2^2 sits at the flat center of annulus j = 2.
        inverse_transform_unchecked(&SpectralField::cosine_mode(grid64(), &[4, 0], amp, 0.0))
    }

    #[test]
    fn rejects_bad_exponents() {
        let partition = energy_partition();
        let f = random_field(grid64(), 0);
        assert!(matches!(
            shell_lp_norms(&partition, &f, 0.5),
            Err(BesovError::BadExponent(_))
        ));
        assert!(BesovParams::new(1.0, 0.0, 2.0).is_err());
        assert!(BesovParams::new(f64::NAN, 2.0, 2.0).is_err());
        assert!(BesovParams::new(1.0, f64::INFINITY, f64::INFINITY).is_ok());
    }

    #[test]
    fn zero_field_has_zero_shell_norms_and_besov_norm() {
        let partition = energy_partition();
        let f = PhysicalField::zero(grid64());
        let profile = shell_lp_norms(&partition, &f, 2.0).unwrap();
        assert!(profile.values().iter().all(|(_, v)| *v == 0.0));
        let params = BesovParams::new(1.0, 2.0, 2.0).unwrap();
        assert_eq!(besov_norm(&profile, &params), 0.0);
    }

    #[test]
    fn single_mode_shell_norm_matches_l2() {
        let partition = energy_partition();
        let amp = 2.0;
        let f = centered_mode(amp);
        let profile = shell_lp_norms(&partition, &f, 2.0).unwrap();
        for (j, v) in profile.values() {
            if *j == 2 {
                assert!((v - f.l2_norm()).abs() / f.l2_norm() < 1e-12);
            } else {
                assert!(*v < 1e-12);
            }
        }
    }

    #[test]
    fn shell_l2_norms_square_sum_to_energy_in_energy_mode() {
        let partition = energy_partition();
        let f = random_field(grid64(), 17);
        let profile = shell_lp_norms(&partition, &f, 2.0).unwrap();
        let total: f64 = profile.values().iter().map(|(_, v)| v * v).sum();
        let expected = f.l2_norm().powi(2);
        assert!((total - expected).abs() / expected < 1e-10);
    }

    #[test]
    fn one_nonzero_shell_gives_weighted_value_for_all_q() {
        let j0 = 3;
        let v = 0.8;
        let profile = ShellNormProfile::new(vec![(-1, 0.0), (2, 0.0), (j0, v), (4, 0.0)]);
        for s in [-1.0, 0.0, 1.5] {
            let expected = 2f64.powi(j0).powf(s) * v;
            for q in [1.0, 2.0, 7.5, f64::INFINITY] {
                let params = BesovParams::new(s, 2.0, q).unwrap();
                let got = besov_norm(&profile, &params);
                assert!((got - expected).abs() < 1e-14, "s={s} q={q}");
            }
        }
    }

    #[test]
    fn besov_norm_is_monotone_nonincreasing_in_q() {
        let partition = energy_partition();
        let f = random_field(grid64(), 23);
        let profile = shell_lp_norms(&partition, &f, 2.0).unwrap();
        let mut last = f64::INFINITY;
        for q in [1.0, 1.5, 2.0, 4.0, 16.0, 64.0, f64::INFINITY] {
            let params = BesovParams::new(0.7, 2.0, q).unwrap();
            let value = besov_norm(&profile, &params);
            assert!(value <= last * (1.0 + 1e-13), "q={q}");
            last = value;
        }
    }

    #[test]
    fn large_finite_q_approaches_supremum_from_above() {
        let partition = energy_partition();
        for seed in 0..10u64 {
            let f = random_field(grid64(), seed);
            let profile = shell_lp_norms(&partition, &f, 2.0).unwrap();
            let q64 = besov_norm(&profile, &BesovParams::new(1.0, 2.0, 64.0).unwrap());
            let qinf = besov_norm(&profile, &BesovParams::new(1.0, 2.0, f64::INFINITY).unwrap());
            assert!(q64 >= qinf * (1.0 - 1e-13));
            assert!((q64 - qinf).abs() <= 0.5 * qinf);
        }
    }

    #[test]
    fn besov_norm_does_not_overflow_at_huge_q() {
        let profile = ShellNormProfile::new(vec![(0, 1e5), (1, 9e4), (2, 1e3)]);
        let params = BesovParams::new(2.0, 2.0, 64.0).unwrap();
        let value = besov_norm(&profile, &params);
        assert!(value.is_finite());
        let sup = besov_norm(&profile, &BesovParams::new(2.0, 2.0, f64::INFINITY).unwrap());
        assert!(value >= sup && value < 2.0 * sup);
    }

    #[test]
    fn besov_norm_is_absolutely_homogeneous() {
        let partition = energy_partition();
        let f = random_field(grid64(), 29);
        let params = BesovParams::new(1.2, 2.0, 3.0).unwrap();
        let base = besov_norm(&shell_lp_norms(&partition, &f, params.p).unwrap(), &params);
        let scaled = besov_norm(
            &shell_lp_norms(&partition, &f.scaled(-3.25), params.p).unwrap(),
            &params,
        );
        assert!((scaled - 3.25 * base).abs() / (3.25 * base) < 1e-13);
    }

    #[test]
    fn equivalence_ratio_is_one_at_s_zero_energy_mode() {
        let f = random_field(grid64(), 31);
        let report = sobolev_equivalence_report(&f, 0.0).unwrap();
        assert!(!report.degenerate);
        assert!((report.ratio - 1.0).abs() < 1e-10, "ratio {}", report.ratio);
    }

    #[test]
    fn equivalence_ratio_is_scale_invariant_and_closed_form_on_single_mode() {
        let f = centered_mode(1.0);
        let s = 1.3;
        let report = sobolev_equivalence_report(&f, s).unwrap();
        let scaled = sobolev_equivalence_report(&f.scaled(7.0), s).unwrap();
        assert!((report.ratio - scaled.ratio).abs() < 1e-13);
        // Single mode at |xi_0| = 4 in shell j0 = 2.
        let expected = 2f64.powi(2).powf(s) / (1.0 + 16.0f64).powf(s / 2.0);
        assert!((report.ratio - expected).abs() / expected < 1e-10);
    }

    #[test]
    fn zero_field_equivalence_is_flagged_degenerate() {
        let report = sobolev_equivalence_report(&PhysicalField::zero(grid64()), 1.0).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.ratio, 1.0);
    }

    #[test]
    fn bernstein_ratio_is_one_at_p2_and_zero_on_empty_shells() {
        let partition = energy_partition();
        let f = centered_mode(1.5);
        let ratios = bernstein_ratio(&partition, &f, 2.0).unwrap();
        let l2 = shell_lp_norms(&partition, &f, 2.0).unwrap();
        for ((j, r), (_, v2)) in ratios.iter().zip(l2.values()) {
            // Shells that hold only transform round-off are not energetic.
            if *v2 > 1e-12 * f.l2_norm() {
                assert_eq!(*j, 2);
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
        let zeros = bernstein_ratio(&partition, &PhysicalField::zero(grid64()), 1.0).unwrap();
        assert!(zeros.iter().all(|(_, r)| *r == 0.0));
    }

    #[test]
    fn bernstein_ratios_are_bounded_on_random_fields() {
        let partition = energy_partition();
        // Hoelder on the torus bounds the p=1 quotient by vol^{1/2} * 2^{-j};
        // the sharp j-independent bound over the shell family is attained by
        // the near-constant low block at 2 * vol^{1/2} = 4 pi. The frozen
        // regression constant lives in the verification suites.
        let cap = 2.0 * grid64().length() * (1.0 + 1e-9);
        for seed in 0..20u64 {
            let f = random_field(grid64(), seed);
            for (_, r) in bernstein_ratio(&partition, &f, 1.0).unwrap() {
                assert!(r.is_finite() && r >= 0.0 && r < cap, "ratio {r}");
            }
        }
    }

    #[test]
    fn shell_decay_of_smooth_bump_under_weighting() {
        // Gaussian spectral envelope: the weighted shell norms must fall off
        // over the last three resolved shells for every s <= 2.
        let partition =
            build_partition(grid64(), PartitionProfile::reconstruction()).unwrap();
        for seed in [1u64, 2, 3] {
            let f = gaussian_spectrum_field(grid64(), seed, 5.0);
            let profile = shell_lp_norms(&partition, &f, 2.0).unwrap();
            for s in [-1.0, 0.0, 1.0, 2.0] {
                let weighted: Vec<f64> = profile
                    .values()
                    .iter()
                    .map(|(j, v)| 2f64.powi(*j).powf(s) * v)
                    .collect();
                let m = weighted.len();
                assert!(weighted[m - 2] < weighted[m - 3]);
                assert!(weighted[m - 1] < weighted[m - 2]);
            }
        }
    }

    #[test]
    fn besov_transform_diagnostic_reduces_to_plancherel() {
        let f = random_field(grid64(), 41);
        let params = BesovParams::new(0.0, 2.0, 2.0).unwrap();
        let d = extended_plancherel_besov_diagnostic(&f, &params).unwrap();
        assert!((d.lhs - d.rhs).abs() / d.lhs < 1e-10);

        let zero = PhysicalField::zero(grid64());
        let dz = extended_plancherel_besov_diagnostic(&zero, &params).unwrap();
        assert_eq!((dz.lhs, dz.rhs), (0.0, 0.0));

        // Generic parameters: both sides reported, nothing asserted.
        let generic = BesovParams::new(1.0, 4.0, 3.0).unwrap();
        let dg = extended_plancherel_besov_diagnostic(&f, &generic).unwrap();
        assert!(dg.lhs.is_finite() && dg.rhs.is_finite());
    }

    #[test]
    fn profile_mode_is_respected() {
        let recon = build_partition(grid64(), PartitionProfile::reconstruction()).unwrap();
        assert_eq!(recon.mode(), PartitionMode::Reconstruction);
        let f = random_field(grid64(), 47);
        // Reconstruction-mode shell l2 norms do not satisfy exact additivity;
        // the energy partition does (covered above). Here just exercise the
        // code path.
        let profile = shell_lp_norms(&recon, &f, f64::INFINITY).unwrap();
        assert!(profile.values().iter().all(|(_, v)| v.is_finite()));
    }
}
