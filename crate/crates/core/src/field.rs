//! Scalar fields in sample space and in frequency space.

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{PeriodicGrid, MAX_DIM};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("expected {expected} values for the grid, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite sample at flat index {index}")]
    NonFiniteSample { index: usize },
    #[error("fields live on different grids")]
    GridMismatch,
}

/// One real-valued component sampled on the grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: PeriodicGrid,
    samples: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: PeriodicGrid, samples: Vec<f64>) -> Result<Self, FieldError> {
        if samples.len() != grid.num_points() {
            return Err(FieldError::LengthMismatch {
                expected: grid.num_points(),
                got: samples.len(),
            });
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(FieldError::NonFiniteSample { index });
        }
        Ok(Self { grid, samples })
    }

    /// Internal constructor for values produced by our own kernels.
    pub(crate) fn from_raw(grid: PeriodicGrid, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.num_points());
        Self { grid, samples }
    }

    pub fn zero(grid: PeriodicGrid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.num_points()])
    }

    /// Sample an analytic function of the physical coordinates.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let samples = (0..grid.num_points())
            .map(|flat| {
                let x = grid.point(flat);
                f(&x[..grid.dim()])
            })
            .collect();
        Self::from_raw(grid, samples)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    /// Discrete `L^2` norm with the quadrature weight `(length/n)^dim`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|s| s * s).sum();
        (sum * self.grid.cell_volume()).sqrt()
    }

    /// Discrete `L^p` quadrature norm; `p = inf` is the sample maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        debug_assert!(p >= 1.0);
        if p.is_infinite() {
            return self.max_abs();
        }
        if p == 2.0 {
            return self.l2_norm();
        }
        let sum: f64 = self.samples.iter().map(|s| s.abs().powf(p)).sum();
        (sum * self.grid.cell_volume()).powf(1.0 / p)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(
            self.grid,
            self.samples.iter().map(|s| s * factor).collect(),
        )
    }

    /// `self + factor * other`; fields must share a grid.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Self::from_raw(self.grid, samples))
    }
}

/// Fourier coefficients of one component, indexed by wavevector in FFT
/// storage order (same cardinality and layout as the samples).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: PeriodicGrid,
    coeffs: Vec<Complex64>,
}

/// Worst deviation from `coeffs(-k) == conj(coeffs(k))`.
#[derive(Debug, Clone, Copy)]
pub struct SymmetryResidual {
    /// Absolute deviation divided by the largest coefficient magnitude.
    pub relative: f64,
    /// Wavevector (integer mode numbers) where the worst deviation occurs.
    pub worst_mode: [i64; MAX_DIM],
}

impl SpectralField {
    pub fn new(grid: PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self, FieldError> {
        if coeffs.len() != grid.num_points() {
            return Err(FieldError::LengthMismatch {
                expected: grid.num_points(),
                got: coeffs.len(),
            });
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(FieldError::NonFiniteSample { index });
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: PeriodicGrid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.num_points());
        Self { grid, coeffs }
    }

    pub fn zero(grid: PeriodicGrid) -> Self {
        Self::from_raw(grid, vec![Complex64::ZERO; grid.num_points()])
    }

    /// Real single mode `amplitude * cos(k . x + phase)`: sets the Hermitian
    /// pair of coefficients at `+k` and `-k`.
    pub fn cosine_mode(grid: PeriodicGrid, k: &[i64], amplitude: f64, phase: f64) -> Self {
        let mut field = Self::zero(grid);
        let n = grid.n_per_axis() as i64;
        let mut idx = [0usize; MAX_DIM];
        let mut idx_neg = [0usize; MAX_DIM];
        for axis in 0..grid.dim() {
            idx[axis] = k[axis].rem_euclid(n) as usize;
            idx_neg[axis] = (-k[axis]).rem_euclid(n) as usize;
        }
        let plus = grid.flat_index(&idx[..grid.dim()]);
        let minus = grid.flat_index(&idx_neg[..grid.dim()]);
        let half = 0.5 * amplitude * Complex64::new(phase.cos(), phase.sin());
        field.coeffs[plus] += half;
        field.coeffs[minus] += half.conj();
        field
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub(crate) fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    /// Discrete `L^2` norm of the represented function, evaluated spectrally:
    /// `sqrt(length^dim * sum |c_k|^2)`. Equals the physical quadrature norm
    /// by the discrete Plancherel identity.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (sum * self.grid.length().powi(self.grid.dim() as i32)).sqrt()
    }

    /// Worst Hermitian-symmetry deviation, relative to the coefficient scale.
    pub fn symmetry_residual(&self) -> SymmetryResidual {
        let scale = self.max_abs().max(1e-300);
        let mut worst = 0.0f64;
        let mut worst_flat = 0usize;
        for flat in 0..self.coeffs.len() {
            let refl = self.grid.reflected_index(flat);
            let dev = (self.coeffs[refl] - self.coeffs[flat].conj()).norm();
            if dev > worst {
                worst = dev;
                worst_flat = flat;
            }
        }
        SymmetryResidual {
            relative: worst / scale,
            worst_mode: self.grid.modes(worst_flat),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::from_raw(self.grid, self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn add_scaled(&self, other: &Self, factor: Complex64) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + factor * b)
            .collect();
        Ok(Self::from_raw(self.grid, coeffs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::standard(2, 8).unwrap()
    }

    #[test]
    fn rejects_wrong_lengths_and_nan() {
        let g = grid();
        assert!(matches!(
            PhysicalField::new(g, vec![0.0; 3]),
            Err(FieldError::LengthMismatch { .. })
        ));
        let mut samples = vec![0.0; g.num_points()];
        samples[5] = f64::NAN;
        assert!(matches!(
            PhysicalField::new(g, samples),
            Err(FieldError::NonFiniteSample { index: 5 })
        ));
    }

    #[test]
    fn cosine_mode_is_hermitian() {
        let f = SpectralField::cosine_mode(grid(), &[1, 3], 2.0, 0.7);
        assert!(f.symmetry_residual().relative < 1e-15);
    }

    #[test]
    fn l2_norm_of_constant_field() {
        let g = grid();
        let f = PhysicalField::from_fn(g, |_| 3.0);
        // |3|^2 * (2 pi)^2, square root.
        let expected = 3.0 * g.length();
        assert!((f.l2_norm() - expected).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_special_cases() {
        let g = grid();
        let f = PhysicalField::from_fn(g, |x| (x[0].sin() * x[1].cos()).abs() + 0.5);
        assert!((f.lp_norm(2.0) - f.l2_norm()).abs() < 1e-14);
        assert!((f.lp_norm(f64::INFINITY) - f.max_abs()).abs() < 1e-14);
    }
}
