//! Discretization of the d-dimensional periodic torus.
//!
//! A [`PeriodicGrid`] owns the sampling of `[0, length)^dim` and the indexing
//! of the discrete wavevectors. Samples live at `x_m = m * length / n` and the
//! wavevector attached to the storage index `i` along one axis is the integer
//! `k = i` for `i < n/2` and `k = i - n` otherwise, scaled by `2*pi / length`.

use thiserror::Error;

/// Largest grid dimension supported; wavevectors are padded to this width.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 2 or 3, got {0}")]
    BadDimension(usize),
    #[error("samples per axis must be a power of two >= 4, got {0}")]
    BadResolution(usize),
    #[error("torus period must be finite and positive, got {0}")]
    BadLength(f64),
}

/// Uniform sampling of the torus `[0, length)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    dim: usize,
    n_per_axis: usize,
    length: f64,
}

impl PeriodicGrid {
    pub fn new(dim: usize, n_per_axis: usize, length: f64) -> Result<Self, GridError> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(GridError::BadDimension(dim));
        }
        if n_per_axis < 4 || !n_per_axis.is_power_of_two() {
            return Err(GridError::BadResolution(n_per_axis));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::BadLength(length));
        }
        Ok(Self {
            dim,
            n_per_axis,
            length,
        })
    }

    /// Grid over the standard torus `[0, 2*pi)^dim`, where wavevectors are integers.
    pub fn standard(dim: usize, n_per_axis: usize) -> Result<Self, GridError> {
        Self::new(dim, n_per_axis, std::f64::consts::TAU)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of samples (= number of spectral coefficients).
    pub fn num_points(&self) -> usize {
        self.n_per_axis.pow(self.dim as u32)
    }

    /// Physical mesh width `length / n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n_per_axis as f64
    }

    /// Quadrature weight of one sample, `(length / n)^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `(2*pi / length)`: converts integer mode numbers to wavevector components.
    pub fn wavevector_scale(&self) -> f64 {
        std::f64::consts::TAU / self.length
    }

    /// Integer mode number along one axis for storage index `i`.
    #[inline]
    pub fn mode_number(&self, i: usize) -> i64 {
        debug_assert!(i < self.n_per_axis);
        if i < self.n_per_axis / 2 {
            i as i64
        } else {
            i as i64 - self.n_per_axis as i64
        }
    }

    /// Per-axis storage indices of the flat index, row-major.
    #[inline]
    pub fn axis_indices(&self, flat: usize) -> [usize; MAX_DIM] {
        let n = self.n_per_axis;
        let mut out = [0usize; MAX_DIM];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % n;
            rest /= n;
        }
        debug_assert_eq!(rest, 0);
        out
    }

    /// Flat index from per-axis storage indices.
    #[inline]
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let n = self.n_per_axis;
        let mut flat = 0usize;
        for axis in 0..self.dim {
            debug_assert!(idx[axis] < n);
            flat = flat * n + idx[axis];
        }
        flat
    }

    /// Integer mode numbers of the flat index (unused axes are 0).
    #[inline]
    pub fn modes(&self, flat: usize) -> [i64; MAX_DIM] {
        let idx = self.axis_indices(flat);
        let mut out = [0i64; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = self.mode_number(idx[axis]);
        }
        out
    }

    /// Wavevector of the flat index (unused axes are 0).
    #[inline]
    pub fn wavevector(&self, flat: usize) -> [f64; MAX_DIM] {
        let scale = self.wavevector_scale();
        let modes = self.modes(flat);
        let mut out = [0.0f64; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = scale * modes[axis] as f64;
        }
        out
    }

    /// Squared magnitude of the wavevector at the flat index.
    #[inline]
    pub fn wavevector_norm2(&self, flat: usize) -> f64 {
        let xi = self.wavevector(flat);
        let mut sum = 0.0;
        for axis in 0..self.dim {
            sum += xi[axis] * xi[axis];
        }
        sum
    }

    /// Flat index of the reflected wavevector `-k` (Nyquist maps to itself).
    #[inline]
    pub fn reflected_index(&self, flat: usize) -> usize {
        let n = self.n_per_axis;
        let idx = self.axis_indices(flat);
        let mut out = [0usize; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = (n - idx[axis]) % n;
        }
        self.flat_index(&out[..self.dim])
    }

    /// Largest resolved wavevector magnitude (at the all-Nyquist corner).
    pub fn max_wavevector_norm(&self) -> f64 {
        let half = (self.n_per_axis / 2) as f64;
        self.wavevector_scale() * half * (self.dim as f64).sqrt()
    }

    /// Physical coordinates of the sample at the flat index.
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.axis_indices(flat);
        let h = self.spacing();
        let mut out = [0.0f64; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = h * idx[axis] as f64;
        }
        out
    }
}
