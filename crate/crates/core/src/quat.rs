//! Quaternion algebra, linearized operators as 4x4 real matrices, their
//! spectra, and bifurcation detection via imaginary-axis crossings of a
//! parameterized operator family.

use nalgebra::Matrix4;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuatError {
    #[error("operator matrix contains non-finite entries")]
    NonFiniteMatrix,
    #[error("eigenvalue iteration failed to converge")]
    EigenIterationFailed,
    #[error("scan range must satisfy mu_lo < mu_hi, got [{lo}, {hi}]")]
    BadRange { lo: f64, hi: f64 },
    #[error("scan needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("crossing tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

/// `q = q0 + q1 i + q2 j + q3 k` with the Hamilton relations
/// `i^2 = j^2 = k^2 = ijk = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub fn norm_sqr(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Magnitude of the vector (imaginary) part.
    pub fn vector_norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            factor * self.w,
            factor * self.x,
            factor * self.y,
            factor * self.z,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl std::ops::Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scaled(-1.0)
    }
}

impl std::ops::Add for Quaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.w + rhs.w,
            self.x + rhs.x,
            self.y + rhs.y,
            self.z + rhs.z,
        )
    }
}

impl std::ops::Mul for Quaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        quat_multiply(&self, &rhs)
    }
}

/// Hamilton product `p * q`.
pub fn quat_multiply(p: &Quaternion, q: &Quaternion) -> Quaternion {
    Quaternion::new(
        p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
        p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
        p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
        p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w,
    )
}

/// How a [`QuatLinearOperator`] was produced. Multiplication operators keep
/// their generator so the spectrum can be evaluated in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    LeftMult(Quaternion),
    RightMult(Quaternion),
    General,
}

/// Linear action on `(q0, q1, q2, q3)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuatLinearOperator {
    matrix: Matrix4<f64>,
    provenance: Provenance,
}

impl QuatLinearOperator {
    pub fn from_matrix(matrix: Matrix4<f64>) -> Self {
        Self {
            matrix,
            provenance: Provenance::General,
        }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn apply(&self, q: &Quaternion) -> Quaternion {
        let v = self.matrix * nalgebra::Vector4::new(q.w, q.x, q.y, q.z);
        Quaternion::new(v[0], v[1], v[2], v[3])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix * factor,
            // Scaling a multiplication operator multiplies its generator.
            provenance: match self.provenance {
                Provenance::LeftMult(a) => Provenance::LeftMult(a.scaled(factor)),
                Provenance::RightMult(a) => Provenance::RightMult(a.scaled(factor)),
                Provenance::General => Provenance::General,
            },
        }
    }
}

/// Matrix of `q -> a * q` in `(q0, q1, q2, q3)` coordinates.
pub fn left_mult_operator(a: &Quaternion) -> QuatLinearOperator {
    let m = Matrix4::new(
        a.w, -a.x, -a.y, -a.z, //
        a.x, a.w, -a.z, a.y, //
        a.y, a.z, a.w, -a.x, //
        a.z, -a.y, a.x, a.w,
    );
    QuatLinearOperator {
        matrix: m,
        provenance: Provenance::LeftMult(*a),
    }
}

/// Matrix of `q -> q * a`.
pub fn right_mult_operator(a: &Quaternion) -> QuatLinearOperator {
    let m = Matrix4::new(
        a.w, -a.x, -a.y, -a.z, //
        a.x, a.w, a.z, -a.y, //
        a.y, -a.z, a.w, a.x, //
        a.z, a.y, -a.x, a.w,
    );
    QuatLinearOperator {
        matrix: m,
        provenance: Provenance::RightMult(*a),
    }
}

/// Perturbation model for [`linearize_about`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationModel {
    LeftMultByBase,
    RightMultByBase,
}

/// Linearization of the advective action of `q_base` on a small
/// perturbation: the corresponding multiplication operator, sign-negated so
/// that a positive real base damps (convention documented here; the spectrum
/// is `-(a0 +- |v| i)` as a set).
pub fn linearize_about(q_base: &Quaternion, model: PerturbationModel) -> QuatLinearOperator {
    let negated = -*q_base;
    match model {
        PerturbationModel::LeftMultByBase => left_mult_operator(&negated),
        PerturbationModel::RightMultByBase => right_mult_operator(&negated),
    }
}

fn sort_eigenvalues(values: &mut [Complex64; 4]) {
    values.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .expect("finite eigenvalues")
    });
}

/// Eigenvalues of the operator, with multiplicity, sorted by
/// `(real part, imaginary part)`.
///
/// Multiplication operators use the closed form `{a0 +- |v| i}`, each with
/// multiplicity two (`M_L(a)^2 - 2 a0 M_L(a) + |a|^2 I = 0` from the Hamilton
/// product); general matrices go through a real Schur iteration, and a
/// non-converging iteration is an error rather than a partial answer.
pub fn spectrum(op: &QuatLinearOperator) -> Result<[Complex64; 4], QuatError> {
    if op.matrix.iter().any(|e| !e.is_finite()) {
        return Err(QuatError::NonFiniteMatrix);
    }
    let mut values = match op.provenance {
        Provenance::LeftMult(a) | Provenance::RightMult(a) => {
            let v = a.vector_norm();
            [
                Complex64::new(a.w, -v),
                Complex64::new(a.w, -v),
                Complex64::new(a.w, v),
                Complex64::new(a.w, v),
            ]
        }
        Provenance::General => {
            let schur = nalgebra::linalg::Schur::try_new(op.matrix, 1e-14, 10_000)
                .ok_or(QuatError::EigenIterationFailed)?;
            let eig = schur.complex_eigenvalues();
            [eig[0], eig[1], eig[2], eig[3]]
        }
    };
    sort_eigenvalues(&mut values);
    Ok(values)
}

/// Largest real part over the spectrum.
pub fn max_real_part(op: &QuatLinearOperator) -> Result<f64, QuatError> {
    Ok(spectrum(op)?
        .iter()
        .fold(f64::NEG_INFINITY, |m, e| m.max(e.re)))
}

/// A one-parameter family of operators to scan for crossings.
pub struct BifurcationScan {
    pub parameter_name: String,
    pub family: Box<dyn Fn(f64) -> QuatLinearOperator + Send + Sync>,
    pub range: (f64, f64),
    pub samples: usize,
}

impl BifurcationScan {
    pub fn new(
        parameter_name: impl Into<String>,
        family: impl Fn(f64) -> QuatLinearOperator + Send + Sync + 'static,
        range: (f64, f64),
        samples: usize,
    ) -> Result<Self, QuatError> {
        if !(range.0 < range.1) {
            return Err(QuatError::BadRange {
                lo: range.0,
                hi: range.1,
            });
        }
        if samples < 2 {
            return Err(QuatError::TooFewSamples(samples));
        }
        Ok(Self {
            parameter_name: parameter_name.into(),
            family: Box::new(family),
            range,
            samples,
        })
    }

    pub fn sample_points(&self) -> Vec<f64> {
        let (lo, hi) = self.range;
        let n = self.samples;
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Parameter value where the maximal real part changes sign.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CrossingRecord {
    pub mu_star: f64,
    /// Nonnegative imaginary part of the critical pair at the crossing
    /// (the Hopf frequency analog).
    pub imag_at_crossing: f64,
}

fn critical_imag(op: &QuatLinearOperator) -> Result<f64, QuatError> {
    let eig = spectrum(op)?;
    let max_re = eig.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.re));
    let scale = eig.iter().fold(0.0f64, |m, e| m.max(e.norm())).max(1.0);
    Ok(eig
        .iter()
        .filter(|e| (e.re - max_re).abs() <= 1e-9 * scale)
        .fold(0.0f64, |m, e| m.max(e.im.abs())))
}

/// Samples `max_real_part` over the scan range and bisects every sign-change
/// bracket down to width `tol`.
///
/// No sign change in the range is an empty result, not an error. The family
/// is assumed continuous in the parameter; discontinuous families may alias
/// crossings between samples.
pub fn find_crossing(scan: &BifurcationScan, tol: f64) -> Result<Vec<CrossingRecord>, QuatError> {
    if !(tol > 0.0) {
        return Err(QuatError::BadTolerance(tol));
    }
    let mus = scan.sample_points();
    let values: Vec<f64> = mus
        .iter()
        .map(|&mu| max_real_part(&(scan.family)(mu)))
        .collect::<Result<_, _>>()?;

    let mut crossings = Vec::new();
    for i in 0..mus.len() - 1 {
        let (mut lo, mut hi) = (mus[i], mus[i + 1]);
        let (mut f_lo, f_hi) = (values[i], values[i + 1]);
        if f_lo == 0.0 {
            // Grid point sits exactly on the axis.
            crossings.push(CrossingRecord {
                mu_star: lo,
                imag_at_crossing: critical_imag(&(scan.family)(lo))?,
            });
            continue;
        }
        if f_lo * f_hi >= 0.0 {
            continue;
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let f_mid = max_real_part(&(scan.family)(mid))?;
            if f_mid == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if f_lo * f_mid < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                f_lo = f_mid;
            }
        }
        let mu_star = 0.5 * (lo + hi);
        crossings.push(CrossingRecord {
            mu_star,
            imag_at_crossing: critical_imag(&(scan.family)(mu_star))?,
        });
    }
    Ok(crossings)
}

/// Named operator families exposed by the command-line scanner.
pub mod families {
    use super::*;

    /// `mu -> L(mu + i)`: max real part is exactly `mu`, crossing at 0 with
    /// unit frequency.
    pub fn left_mult_shift() -> impl Fn(f64) -> QuatLinearOperator + Send + Sync + 'static {
        |mu| left_mult_operator(&Quaternion::new(mu, 1.0, 0.0, 0.0))
    }

    /// Two planar rotation blocks (rates `omega` and `2 omega`) shifted by
    /// `mu` on the diagonal: eigenvalues `mu +- i omega`, `mu +- 2 i omega`.
    pub fn rotation_shift(omega: f64) -> impl Fn(f64) -> QuatLinearOperator + Send + Sync + 'static {
        move |mu| {
            let m = Matrix4::new(
                mu, -omega, 0.0, 0.0, //
                omega, mu, 0.0, 0.0, //
                0.0, 0.0, mu, -2.0 * omega, //
                0.0, 0.0, 2.0 * omega, mu,
            );
            QuatLinearOperator::from_matrix(m)
        }
    }

    pub fn by_name(
        name: &str,
    ) -> Option<Box<dyn Fn(f64) -> QuatLinearOperator + Send + Sync + 'static>> {
        match name {
            "leftmult-shift" => Some(Box::new(left_mult_shift())),
            "rotation-shift" => Some(Box::new(rotation_shift(1.0))),
            _ => None,
        }
    }
}
