use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::{EXP_DEGENERATE_CUTOFF, SINGULARITY_REL};

/// A real 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

/// Eigenvalues of a real 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eigenvalues2 {
    Real(f64, f64),
    /// `re ± i·im` with `im > 0`.
    Complex { re: f64, im: f64 },
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Mat2::new(a, 0.0, 0.0, b)
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m11, self.m21, self.m12, self.m22)
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Magnitude of the two products that form the determinant. Used as the
    /// reference scale for singularity tests; unchanged by diagonal rescaling
    /// of rows and columns, unlike any matrix norm.
    pub fn det_scale(&self) -> f64 {
        (self.m11 * self.m22).abs() + (self.m12 * self.m21).abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.m11
            .abs()
            .max(self.m12.abs())
            .max(self.m21.abs())
            .max(self.m22.abs())
    }

    pub fn frobenius(&self) -> f64 {
        (self.m11 * self.m11 + self.m12 * self.m12 + self.m21 * self.m21 + self.m22 * self.m22)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.m11 == 0.0 && self.m12 == 0.0 && self.m21 == 0.0 && self.m22 == 0.0
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    /// Typical rate of the linear flow generated by this matrix:
    /// `max(|m11|, |m22|) + sqrt(|m12·m21|)`. Unchanged by the unit
    /// rescaling `S⁻¹AS` with diagonal `S`, so it is meaningful in SI mode
    /// where `m12 = 1/m` is huge and `m21 = −mω²` tiny.
    pub fn rate_scale(&self) -> f64 {
        self.m11.abs().max(self.m22.abs()) + (self.m12 * self.m21).abs().sqrt()
    }

    /// `((m11 − m22)/2)² + m12·m21`: the squared eigenvalue offset from the
    /// mean of the spectrum.
    fn discriminant(&self) -> f64 {
        let h = 0.5 * (self.m11 - self.m22);
        h * h + self.m12 * self.m21
    }

    pub fn eigenvalues(&self) -> Eigenvalues2 {
        let mu = 0.5 * self.trace();
        let q = self.discriminant();
        if q >= 0.0 {
            let s = q.sqrt();
            // larger-magnitude root first, the other from the determinant
            let big = if mu >= 0.0 { mu + s } else { mu - s };
            let small = if big != 0.0 { self.det() / big } else { 0.0 };
            if mu >= 0.0 {
                Eigenvalues2::Real(big, small)
            } else {
                Eigenvalues2::Real(small, big)
            }
        } else {
            Eigenvalues2::Complex {
                re: mu,
                im: (-q).sqrt(),
            }
        }
    }

    /// Largest real part of the spectrum.
    pub fn max_real_part(&self) -> f64 {
        match self.eigenvalues() {
            Eigenvalues2::Real(a, b) => a.max(b),
            Eigenvalues2::Complex { re, .. } => re,
        }
    }

    pub fn is_hurwitz(&self) -> bool {
        self.max_real_part() < 0.0
    }

    pub fn spectral_radius(&self) -> f64 {
        match self.eigenvalues() {
            Eigenvalues2::Real(a, b) => a.abs().max(b.abs()),
            Eigenvalues2::Complex { re, im } => re.hypot(im),
        }
    }

    /// `e^{tA}` by the closed 2×2 formula.
    ///
    /// With `A = μI + N`, `μ = tr A / 2`, the traceless part squares to
    /// `N² = q I`, so `e^{tN} = C I + S N` where `(C, S)` are
    /// `(cosh, sinh/√q)` for `q > 0` and `(cos, sin/√−q)` for `q < 0`.
    /// Near `q·t² = 0` both are replaced by their Taylor series.
    pub fn exp(&self, t: f64) -> Mat2 {
        let mu = 0.5 * self.trace();
        let q = self.discriminant();
        let z = q * t * t;
        let (c, s) = if z > EXP_DEGENERATE_CUTOFF {
            let r = q.sqrt();
            ((r * t).cosh(), (r * t).sinh() / r)
        } else if z < -EXP_DEGENERATE_CUTOFF {
            let r = (-q).sqrt();
            ((r * t).cos(), (r * t).sin() / r)
        } else {
            (
                1.0 + z / 2.0 + z * z / 24.0,
                t * (1.0 + z / 6.0 + z * z / 120.0),
            )
        };
        let g = (mu * t).exp();
        let n11 = self.m11 - mu;
        let n22 = self.m22 - mu;
        Mat2::new(
            g * (c + s * n11),
            g * s * self.m12,
            g * s * self.m21,
            g * (c + s * n22),
        )
    }

    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.m22, -self.m12, -self.m21, self.m11)
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        let scale = self.det_scale();
        if det == 0.0 || det.abs() <= SINGULARITY_REL * scale || !det.is_finite() {
            return Err(Error::SingularMatrix { det, scale });
        }
        Ok(self.adjugate().scale(1.0 / det))
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{:e}, {:e}], [{:e}, {:e}]]",
            self.m11, self.m12, self.m21, self.m22
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 + o.m11,
            self.m12 + o.m12,
            self.m21 + o.m21,
            self.m22 + o.m22,
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 - o.m11,
            self.m12 - o.m12,
            self.m21 - o.m21,
            self.m22 - o.m22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }
}

impl Mul<[f64; 2]> for Mat2 {
    type Output = [f64; 2];
    fn mul(self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }
}

/// Symmetric 2×2 matrix stored by its three independent entries.
///
/// Covariance matrices use `(xx, xp, pp)` for the position variance, the
/// symmetrized cross covariance and the momentum variance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat2 {
    pub xx: f64,
    pub xp: f64,
    pub pp: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2::new(0.0, 0.0, 0.0);
    pub const IDENTITY: SymMat2 = SymMat2::new(1.0, 0.0, 1.0);

    pub const fn new(xx: f64, xp: f64, pp: f64) -> Self {
        SymMat2 { xx, xp, pp }
    }

    pub const fn diag(xx: f64, pp: f64) -> Self {
        SymMat2::new(xx, 0.0, pp)
    }

    pub fn to_mat2(&self) -> Mat2 {
        Mat2::new(self.xx, self.xp, self.xp, self.pp)
    }

    /// Symmetric part of a general matrix. Only for intermediate results
    /// that are symmetric in exact arithmetic.
    pub fn symmetric_part(m: &Mat2) -> SymMat2 {
        SymMat2::new(m.m11, 0.5 * (m.m12 + m.m21), m.m22)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.pp - self.xp * self.xp
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.pp
    }

    pub fn scale(&self, s: f64) -> SymMat2 {
        SymMat2::new(self.xx * s, self.xp * s, self.pp * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.xp.abs()).max(self.pp.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xp.is_finite() && self.pp.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.xx == 0.0 && self.xp == 0.0 && self.pp == 0.0
    }

    /// `F σ Fᵀ`, evaluated entrywise so the result is symmetric by construction.
    pub fn congruence(&self, f: &Mat2) -> SymMat2 {
        let (a, b, c, d) = (f.m11, f.m12, f.m21, f.m22);
        SymMat2::new(
            a * a * self.xx + 2.0 * a * b * self.xp + b * b * self.pp,
            a * c * self.xx + (a * d + b * c) * self.xp + b * d * self.pp,
            c * c * self.xx + 2.0 * c * d * self.xp + d * d * self.pp,
        )
    }

    pub fn inverse(&self) -> Result<SymMat2> {
        let det = self.det();
        let scale = (self.xx * self.pp).abs() + self.xp * self.xp;
        if det == 0.0 || det.abs() <= SINGULARITY_REL * scale || !det.is_finite() {
            return Err(Error::SingularMatrix { det, scale });
        }
        Ok(SymMat2::new(self.pp / det, -self.xp / det, self.xx / det))
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        self.xx >= 0.0 && self.pp >= 0.0 && self.det() >= -SINGULARITY_REL * self.xx * self.pp
    }

    /// Quantum physicality: positive variances and `det σ ≥ (ħ/2)²(1 − slack)`.
    pub fn is_physical(&self, hbar: f64, slack: f64) -> bool {
        self.xx > 0.0 && self.pp > 0.0 && self.det() >= 0.25 * hbar * hbar * (1.0 - slack)
    }

    /// Entrywise relative distance in units of the entries themselves. The
    /// cross term is compared against `sqrt(xx·pp)` so the measure does not
    /// mix the position and momentum scales.
    pub fn rel_diff(&self, other: &SymMat2) -> f64 {
        let rel = |a: f64, b: f64, s: f64| {
            if s == 0.0 {
                (a - b).abs()
            } else {
                (a - b).abs() / s
            }
        };
        let sx = self.xx.abs().max(other.xx.abs());
        let sp = self.pp.abs().max(other.pp.abs());
        let sc = (sx * sp).sqrt();
        rel(self.xx, other.xx, sx)
            .max(rel(self.pp, other.pp, sp))
            .max(rel(self.xp, other.xp, sc))
    }
}

impl fmt::Display for SymMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(xx={:e}, xp={:e}, pp={:e})", self.xx, self.xp, self.pp)
    }
}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.xx + o.xx, self.xp + o.xp, self.pp + o.pp)
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.xx - o.xx, self.xp - o.xp, self.pp - o.pp)
    }
}

impl Neg for SymMat2 {
    type Output = SymMat2;
    fn neg(self) -> SymMat2 {
        self.scale(-1.0)
    }
}

impl From<SymMat2> for Mat2 {
    fn from(s: SymMat2) -> Mat2 {
        s.to_mat2()
    }
}
