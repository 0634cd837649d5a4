//! Symmetric 2x2 phase-space covariance algebra.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Symmetric 2x2 covariance `[[cxx, cxp], [cxp, cpp]]` on phase space.
///
/// Only the three independent entries are stored, so symmetry holds by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub cxx: f64,
    pub cxp: f64,
    pub cpp: f64,
}

impl CorrelationMatrix {
    pub const fn new(cxx: f64, cxp: f64, cpp: f64) -> Self {
        Self { cxx, cxp, cpp }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub const fn diag(cxx: f64, cpp: f64) -> Self {
        Self::new(cxx, 0.0, cpp)
    }

    pub fn det(&self) -> f64 {
        self.cxx * self.cpp - self.cxp * self.cxp
    }

    pub fn trace(&self) -> f64 {
        self.cxx + self.cpp
    }

    pub fn is_zero(&self) -> bool {
        self.cxx == 0.0 && self.cxp == 0.0 && self.cpp == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.cxx.is_finite() && self.cxp.is_finite() && self.cpp.is_finite()
    }

    /// Largest absolute entry; the natural scale for tolerances.
    pub fn scale(&self) -> f64 {
        self.cxx.abs().max(self.cxp.abs()).max(self.cpp.abs())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.cxx + self.cpp);
        let half_diff = 0.5 * (self.cxx - self.cpp);
        let r = half_diff.hypot(self.cxp);
        (mean - r, mean + r)
    }

    /// Eigen-decomposition `(lambda_lo, lambda_hi, angle)` where the
    /// eigenvector of `lambda_hi` is `(cos angle, sin angle)`.
    fn eigen(&self) -> (f64, f64, f64) {
        let (lo, hi) = self.eigenvalues();
        let angle = 0.5 * (2.0 * self.cxp).atan2(self.cxx - self.cpp);
        (lo, hi, angle)
    }

    /// Positive semidefinite up to `tol` (absolute, applied to the smallest
    /// eigenvalue and both diagonal entries).
    pub fn is_psd(&self, tol: f64) -> bool {
        self.cxx >= -tol && self.cpp >= -tol && self.eigenvalues().0 >= -tol
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cxx > 0.0 && self.det() > 0.0
    }

    /// Projects onto the PSD cone by clipping negative eigenvalues to zero.
    pub fn clip_psd(&self) -> Self {
        let (lo, hi, angle) = self.eigen();
        let (lo, hi) = (lo.max(0.0), hi.max(0.0));
        let (s, c) = angle.sin_cos();
        Self::new(
            hi * c * c + lo * s * s,
            (hi - lo) * c * s,
            hi * s * s + lo * c * c,
        )
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self::new(self.cpp / det, -self.cxp / det, self.cxx / det))
    }

    /// Adjugate `[[cpp, -cxp], [-cxp, cxx]]`.
    pub fn adjugate(&self) -> Self {
        Self::new(self.cpp, -self.cxp, self.cxx)
    }

    /// `v^T C v` for `v = (a, b)`.
    pub fn quadratic_form(&self, a: f64, b: f64) -> f64 {
        self.cxx * a * a + 2.0 * self.cxp * a * b + self.cpp * b * b
    }

    /// `S C S^T` for the free-streaming shear `S = [[1, tau], [0, 1]]`.
    pub fn sheared(&self, tau: f64) -> Self {
        Self::new(
            self.cxx + 2.0 * tau * self.cxp + tau * tau * self.cpp,
            self.cxp + tau * self.cpp,
            self.cpp,
        )
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.cxx - other.cxx)
            .abs()
            .max((self.cxp - other.cxp).abs())
            .max((self.cpp - other.cpp).abs())
    }
}

impl Add for CorrelationMatrix {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.cxx + o.cxx, self.cxp + o.cxp, self.cpp + o.cpp)
    }
}

impl Sub for CorrelationMatrix {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.cxx - o.cxx, self.cxp - o.cxp, self.cpp - o.cpp)
    }
}

impl Mul<CorrelationMatrix> for f64 {
    type Output = CorrelationMatrix;
    fn mul(self, c: CorrelationMatrix) -> CorrelationMatrix {
        CorrelationMatrix::new(self * c.cxx, self * c.cxp, self * c.cpp)
    }
}

/// Relative slack used by [`det_condition`] so that matrices built to sit on
/// the boundary (determinant exactly 1/4 in exact arithmetic) are accepted.
pub const DET_CONDITION_SLACK: f64 = 1e-12;

/// Gaussian coarse-graining by `C` turns every Wigner function into a
/// non-negative function iff `det C >= 1/4` (with `C` positive semidefinite).
pub fn det_condition(c: &CorrelationMatrix) -> bool {
    let tol = DET_CONDITION_SLACK * c.scale().max(1.0);
    c.is_psd(tol) && c.det() >= 0.25 - tol
}
