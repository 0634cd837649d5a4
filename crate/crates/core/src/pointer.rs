//! Gaussian pointer-state families.
//!
//! A family is fixed by a complex width parameter `alpha` (with positive real
//! part); its members are the shifted and boosted packets
//! `psi_G(q) = (alpha_R / 2pi)^(1/4) exp(-alpha (q - x)^2 / 4 + i p (q - x))`.
//! Every family has a covariance `C_1/4` with determinant exactly 1/4.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Bounds, Error, Result};
use crate::grid::PhaseGrid;
use crate::matrix::CorrelationMatrix;
use crate::par;
use crate::params::SystemParams;

/// Tolerance on the determinant when building a family from a matrix.
pub const FAMILY_DET_TOL: f64 = 1e-9;

/// Pointer packets must fit this many position standard deviations on the
/// position grid.
pub const PACKET_SIGMAS: f64 = 6.0;

/// Norm tolerance for sampled wavefunctions.
pub const WAVEFUNCTION_NORM_TOL: f64 = 1e-9;

/// Set of Gaussian pointer states labelled by complex `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerFamily {
    alpha_r: f64,
    alpha_i: f64,
    params: SystemParams,
}

impl PointerFamily {
    pub fn new(alpha_r: f64, alpha_i: f64, params: SystemParams) -> Result<Self> {
        if !(alpha_r.is_finite() && alpha_r > 0.0) {
            return domain(format!(
                "Re(alpha) must be positive for a normalizable packet, got {alpha_r}"
            ));
        }
        if !alpha_i.is_finite() {
            return domain(format!("Im(alpha) must be finite, got {alpha_i}"));
        }
        Ok(Self {
            alpha_r,
            alpha_i,
            params,
        })
    }

    /// The robust family `alpha_0 = (1 - i) sqrt(2 D m)`.
    pub fn robust(params: SystemParams) -> Self {
        let s = (2.0 * params.d() * params.m()).sqrt();
        Self::new(s, -s, params).expect("robust alpha has positive real part")
    }

    /// Coherent states of width sigma0: real `alpha = 2 / sigma0^2`, with
    /// `C_1/4 = diag(sigma0^2 / 2, 1 / (2 sigma0^2))`.
    pub fn coherent(params: SystemParams) -> Self {
        let s = params.sigma0();
        Self::new(2.0 / (s * s), 0.0, params).expect("positive")
    }

    /// The unique family whose uncertainty matrix is `c` (which must be
    /// positive definite with determinant 1/4).
    pub fn from_matrix(c: &CorrelationMatrix, params: SystemParams) -> Result<Self> {
        if !c.is_positive_definite() {
            return domain(format!("{c:?} is not positive definite"));
        }
        if (c.det() - 0.25).abs() > FAMILY_DET_TOL {
            return domain(format!(
                "a pointer family needs det C = 1/4, got {}",
                c.det()
            ));
        }
        let alpha_r = 1.0 / c.cxx;
        Self::new(alpha_r, -2.0 * c.cxp * alpha_r, params)
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::new(self.alpha_r, self.alpha_i)
    }

    pub fn alpha_r(&self) -> f64 {
        self.alpha_r
    }

    pub fn alpha_i(&self) -> f64 {
        self.alpha_i
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Uncertainty matrix of the fiducial packet,
    /// `(1/alpha_R) [[1, -alpha_I/2], [-alpha_I/2, |alpha|^2/4]]`.
    pub fn c_quarter(&self) -> CorrelationMatrix {
        c_quarter_of(self.alpha_r, self.alpha_i)
    }

    /// Standard deviation of `|psi|^2` in position, `alpha_R^(-1/2)`.
    pub fn position_std(&self) -> f64 {
        self.alpha_r.powf(-0.5)
    }

    /// Human-readable tag for reports.
    pub fn label(&self) -> String {
        format!("alpha={:.6}{:+.6}i", self.alpha_r, self.alpha_i)
    }

    /// Packet amplitude `psi_G(q)`.
    pub fn amplitude(&self, gamma: (f64, f64), q: f64) -> Complex64 {
        let (x, p) = gamma;
        let u = q - x;
        let norm = (self.alpha_r / (2.0 * PI)).powf(0.25);
        let exponent = -self.alpha() * (u * u / 4.0) + Complex64::new(0.0, p * u);
        norm * exponent.exp()
    }
}

fn c_quarter_of(alpha_r: f64, alpha_i: f64) -> CorrelationMatrix {
    let mod2 = alpha_r * alpha_r + alpha_i * alpha_i;
    CorrelationMatrix::new(
        1.0 / alpha_r,
        -alpha_i / (2.0 * alpha_r),
        mod2 / (4.0 * alpha_r),
    )
}

/// `C_1/4` of a family given by its complex parameter.
pub fn c_quarter(alpha_r: f64, alpha_i: f64) -> Result<CorrelationMatrix> {
    if !(alpha_r.is_finite() && alpha_r > 0.0) {
        return domain(format!("Re(alpha) must be positive, got {alpha_r}"));
    }
    Ok(c_quarter_of(alpha_r, alpha_i))
}

pub fn robust_alpha(params: &SystemParams) -> PointerFamily {
    PointerFamily::robust(*params)
}

pub fn family_from_matrix(c: &CorrelationMatrix, params: &SystemParams) -> Result<PointerFamily> {
    PointerFamily::from_matrix(c, *params)
}

/// Uniform position grid `q_j = q_min + j dq`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QGrid {
    pub q_min: f64,
    pub dq: f64,
    pub n: usize,
}

impl QGrid {
    pub fn new(q_min: f64, dq: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return domain(format!("position grid needs at least 2 points, got {n}"));
        }
        if !(dq.is_finite() && dq > 0.0 && q_min.is_finite()) {
            return domain(format!("invalid position grid q_min={q_min}, dq={dq}"));
        }
        Ok(Self { q_min, dq, n })
    }

    /// `n` points covering `[-half, half)`.
    pub fn symmetric(n: usize, half: f64) -> Result<Self> {
        Self::new(-half, 2.0 * half / n as f64, n)
    }

    /// The x samples of a phase grid, used as a position grid.
    pub fn matching(grid: &PhaseGrid) -> Self {
        Self {
            q_min: grid.x_min,
            dq: grid.dx(),
            n: grid.nx,
        }
    }

    /// Points of `grid`'s x lattice lying in `[-half, half]`.
    pub fn aligned_window(grid: &PhaseGrid, half: f64) -> Result<Self> {
        let dx = grid.dx();
        let first = ((-half - grid.x_min) / dx).ceil().max(0.0) as usize;
        let last = (((half - grid.x_min) / dx).floor() as usize).min(grid.nx - 1);
        if last <= first {
            return domain(format!("window +-{half} contains no grid points"));
        }
        Self::new(grid.x(first), dx, last - first + 1)
    }

    pub fn q(&self, j: usize) -> f64 {
        self.q_min + j as f64 * self.dq
    }

    pub fn qs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.q(j)).collect()
    }

    pub fn q_last(&self) -> f64 {
        self.q(self.n - 1)
    }

    /// Canonically rescaled grid `q -> a q`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            q_min: self.q_min * a,
            dq: self.dq * a,
            n: self.n,
        }
    }

    /// Index of `q` if it lies on this lattice (within a relative 1e-9 cell).
    pub fn index_of(&self, q: f64) -> Option<isize> {
        let s = (q - self.q_min) / self.dq;
        let r = s.round();
        ((s - r).abs() < 1e-9).then_some(r as isize)
    }
}

/// Sampled position-space wavefunction with unit norm `sum |psi|^2 dq = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    q_grid: QGrid,
    values: Array1<Complex64>,
}

impl Wavefunction {
    pub fn new(q_grid: QGrid, values: Array1<Complex64>) -> Result<Self> {
        let wf = Self { q_grid, values };
        wf.check_len()?;
        let n = wf.norm();
        if (n - 1.0).abs() > WAVEFUNCTION_NORM_TOL {
            return domain(format!(
                "wavefunction norm {n} differs from 1 by more than {WAVEFUNCTION_NORM_TOL:e}"
            ));
        }
        Ok(wf)
    }

    /// Rescales arbitrary samples to unit norm.
    pub fn normalized(q_grid: QGrid, values: Array1<Complex64>) -> Result<Self> {
        let wf = Self { q_grid, values };
        wf.check_len()?;
        let n = wf.norm();
        if !(n.is_finite() && n > 0.0) {
            return domain("cannot normalize a zero or non-finite wavefunction");
        }
        let s = n.sqrt().recip();
        Ok(Self {
            values: wf.values.mapv(|z| z * s),
            ..wf
        })
    }

    fn check_len(&self) -> Result<()> {
        if self.values.len() != self.q_grid.n {
            return domain(format!(
                "{} samples for a {}-point grid",
                self.values.len(),
                self.q_grid.n
            ));
        }
        Ok(())
    }

    pub fn q_grid(&self) -> &QGrid {
        &self.q_grid
    }

    pub fn values(&self) -> &Array1<Complex64> {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.q_grid.dq
    }

    /// `<self|other>` by quadrature on the shared grid.
    pub fn inner(&self, other: &Wavefunction) -> Result<Complex64> {
        if self.q_grid != other.q_grid {
            return domain("wavefunctions live on different grids");
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.q_grid.dq)
    }

    /// `|psi(q_j)|^2`.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Samples the pointer packet centred at `gamma = (x, p)`.
pub fn pointer_wavefunction(
    family: &PointerFamily,
    gamma: (f64, f64),
    q_grid: &QGrid,
) -> Result<Wavefunction> {
    let half = PACKET_SIGMAS * family.position_std();
    let (lo, hi) = (gamma.0 - half, gamma.0 + half);
    if lo < q_grid.q_min || hi > q_grid.q_last() {
        return Err(Error::Coverage {
            message: format!(
                "pointer packet at x = {} needs {PACKET_SIGMAS} position standard deviations",
                gamma.0
            ),
            required: Some(Bounds {
                x_min: lo,
                x_max: hi,
                p_min: gamma.1,
                p_max: gamma.1,
            }),
        });
    }
    let values = Array1::from_iter(q_grid.qs().into_iter().map(|q| family.amplitude(gamma, q)));
    Wavefunction::new(*q_grid, values)
}

/// `|<G|G'>|^2 = exp(-dG^T (4 C_1/4)^(-1) dG)`.
pub fn overlap_sq(family: &PointerFamily, g1: (f64, f64), g2: (f64, f64)) -> f64 {
    let c = family.c_quarter();
    let inv = c.inverse().expect("C_1/4 is positive definite");
    let (dx, dp) = (g1.0 - g2.0, g1.1 - g2.1);
    (-0.25 * inv.quadratic_form(dx, dp)).exp()
}

/// Discretized resolution of the identity
/// `K(q, q') = sum_G psi_G(q) psi_G(q')* dx dp / 2pi` over `gamma_grid`.
pub fn completeness_kernel(
    family: &PointerFamily,
    gamma_grid: &PhaseGrid,
    q_grid: &QGrid,
) -> Result<Array2<Complex64>> {
    let margin = PACKET_SIGMAS * family.position_std();
    if gamma_grid.x_min > q_grid.q_min - margin
        || gamma_grid.x(gamma_grid.nx - 1) < q_grid.q_last() + margin
    {
        return Err(Error::Coverage {
            message: "phase grid must cover the position grid plus the packet width".into(),
            required: Some(Bounds {
                x_min: q_grid.q_min - margin,
                x_max: q_grid.q_last() + margin,
                p_min: gamma_grid.p_min,
                p_max: gamma_grid.p_max,
            }),
        });
    }
    let n = q_grid.n;
    let qs = q_grid.qs();
    let xs = gamma_grid.xs();
    let ps = gamma_grid.ps();
    let alpha = family.alpha();
    let norm2 = (family.alpha_r() / (2.0 * PI)).sqrt();
    // envelope A(j, i) = exp(-alpha (q_j - x_i)^2 / 4)
    let env = Array2::from_shape_fn((n, xs.len()), |(j, i)| {
        let u = qs[j] - xs[i];
        (-alpha * (u * u / 4.0)).exp()
    });
    // S(r) = sum_p exp(i p r) dp / 2pi for r = (j - k) dq
    let wp = gamma_grid.dp() / (2.0 * PI);
    let sums: Vec<Complex64> = par::map_range(2 * n - 1, |d| {
        let r = (d as f64 - (n - 1) as f64) * q_grid.dq;
        ps.iter().map(|&p| Complex64::from_polar(wp, p * r)).sum()
    });
    let dx = gamma_grid.dx();
    let rows = par::map_range(n, |j| {
        (0..n)
            .map(|k| {
                let e: Complex64 = env
                    .row(j)
                    .iter()
                    .zip(env.row(k).iter())
                    .map(|(a, b)| a * b.conj())
                    .sum();
                e * sums[j + n - 1 - k] * (norm2 * dx)
            })
            .collect::<Vec<_>>()
    });
    Ok(Array2::from_shape_fn((n, n), |(j, k)| rows[j][k]))
}

/// `max |dq K(q_j, q_k) - delta_jk|`: how far the discretized pointer
/// projectors are from resolving the identity on `q_grid`.
pub fn completeness_residual(
    family: &PointerFamily,
    gamma_grid: &PhaseGrid,
    q_grid: &QGrid,
) -> Result<f64> {
    let k = completeness_kernel(family, gamma_grid, q_grid)?;
    Ok(k.indexed_iter().fold(0.0f64, |m, ((j, l), z)| {
        let target = if j == l { 1.0 } else { 0.0 };
        m.max((z * q_grid.dq - target).norm())
    }))
}
