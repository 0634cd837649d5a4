//! Uniform phase-space grids and the real fields sampled on them.
//!
//! Integrals use the phase-space measure `dx dp / 2pi`, so a normalized
//! quasiprobability sums to one as `sum(values) * dx * dp / 2pi`.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Bounds, Error, Result};
use crate::matrix::CorrelationMatrix;
use crate::params::SystemParams;

/// Default normalization tolerance for Wigner, Q and P fields.
pub const NORM_TOL: f64 = 1e-6;

/// Relative positivity slack: a field counts as non-negative when
/// `min >= -EPS_GRID_REL * max|f|`.
pub const EPS_GRID_REL: f64 = 1e-8;

/// Relative magnitude below which field content is treated as absent when
/// checking for periodic wraparound.
pub const SUPPORT_TOL: f64 = 1e-7;

/// Uniform periodic grid over `[x_min, x_max) x [p_min, p_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub nx: usize,
    pub np: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl PhaseGrid {
    pub fn new(nx: usize, np: usize, x: (f64, f64), p: (f64, f64)) -> Result<Self> {
        for (name, n) in [("nx", nx), ("np", np)] {
            if n < 8 || !n.is_power_of_two() {
                return domain(format!("{name} must be a power of two >= 8, got {n}"));
            }
        }
        if !(x.0.is_finite() && x.1.is_finite() && x.0 < x.1) {
            return domain(format!("invalid x bounds {x:?}"));
        }
        if !(p.0.is_finite() && p.1.is_finite() && p.0 < p.1) {
            return domain(format!("invalid p bounds {p:?}"));
        }
        Ok(Self {
            nx,
            np,
            x_min: x.0,
            x_max: x.1,
            p_min: p.0,
            p_max: p.1,
        })
    }

    /// Grid centred on the origin, which is always a sample point.
    pub fn symmetric(nx: usize, np: usize, x_half: f64, p_half: f64) -> Result<Self> {
        Self::new(nx, np, (-x_half, x_half), (-p_half, p_half))
    }

    /// [`PhaseGrid::desk`] with 512 x 512 samples.
    pub fn default_for(params: &SystemParams) -> Self {
        Self::desk(params, 512).expect("default grid is valid")
    }

    /// `n x n` samples over `+-12/sigma0` in p and the widest x range (at
    /// most `+-32 sigma0`) whose spacing still resolves those momenta in
    /// position-space Wigner transforms, `dx <= pi / (2 p_max)`.
    pub fn desk(params: &SystemParams, n: usize) -> Result<Self> {
        let s = params.sigma0();
        let x_half = (n as f64 * PI / 48.0).min(32.0);
        Self::symmetric(n, n, x_half * s, 12.0 / s)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.np as f64
    }

    pub fn len_x(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn len_p(&self) -> f64 {
        self.p_max - self.p_min
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.np).map(|j| self.p(j)).collect()
    }

    /// Largest |p| sampled.
    pub fn p_abs_max(&self) -> f64 {
        self.p_min.abs().max(self.p(self.np - 1).abs())
    }

    /// Integration weight of one cell, `dx dp / 2pi`.
    pub fn cell_measure(&self) -> f64 {
        self.dx() * self.dp() / (2.0 * PI)
    }

    /// Angular wavenumbers conjugate to x, in FFT order.
    pub fn kxs(&self) -> Vec<f64> {
        fft_wavenumbers(self.nx, self.dx())
    }

    /// Angular wavenumbers conjugate to p, in FFT order.
    pub fn kps(&self) -> Vec<f64> {
        fft_wavenumbers(self.np, self.dp())
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            x_min: self.x_min,
            x_max: self.x_max,
            p_min: self.p_min,
            p_max: self.p_max,
        }
    }

    /// Grid of the canonically rescaled coordinates `(a x, p / a)`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            x_min: self.x_min * a,
            x_max: self.x_max * a,
            p_min: self.p_min / a,
            p_max: self.p_max / a,
            ..*self
        }
    }

    pub fn same_as(&self, other: &Self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        self.nx == other.nx
            && self.np == other.np
            && close(self.x_min, other.x_min)
            && close(self.x_max, other.x_max)
            && close(self.p_min, other.p_min)
            && close(self.p_max, other.p_max)
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            domain("fields live on different grids")
        }
    }
}

pub(crate) fn fft_wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let scale = 2.0 * PI / (n as f64 * h);
    (0..n)
        .map(|i| {
            let k = if i < n / 2 {
                i as isize
            } else {
                i as isize - n as isize
            };
            k as f64 * scale
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Wigner,
    Q,
    P,
    Generic,
}

impl FieldKind {
    pub fn is_quasiprobability(self) -> bool {
        !matches!(self, FieldKind::Generic)
    }
}

/// Provenance flag carried by every field and serialized with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reliability {
    pub reliable: bool,
    pub reason: Option<String>,
}

impl Reliability {
    pub fn reliable() -> Self {
        Self {
            reliable: true,
            reason: None,
        }
    }

    pub fn unreliable(reason: impl Into<String>) -> Self {
        Self {
            reliable: false,
            reason: Some(reason.into()),
        }
    }
}

impl Default for Reliability {
    fn default() -> Self {
        Self::reliable()
    }
}

/// Real function sampled on a [`PhaseGrid`], stored with shape `(nx, np)`:
/// row `i` holds all momenta at position `x(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: PhaseGrid,
    values: Array2<f64>,
    kind: FieldKind,
    reliability: Reliability,
}

/// Zeroth, first and second moments under the `dx dp / 2pi` measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    /// Raw second moment <p^2>.
    pub p2: f64,
    /// Raw second moment <x^2>.
    pub x2: f64,
    pub cov: CorrelationMatrix,
}

impl GridField {
    /// Wraps samples, checking shape, finiteness and (for quasiprobabilities)
    /// normalization to [`NORM_TOL`].
    pub fn new(grid: PhaseGrid, values: Array2<f64>, kind: FieldKind) -> Result<Self> {
        let f = Self::unchecked(grid, values, kind)?;
        if kind.is_quasiprobability() {
            let n = f.integral();
            if (n - 1.0).abs() > NORM_TOL {
                return domain(format!(
                    "{kind:?} field integrates to {n}, expected 1 within {NORM_TOL:e}"
                ));
            }
        }
        Ok(f)
    }

    /// Like [`GridField::new`] without the normalization requirement.
    pub fn unchecked(grid: PhaseGrid, values: Array2<f64>, kind: FieldKind) -> Result<Self> {
        if values.dim() != (grid.nx, grid.np) {
            return domain(format!(
                "values have shape {:?}, grid needs ({}, {})",
                values.dim(),
                grid.nx,
                grid.np
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return domain(format!("field contains a non-finite value {v}"));
        }
        Ok(Self {
            grid,
            values,
            kind,
            reliability: Reliability::reliable(),
        })
    }

    pub fn generic(grid: PhaseGrid, values: Array2<f64>) -> Result<Self> {
        Self::unchecked(grid, values, FieldKind::Generic)
    }

    /// Samples `f(x, p)` on the grid.
    pub fn from_fn(grid: PhaseGrid, kind: FieldKind, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = Array2::from_shape_fn((grid.nx, grid.np), |(i, j)| f(grid.x(i), grid.p(j)));
        Self::new(grid, values, kind)
    }

    /// Same metadata, new samples (shape already known to match).
    pub(crate) fn with_values(&self, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), self.values.dim());
        Self {
            grid: self.grid,
            values,
            kind: self.kind,
            reliability: self.reliability.clone(),
        }
    }

    pub(crate) fn into_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_reliability(mut self, reliability: Reliability) -> Self {
        self.reliability = reliability;
        self
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn reliability(&self) -> &Reliability {
        &self.reliability
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// `sum(values) * dx dp / 2pi`.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.grid.cell_measure()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Positivity slack for this field, `EPS_GRID_REL * max|f|`.
    pub fn epsilon_grid(&self) -> f64 {
        EPS_GRID_REL * self.max_abs()
    }

    /// Smallest sample with its location `(x, p)`.
    pub fn min_with_location(&self) -> (f64, (f64, f64)) {
        let mut best = (f64::INFINITY, (0, 0));
        for ((i, j), &v) in self.values.indexed_iter() {
            if v < best.0 {
                best = (v, (i, j));
            }
        }
        let (i, j) = best.1;
        (best.0, (self.grid.x(i), self.grid.p(j)))
    }

    pub fn min(&self) -> f64 {
        self.min_with_location().0
    }

    pub fn moments(&self) -> Moments {
        let g = &self.grid;
        let xs = g.xs();
        let ps = g.ps();
        let (mut s0, mut sx, mut sp, mut sxx, mut sxp, mut spp) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for ((i, j), &v) in self.values.indexed_iter() {
            let (x, p) = (xs[i], ps[j]);
            s0 += v;
            sx += v * x;
            sp += v * p;
            sxx += v * x * x;
            sxp += v * x * p;
            spp += v * p * p;
        }
        let w = g.cell_measure();
        let norm = s0 * w;
        let mean_x = sx * w / norm;
        let mean_p = sp * w / norm;
        let x2 = sxx * w / norm;
        let p2 = spp * w / norm;
        Moments {
            norm,
            mean_x,
            mean_p,
            p2,
            x2,
            cov: CorrelationMatrix::new(
                x2 - mean_x * mean_x,
                sxp * w / norm - mean_x * mean_p,
                p2 - mean_p * mean_p,
            ),
        }
    }

    pub fn sup_distance(&self, other: &GridField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `sum |f - g| dx dp / 2pi`.
    pub fn l1_distance(&self, other: &GridField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(s * self.grid.cell_measure())
    }

    /// Largest |value| on the outermost rows and columns.
    pub fn edge_max(&self) -> f64 {
        let (nx, np) = self.values.dim();
        let mut m = 0.0f64;
        for j in 0..np {
            m = m
                .max(self.values[[0, j]].abs())
                .max(self.values[[nx - 1, j]].abs());
        }
        for i in 0..nx {
            m = m
                .max(self.values[[i, 0]].abs())
                .max(self.values[[i, np - 1]].abs());
        }
        m
    }

    /// Bounding box of the samples with `|f| > rel_tol * max|f|`.
    pub fn support_box(&self, rel_tol: f64) -> Option<Bounds> {
        let cut = rel_tol * self.max_abs();
        let mut b: Option<Bounds> = None;
        for ((i, j), &v) in self.values.indexed_iter() {
            if v.abs() > cut {
                let (x, p) = (self.grid.x(i), self.grid.p(j));
                let e = b.get_or_insert(Bounds {
                    x_min: x,
                    x_max: x,
                    p_min: p,
                    p_max: p,
                });
                e.x_min = e.x_min.min(x);
                e.x_max = e.x_max.max(x);
                e.p_min = e.p_min.min(p);
                e.p_max = e.p_max.max(p);
            }
        }
        b
    }

    /// Fails when the field carries more than [`SUPPORT_TOL`] of its peak on
    /// the grid boundary, i.e. when periodic transforms would wrap it around.
    pub fn check_contained(&self, context: &str) -> Result<()> {
        let edge = self.edge_max();
        let peak = self.max_abs();
        if edge > SUPPORT_TOL * peak {
            let g = &self.grid;
            return Err(Error::Coverage {
                message: format!(
                    "{context}: boundary value {edge:.3e} exceeds {SUPPORT_TOL:e} of peak {peak:.3e}; enlarge the domain"
                ),
                required: Some(Bounds {
                    x_min: g.x_min - 0.5 * g.len_x(),
                    x_max: g.x_max + 0.5 * g.len_x(),
                    p_min: g.p_min - 0.5 * g.len_p(),
                    p_max: g.p_max + 0.5 * g.len_p(),
                }),
            });
        }
        Ok(())
    }
}
