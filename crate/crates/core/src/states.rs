//! Position-representation states and their Wigner functions.
//!
//! `W(x, p) = int <x - r/2| rho |x + r/2> exp(i p r) dr`, normalized so that
//! `int W dx dp / 2pi = 1`. In this convention pure states obey `|W| <= 2`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{domain, Bounds, Error, Result};
use crate::fft::shift_columns;
use crate::grid::{FieldKind, GridField, PhaseGrid, NORM_TOL, SUPPORT_TOL};
use crate::par;
use crate::params::SystemParams;
use crate::pointer::{pointer_wavefunction, PointerFamily, QGrid, Wavefunction};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const PSD_EIGEN_TOL: f64 = 1e-8;

/// Relative momentum density below which a state is treated as having no
/// support, when bounding Wigner-transform aliasing.
pub const MOMENTUM_TAIL: f64 = 1e-15;

/// Density matrix `rho(q_j, q_k)` sampled on a position grid, with trace
/// `sum_j rho(q_j, q_j) dq = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    q_grid: QGrid,
    entries: Array2<Complex64>,
}

impl DensityMatrix {
    /// Checks shape, hermiticity (1e-10) and trace (1e-8).
    pub fn new(q_grid: QGrid, entries: Array2<Complex64>) -> Result<Self> {
        Self::with_trace_tol(q_grid, entries, TRACE_TOL)
    }

    pub(crate) fn with_trace_tol(
        q_grid: QGrid,
        entries: Array2<Complex64>,
        trace_tol: f64,
    ) -> Result<Self> {
        if entries.dim() != (q_grid.n, q_grid.n) {
            return domain(format!(
                "density matrix has shape {:?}, grid has {} points",
                entries.dim(),
                q_grid.n
            ));
        }
        if entries
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return domain("density matrix contains non-finite entries");
        }
        let rho = Self { q_grid, entries };
        let defect = rho.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return domain(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            ));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > trace_tol {
            return domain(format!(
                "density matrix has trace {tr}, expected 1 within {trace_tol:e}"
            ));
        }
        Ok(rho)
    }

    /// `|psi><psi|`.
    pub fn pure(psi: &Wavefunction) -> Self {
        let v = psi.values();
        let n = v.len();
        let entries = Array2::from_shape_fn((n, n), |(j, k)| v[j] * v[k].conj());
        Self {
            q_grid: *psi.q_grid(),
            entries,
        }
    }

    /// Convex combination `sum w_i rho_i` of states on one grid.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Domain("empty mixture".into()))?
            .1;
        let mut entries = Array2::zeros(first.entries.dim());
        for (w, rho) in parts {
            if *w < 0.0 {
                return domain(format!("mixture weight {w} is negative"));
            }
            if rho.q_grid != first.q_grid {
                return domain("mixture components live on different grids");
            }
            entries.scaled_add(Complex64::new(*w, 0.0), &rho.entries);
        }
        Self::new(first.q_grid, entries)
    }

    pub fn q_grid(&self) -> &QGrid {
        &self.q_grid
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diag().iter().map(|z| z.re).sum::<f64>() * self.q_grid.dq
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.q_grid.n;
        let mut m = 0.0f64;
        for j in 0..n {
            for k in j..n {
                m = m.max((self.entries[[j, k]] - self.entries[[k, j]].conj()).norm());
            }
        }
        m
    }

    /// Position density `rho(q, q)`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.entries.diag().iter().map(|z| z.re).collect()
    }

    fn operator(&self) -> DMatrix<Complex64> {
        let n = self.q_grid.n;
        let dq = self.q_grid.dq;
        DMatrix::from_fn(n, n, |j, k| self.entries[[j, k]] * dq)
    }

    /// Eigenvalues of the operator (entries times `dq`), ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .operator()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_EIGEN_TOL
    }

    /// `tr rho^2`.
    pub fn purity(&self) -> f64 {
        let dq = self.q_grid.dq;
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>() * dq * dq
    }

    /// `1/2 tr |rho - sigma|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.q_grid != other.q_grid {
            return domain("density matrices live on different grids");
        }
        let diff = self.operator() - other.operator();
        Ok(0.5
            * diff
                .symmetric_eigenvalues()
                .iter()
                .map(|v| v.abs())
                .sum::<f64>())
    }

    /// Largest |entry| on the outer rows and columns.
    fn edge_max(&self) -> f64 {
        let n = self.q_grid.n;
        let mut m = 0.0f64;
        for j in 0..n {
            for z in [
                self.entries[[0, j]],
                self.entries[[n - 1, j]],
                self.entries[[j, 0]],
                self.entries[[j, n - 1]],
            ] {
                m = m.max(z.norm());
            }
        }
        m
    }

    /// Momentum density `|<p| rho |p>|` on `m` points of `[-pi/dq, pi/dq)`.
    pub fn momentum_density(&self, m: usize) -> Vec<(f64, f64)> {
        let n = self.q_grid.n;
        let dq = self.q_grid.dq;
        let diag: Vec<Complex64> = (0..n)
            .map(|d| (0..n - d).map(|j| self.entries[[j, j + d]]).sum())
            .collect();
        let scale = dq * dq / (2.0 * PI);
        let step = 2.0 * PI / (dq * m as f64);
        par::map_range(m, |i| {
            let p = -PI / dq + i as f64 * step;
            let rot = Complex64::from_polar(1.0, p * dq);
            let mut ph = rot;
            let mut acc = 0.0;
            for a in &diag[1..] {
                acc += (a * ph).re;
                ph *= rot;
            }
            (p, scale * (diag[0].re + 2.0 * acc))
        })
    }

    /// Largest `|p|` at which the momentum density exceeds
    /// [`MOMENTUM_TAIL`] of its peak (at most `pi/dq`).
    pub fn momentum_reach(&self) -> f64 {
        let dens = self.momentum_density(4 * self.q_grid.n);
        let peak = dens.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        let step = dens[1].0 - dens[0].0;
        dens.iter()
            .filter(|(_, v)| v.abs() > MOMENTUM_TAIL * peak)
            .fold(0.0f64, |m, (p, _)| m.max(p.abs() + step))
            .min(PI / self.q_grid.dq)
    }

    fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub(crate) fn check_contained(&self) -> Result<()> {
        let (edge, peak) = (self.edge_max(), self.max_abs());
        if edge > SUPPORT_TOL * peak {
            let q = &self.q_grid;
            let w = q.q_last() - q.q_min;
            return Err(Error::Coverage {
                message: format!(
                    "density matrix reaches the position grid boundary ({edge:.3e} of peak {peak:.3e})"
                ),
                required: Some(Bounds {
                    x_min: q.q_min - 0.5 * w,
                    x_max: q.q_last() + 0.5 * w,
                    p_min: f64::NAN,
                    p_max: f64::NAN,
                }),
            });
        }
        Ok(())
    }
}

/// Wigner function of `rho` sampled on `grid`.
///
/// The r-integral is a discrete sum along the anti-diagonals of `rho` with
/// step `2 dq`, which makes W periodic in p with period `pi/dq`. For a state
/// whose momenta reach `P`, samples with `|p| <= pmax` are alias-free when
/// `pmax + P <= pi/dq`; `dq <= pi / (2 pmax)` suffices for any state the grid
/// can hold. The grid's x samples must lie on the position lattice.
pub fn wigner_from_density(rho: &DensityMatrix, grid: &PhaseGrid) -> Result<GridField> {
    let q = rho.q_grid();
    let dq = q.dq;
    let p_abs = grid.p_abs_max();
    if dq > PI / (2.0 * p_abs) * (1.0 + 1e-12) {
        let reach = rho.momentum_reach();
        if p_abs + reach > PI / dq {
            return domain(format!(
                "position spacing {dq} aliases momenta: state reaches |p| = {reach:.3}, grid reaches {p_abs}, need sum <= pi/dq = {:.3}",
                PI / dq
            ));
        }
    }
    let step = grid.dx() / dq;
    if (step - step.round()).abs() > 1e-9 || step.round() < 1.0 {
        return domain(format!(
            "phase-grid spacing {} is not a multiple of the position spacing {dq}",
            grid.dx()
        ));
    }
    let stride = step.round() as isize;
    let origin = q.index_of(grid.x_min).ok_or_else(|| {
        Error::Domain("phase-grid x samples are not on the position lattice".into())
    })?;
    rho.check_contained()?;

    let n = q.n as isize;
    let kmax = (q.n / 2 + 1).min(q.n);
    let ps = grid.ps();
    // phases[l * kmax + k] = exp(i p_l 2 k dq)
    let phases: Vec<Complex64> = ps
        .iter()
        .flat_map(|&p| (0..kmax).map(move |k| Complex64::from_polar(1.0, 2.0 * p * k as f64 * dq)))
        .collect();
    let e = rho.entries();
    let np = grid.np;
    let mut values = Array2::<f64>::zeros((grid.nx, np));
    par::for_each_chunk_mut(
        values.as_slice_mut().expect("standard layout"),
        np,
        |i, row| {
            let c = origin + stride * i as isize;
            if c < 0 || c >= n {
                return;
            }
            let c = c as usize;
            let reach = c.min(q.n - 1 - c).min(kmax - 1);
            let anti: Vec<Complex64> = (1..=reach).map(|k| e[[c - k, c + k]]).collect();
            let centre = e[[c, c]].re;
            for (l, w) in row.iter_mut().enumerate() {
                let ph = &phases[l * kmax + 1..l * kmax + 1 + reach];
                let s: f64 = anti.iter().zip(ph).map(|(a, b)| (a * b).re).sum();
                *w = 2.0 * dq * (centre + 2.0 * s);
            }
        },
    );
    GridField::new(*grid, values, FieldKind::Wigner)
}

/// Inverse Wigner transform onto `q_grid`:
/// `rho(x - r/2, x + r/2) = int W(x, p) exp(-i p r) dp / 2pi`.
///
/// The position lattice must be a sub-lattice of the grid's x samples.
/// Midpoints that fall between x samples are evaluated by exact spectral
/// interpolation of W along x.
pub fn density_from_wigner(w: &GridField, q_grid: &QGrid) -> Result<DensityMatrix> {
    let grid = w.grid();
    let norm = w.integral();
    if (norm - 1.0).abs() > NORM_TOL {
        return domain(format!(
            "Wigner input integrates to {norm}, cannot build a unit-trace state"
        ));
    }
    let dx = grid.dx();
    let step = q_grid.dq / dx;
    if (step - step.round()).abs() > 1e-9 || step.round() < 1.0 {
        return domain(format!(
            "position spacing {} is not a multiple of the phase-grid spacing {dx}",
            q_grid.dq
        ));
    }
    let stride = step.round() as isize;
    let offset = {
        let s = (q_grid.q_min - grid.x_min) / dx;
        if (s - s.round()).abs() > 1e-9 {
            return domain("position grid is not aligned with the phase-grid x samples");
        }
        s.round() as isize
    };
    let last = offset + stride * (q_grid.n as isize - 1);
    if offset < 0 || last >= grid.nx as isize {
        return Err(Error::Coverage {
            message: "position grid extends beyond the phase-grid x range".into(),
            required: Some(Bounds {
                x_min: q_grid.q_min,
                x_max: q_grid.q_last(),
                p_min: grid.p_min,
                p_max: grid.p_max,
            }),
        });
    }
    // W at x + dx/2
    let half = shift_columns(w.values(), grid, |_| -0.5 * dx);
    let n = q_grid.n;
    let np = grid.np;
    let ps = grid.ps();
    let wp = grid.dp() / (2.0 * PI);
    // kernels[d * np + l] = exp(-i p_l d dq) dp / 2pi
    let kernels: Vec<Complex64> = (0..n)
        .flat_map(|d| {
            let r = d as f64 * q_grid.dq;
            ps.iter()
                .map(move |&p| Complex64::from_polar(wp, -p * r))
                .collect::<Vec<_>>()
        })
        .collect();
    let full = w.values();
    let rows = par::map_range(n, |j| {
        let aj = offset + stride * j as isize;
        (j..n)
            .map(|k| {
                let ak = offset + stride * k as isize;
                let m2 = (aj + ak) as usize;
                let row = if m2.is_multiple_of(2) {
                    full.row(m2 / 2)
                } else {
                    half.row((m2 - 1) / 2)
                };
                let ker = &kernels[(k - j) * np..(k - j + 1) * np];
                row.iter().zip(ker).map(|(v, z)| z * *v).sum::<Complex64>()
            })
            .collect::<Vec<_>>()
    });
    let mut entries = Array2::<Complex64>::zeros((n, n));
    for (j, row) in rows.into_iter().enumerate() {
        for (off, z) in row.into_iter().enumerate() {
            let k = j + off;
            entries[[j, k]] = z;
            entries[[k, j]] = z.conj();
        }
        entries[[j, j]].im = 0.0;
    }
    DensityMatrix::with_trace_tol(*q_grid, entries, NORM_TOL)
}

/// Normalized number state `n` of width sigma0 (real `alpha = 2/sigma0^2`),
/// built by the Hermite-function recursion.
pub fn fock_state(n: usize, params: &SystemParams, q_grid: &QGrid) -> Result<Wavefunction> {
    let s = params.sigma0();
    let values = q_grid
        .qs()
        .into_iter()
        .map(|q| {
            let u = q / s;
            let mut prev = 0.0;
            let mut cur = PI.powf(-0.25) * s.powf(-0.5) * (-0.5 * u * u).exp();
            for k in 0..n {
                let k = k as f64;
                let next = (2.0 / (k + 1.0)).sqrt() * u * cur - (k / (k + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
            }
            Complex64::new(cur, 0.0)
        })
        .collect();
    Wavefunction::new(*q_grid, values)
}

/// Pointer projector `|G><G|`.
pub fn pointer_state(
    family: &PointerFamily,
    gamma: (f64, f64),
    q_grid: &QGrid,
) -> Result<DensityMatrix> {
    Ok(DensityMatrix::pure(&pointer_wavefunction(
        family, gamma, q_grid,
    )?))
}

/// Equal superposition of the pointer packets at `(-d/2, 0)` and `(d/2, 0)`.
pub fn cat_state(separation: f64, family: &PointerFamily, q_grid: &QGrid) -> Result<DensityMatrix> {
    if !(separation.is_finite() && separation > 0.0) {
        return domain(format!("cat separation must be positive, got {separation}"));
    }
    let a = pointer_wavefunction(family, (-0.5 * separation, 0.0), q_grid)?;
    let b = pointer_wavefunction(family, (0.5 * separation, 0.0), q_grid)?;
    let psi = Wavefunction::normalized(*q_grid, a.values() + b.values())?;
    Ok(DensityMatrix::pure(&psi))
}

/// Sup-distance between `W'(a x, p / a)` of the rescaled state
/// `psi'(x') = a^(-1/2) psi(x'/a)` and `W(x, p)` of the original.
pub fn wigner_invariance_check(rho: &DensityMatrix, grid: &PhaseGrid, a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return domain(format!("scale factor must be positive, got {a}"));
    }
    let w = wigner_from_density(rho, grid)?;
    let scaled_q = rho.q_grid().scaled(a);
    let scaled = DensityMatrix::new(scaled_q, rho.entries().mapv(|z| z / a))?;
    let w_scaled = wigner_from_density(&scaled, &grid.scaled(a))?;
    Ok(w.values()
        .iter()
        .zip(w_scaled.values().iter())
        .fold(0.0f64, |m, (u, v)| m.max((u - v).abs())))
}
