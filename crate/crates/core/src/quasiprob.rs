//! Husimi-type Q functions and Glauber-type P functions relative to a pointer
//! family, through their Gaussian relations with the Wigner function:
//! `Q = g(C_1/4) * W` and `W = g(C_1/4) * P`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::fft::Transform2;
use crate::grid::{FieldKind, GridField, PhaseGrid, Reliability, NORM_TOL};
use crate::kernel::{apply_complex_multiplier, convolve, shear, PSD_TOL};
use crate::matrix::CorrelationMatrix;
use crate::par;
use crate::params::SystemParams;
use crate::pointer::{PointerFamily, QGrid};
use crate::positivity::factorization_threshold;
use crate::states::DensityMatrix;

/// Packet amplitudes below this fraction of their peak are dropped from the
/// position quadratures.
const ENVELOPE_CUT: f64 = 1e-17;

/// `F(k) = int f(G) exp(-i k.G) dG` on the FFT wavenumbers of the grid, with
/// `k = (kx, kp)`. In symplectic variables `k.G = p~ x - x~ p`, so
/// `p~ = kx` and `x~ = -kp`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    grid: PhaseGrid,
    values: Array2<Complex64>,
    kind: FieldKind,
}

impl SymplecticSpectrum {
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn kxs(&self) -> Vec<f64> {
        self.grid.kxs()
    }

    pub fn kps(&self) -> Vec<f64> {
        self.grid.kps()
    }

    /// Symplectic coordinates `(x~, p~)` of spectral sample `(a, b)`.
    pub fn symplectic_coords(&self, a: usize, b: usize) -> (f64, f64) {
        (-self.grid.kps()[b], self.grid.kxs()[a])
    }

    pub fn inverse(&self) -> Result<GridField> {
        let g = &self.grid;
        let (kx, kp) = (g.kxs(), g.kps());
        let scale = 1.0 / g.cell_measure();
        let spec = Array2::from_shape_fn(self.values.dim(), |(a, b)| {
            self.values[[a, b]] * Complex64::from_polar(scale, kx[a] * g.x_min + kp[b] * g.p_min)
        });
        let values = Transform2::new(g).inverse_real(spec);
        GridField::unchecked(*g, values, self.kind)
    }
}

pub fn symplectic_fourier(f: &GridField) -> SymplecticSpectrum {
    let g = *f.grid();
    let (kx, kp) = (g.kxs(), g.kps());
    let w = g.cell_measure();
    let mut values = Transform2::new(&g).forward(f.values());
    for ((a, b), z) in values.indexed_iter_mut() {
        *z *= Complex64::from_polar(w, -(kx[a] * g.x_min + kp[b] * g.p_min));
    }
    SymplecticSpectrum {
        grid: g,
        values,
        kind: f.kind(),
    }
}

/// `Q = g(C_1/4) * W`.
pub fn q_from_w(w: &GridField, family: &PointerFamily) -> Result<GridField> {
    Ok(convolve(w, &family.c_quarter())?.into_kind(FieldKind::Q))
}

/// `Q(G) = <G| rho |G>` evaluated by quadrature over the position grid.
pub fn q_direct(
    rho: &DensityMatrix,
    family: &PointerFamily,
    grid: &PhaseGrid,
) -> Result<GridField> {
    let q = rho.q_grid();
    let dq = q.dq;
    let p_abs = grid.p_abs_max();
    if dq > PI / p_abs * (1.0 + 1e-12) {
        return domain(format!(
            "position spacing {dq} aliases momenta up to {p_abs}; need dq <= {}",
            PI / p_abs
        ));
    }
    rho.check_contained()?;
    let qs = q.qs();
    let ps = grid.ps();
    let alpha = family.alpha();
    let amp = (family.alpha_r() / (2.0 * PI)).sqrt() * dq * dq;
    let reach = (-4.0 * ENVELOPE_CUT.ln() / family.alpha_r()).sqrt();
    let e = rho.entries();
    let np = grid.np;
    let mut values = Array2::<f64>::zeros((grid.nx, np));
    par::for_each_chunk_mut(
        values.as_slice_mut().expect("standard layout"),
        np,
        |i, row| {
            let x = grid.x(i);
            let lo = qs.partition_point(|&v| v < x - reach);
            let hi = qs.partition_point(|&v| v <= x + reach);
            if lo >= hi {
                return;
            }
            let env: Vec<Complex64> = qs[lo..hi]
                .iter()
                .map(|&v| (-alpha * ((v - x) * (v - x) / 4.0)).exp())
                .collect();
            // s[d] = sum_{k - j = d} conj(A_j) rho_jk A_k
            let span = hi - lo;
            let mut s = vec![Complex64::new(0.0, 0.0); span];
            for j in 0..span {
                let aj = env[j].conj();
                for k in j..span {
                    s[k - j] += aj * e[[lo + j, lo + k]] * env[k];
                }
            }
            for (l, out) in row.iter_mut().enumerate() {
                let step = Complex64::from_polar(1.0, ps[l] * dq);
                let mut ph = step;
                let mut acc = 0.0;
                for z in &s[1..] {
                    acc += (z * ph).re;
                    ph *= step;
                }
                *out = amp * (s[0].re + 2.0 * acc);
            }
        },
    );
    GridField::new(*grid, values, FieldKind::Q)
}

/// Coarse-graining covariance `C_W(t) - C_1/4` of the forward route, or the
/// factorization error when it is not positive semidefinite.
pub fn forward_covariance(
    family: &PointerFamily,
    params: &SystemParams,
    t: f64,
) -> Result<CorrelationMatrix> {
    let c = params.cw_of_t(t)? - family.c_quarter();
    if !c.is_psd(PSD_TOL * c.scale().max(family.c_quarter().scale())) {
        return Err(Error::Factorization {
            t,
            t_min: factorization_threshold(params, family),
        });
    }
    Ok(c.clip_psd())
}

/// Forward-route P function at time `t` from the initial Wigner function:
/// `P(t) = g(C_W(t) - C_1/4) * W0(x - p t/m, p)`.
pub fn p_from_w(
    w0: &GridField,
    family: &PointerFamily,
    params: &SystemParams,
    t: f64,
) -> Result<GridField> {
    let c = forward_covariance(family, params, t)?;
    let sheared = shear(w0, t / params.m())?;
    Ok(convolve(&sheared, &c)?.into_kind(FieldKind::P))
}

/// Regularized inverse of `W = g(C_1/4) * P`: spectral modes with
/// `sqrt(k^T C_1/4 k) <= cutoff` are amplified by `exp(+k^T C_1/4 k / 2)`,
/// all others are discarded. The output is always flagged unreliable.
pub fn p_deconvolve(w: &GridField, family: &PointerFamily, cutoff: f64) -> Result<GridField> {
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return domain(format!(
            "deconvolution cutoff must be positive, got {cutoff}"
        ));
    }
    let c = family.c_quarter();
    let g = w.grid();
    let (kx, kp) = (g.kxs(), g.kps());
    let r2 = cutoff * cutoff;
    let mut retained = 0usize;
    let mask = Array2::from_shape_fn((g.nx, g.np), |(a, b)| {
        let e = c.quadratic_form(kx[a], kp[b]);
        if e <= r2 {
            retained += 1;
            Complex64::new((0.5 * e).exp(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let values = apply_complex_multiplier(w, &mask);
    let reason = format!(
        "regularized deconvolution: {retained} of {} modes kept (radius {cutoff}, peak gain {:.3e})",
        g.nx * g.np,
        (0.5 * r2).exp()
    );
    Ok(w.with_values(values)
        .into_kind(FieldKind::P)
        .with_reliability(Reliability::unreliable(reason)))
}

/// `rho = int P(G) |G><G| dG` by quadrature over the phase grid.
pub fn reconstruct_density(
    p: &GridField,
    family: &PointerFamily,
    q_grid: &QGrid,
) -> Result<DensityMatrix> {
    let norm = p.integral();
    if (norm - 1.0).abs() > NORM_TOL {
        return domain(format!("P function integrates to {norm}, expected 1"));
    }
    let g = p.grid();
    let n = q_grid.n;
    let dq = q_grid.dq;
    let qs = q_grid.qs();
    let ps = g.ps();
    let wp = g.dp() / (2.0 * PI);
    // phat[i][d] = sum_p P(x_i, p) exp(i p d dq) dp / 2pi
    let phases: Vec<Complex64> = (0..n)
        .flat_map(|d| {
            let r = d as f64 * dq;
            ps.iter().map(move |&pl| Complex64::from_polar(wp, pl * r))
        })
        .collect();
    let np = g.np;
    let phat: Vec<Vec<Complex64>> = par::map_range(g.nx, |i| {
        let row = p.values().row(i);
        if row.iter().all(|v| *v == 0.0) {
            return Vec::new();
        }
        let row = row.as_slice().expect("standard layout");
        (0..n)
            .map(|d| {
                row.iter()
                    .zip(&phases[d * np..(d + 1) * np])
                    .map(|(v, z)| z * *v)
                    .sum()
            })
            .collect()
    });
    let alpha = family.alpha();
    let amp = (family.alpha_r() / (2.0 * PI)).sqrt() * g.dx();
    let reach = (-4.0 * ENVELOPE_CUT.ln() / family.alpha_r()).sqrt();
    let xs = g.xs();
    // envelope windows per x sample
    let windows: Vec<(usize, Vec<Complex64>)> = xs
        .iter()
        .map(|&x| {
            let lo = qs.partition_point(|&v| v < x - reach);
            let hi = qs.partition_point(|&v| v <= x + reach);
            let env = qs[lo..hi.max(lo)]
                .iter()
                .map(|&v| (-alpha * ((v - x) * (v - x) / 4.0)).exp())
                .collect();
            (lo, env)
        })
        .collect();
    let rows = par::map_range(n, |j| {
        let mut out = vec![Complex64::new(0.0, 0.0); n - j];
        for (i, (lo, env)) in windows.iter().enumerate() {
            if phat[i].is_empty() || j < *lo || j >= lo + env.len() {
                continue;
            }
            let aj = env[j - lo];
            let hi = lo + env.len();
            for k in j..hi {
                out[k - j] += aj * env[k - lo].conj() * phat[i][k - j].conj();
            }
        }
        out
    });
    let mut entries = Array2::<Complex64>::zeros((n, n));
    for (j, row) in rows.into_iter().enumerate() {
        for (off, z) in row.into_iter().enumerate() {
            let k = j + off;
            entries[[j, k]] = z * amp;
            entries[[k, j]] = (z * amp).conj();
        }
        entries[[j, j]].im = 0.0;
    }
    DensityMatrix::with_trace_tol(*q_grid, entries, NORM_TOL)
}
