//! Time evolution of phase-space distributions under free motion with
//! momentum diffusion, `dW/dt = -(p/m) dW/dx + (D/2) d^2W/dp^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fft::{fft_rows, transpose, Plans};
use crate::grid::GridField;
use crate::kernel::{convolve, shear};
use crate::matrix::CorrelationMatrix;
use crate::par;
use crate::params::SystemParams;
use crate::pointer::PointerFamily;
use crate::positivity::factorization_threshold;
use crate::quasiprob::p_from_w;

/// Radius of a half-disk in the left half-plane that lies inside the
/// classical RK4 stability region.
pub const RK4_STABILITY_RADIUS: f64 = 2.5;

/// Spectral columns weaker than this fraction of the strongest are not
/// integrated (the scheme never moves weight between columns).
const COLUMN_CUT: f64 = 1e-15;

/// `W(t) = g(C_W(t)) * W0(x - p t/m, p)`.
pub fn evolve_wigner(w0: &GridField, params: &SystemParams, t: f64) -> Result<GridField> {
    let cw = params.cw_of_t(t)?;
    if t == 0.0 {
        return Ok(w0.clone());
    }
    convolve(&shear(w0, t / params.m())?, &cw)
}

/// Largest step accepted by [`fd_integrate`] on this grid.
pub fn fd_stability_bound(w0: &GridField, mass: f64, diffusion: f64) -> f64 {
    let g = w0.grid();
    let drift = PI / g.dx() * g.p_abs_max() / mass;
    let diff = 2.0 * diffusion / (g.dp() * g.dp());
    RK4_STABILITY_RADIUS / (drift + diff)
}

/// Step `0.25 dp^2 / D`, shortened so that it divides `t`.
pub fn fd_default_dt(w0: &GridField, params: &SystemParams, t: f64) -> f64 {
    let dp = w0.grid().dp();
    let base = 0.25 * dp * dp / params.d();
    if t <= 0.0 {
        return base;
    }
    t / (t / base).ceil()
}

/// Finite-difference Fokker-Planck oracle, see [`fd_integrate`].
pub fn fd_fokker_planck(
    w0: &GridField,
    params: &SystemParams,
    t: f64,
    dt: f64,
) -> Result<GridField> {
    fd_integrate(w0, params.m(), params.d(), t, dt)
}

/// Method-of-lines integration: exact Fourier differentiation along x,
/// second-order centred differences along p (periodic), classical RK4 in
/// time. Requires `t = k dt` and `dt <=` [`fd_stability_bound`].
pub fn fd_integrate(
    w0: &GridField,
    mass: f64,
    diffusion: f64,
    t: f64,
    dt: f64,
) -> Result<GridField> {
    if !(mass.is_finite() && mass > 0.0) || !(diffusion.is_finite() && diffusion >= 0.0) {
        return domain(format!("invalid mass {mass} or diffusion {diffusion}"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("evolution time must be non-negative, got {t}"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return domain(format!("time step must be positive, got {dt}"));
    }
    let steps = (t / dt).round();
    if (steps * dt - t).abs() > 1e-9 * t.max(dt) {
        return domain(format!("time {t} is not a whole number of steps {dt}"));
    }
    let bound = fd_stability_bound(w0, mass, diffusion);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::Stability { dt, bound });
    }
    let steps = steps as usize;
    if steps == 0 {
        return Ok(w0.clone());
    }
    let g = *w0.grid();
    let (nx, np) = (g.nx, g.np);
    let plans = Plans::new(nx);
    // (np, nx) rows along x -> spectrum along x -> (nx, np) rows along p
    let mut cols = transpose(w0.values()).mapv(|v| Complex64::new(v, 0.0));
    fft_rows(
        cols.as_slice_mut().expect("standard layout"),
        nx,
        &plans,
        false,
    );
    let mut spec = transpose(&cols);
    let peak = spec.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let kx = g.kxs();
    let ps = g.ps();
    let c = 0.5 * diffusion / (g.dp() * g.dp());
    let half = nx / 2;
    {
        let data = spec.as_slice_mut().expect("standard layout");
        par::for_each_chunk_mut(&mut data[..(half + 1) * np], np, |a, row| {
            if row.iter().all(|z| z.norm() <= COLUMN_CUT * peak) {
                row.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                return;
            }
            let drift: Vec<Complex64> = ps
                .iter()
                .map(|&p| Complex64::new(0.0, -kx[a] * p / mass))
                .collect();
            rk4_column(row, &drift, c, dt, steps);
        });
    }
    for a in half + 1..nx {
        for j in 0..np {
            spec[[a, j]] = spec[[nx - a, j]].conj();
        }
    }
    let mut cols = transpose(&spec);
    fft_rows(
        cols.as_slice_mut().expect("standard layout"),
        nx,
        &plans,
        true,
    );
    let norm = 1.0 / nx as f64;
    let values = transpose(&cols.mapv(|z| z.re * norm));
    Ok(w0.with_values(values))
}

fn rk4_column(f: &mut [Complex64], drift: &[Complex64], c: f64, dt: f64, steps: usize) {
    let n = f.len();
    let rhs = |u: &[Complex64], out: &mut [Complex64]| {
        for j in 0..n {
            let (l, r) = (u[(j + n - 1) % n], u[(j + 1) % n]);
            out[j] = drift[j] * u[j] + (l - 2.0 * u[j] + r) * c;
        }
    };
    let zero = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
        vec![zero; n],
    );
    for _ in 0..steps {
        rhs(f, &mut k1);
        for j in 0..n {
            tmp[j] = f[j] + k1[j] * (0.5 * dt);
        }
        rhs(&tmp, &mut k2);
        for j in 0..n {
            tmp[j] = f[j] + k2[j] * (0.5 * dt);
        }
        rhs(&tmp, &mut k3);
        for j in 0..n {
            tmp[j] = f[j] + k3[j] * dt;
        }
        rhs(&tmp, &mut k4);
        for j in 0..n {
            f[j] += (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]) * (dt / 6.0);
        }
    }
}

/// Diffusion matrix of the P-function Fokker-Planck equation for a pointer
/// family. Only a positive semidefinite matrix gives a diffusion process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionMatrix {
    pub dxx: f64,
    pub dxp: f64,
    pub dpp: f64,
    pub admissible: bool,
}

impl DiffusionMatrix {
    pub fn as_matrix(&self) -> CorrelationMatrix {
        CorrelationMatrix::new(self.dxx, self.dxp, self.dpp)
    }

    pub fn det(&self) -> f64 {
        self.as_matrix().det()
    }
}

pub fn diffusion_matrix(family: &PointerFamily) -> DiffusionMatrix {
    let p = family.params();
    let (ar, ai) = (family.alpha_r(), family.alpha_i());
    let m = p.m();
    let mod2 = ar * ar + ai * ai;
    let dm = CorrelationMatrix::new(-ai / (m * ar), mod2 / (4.0 * m * ar), p.d());
    DiffusionMatrix {
        dxx: dm.cxx,
        dxp: dm.cxp,
        dpp: dm.cpp,
        admissible: dm.is_psd(1e-12 * dm.scale()),
    }
}

/// Time-averaged diffusion matrix `D(t)`; the P kernel after time `t` is
/// `t D(t)`.
pub fn time_dependent_diffusion(
    dm: &DiffusionMatrix,
    params: &SystemParams,
    t: f64,
) -> CorrelationMatrix {
    let m = params.m();
    CorrelationMatrix::new(
        dm.dxx + dm.dxp * t / m + dm.dpp * t * t / (3.0 * m * m),
        dm.dxp + dm.dpp * t / (2.0 * m),
        dm.dpp,
    )
}

/// `f(t) = g(t D(t)) * f0(x - p t/m, p)` for an admissible family.
pub fn evolve_p_function(
    f0: &GridField,
    family: &PointerFamily,
    params: &SystemParams,
    t: f64,
) -> Result<GridField> {
    if family.params() != params {
        return domain("pointer family was built for different system parameters");
    }
    if !(t.is_finite() && t >= 0.0) {
        return domain(format!("evolution time must be non-negative, got {t}"));
    }
    let dm = diffusion_matrix(family);
    if !dm.admissible {
        return domain(format!(
            "diffusion matrix of family {} is indefinite (det {:.3e}); its P equation is not a Fokker-Planck equation",
            family.label(),
            dm.det()
        ));
    }
    if t == 0.0 {
        return Ok(f0.clone());
    }
    let kernel = t * time_dependent_diffusion(&dm, params, t);
    convolve(&shear(f0, t / params.m())?, &kernel)
}

/// Sup distance between `W(t)` from the Wigner propagator and
/// `g(C_1/4) * P(t)`, where `P(t)` is the forward-route P function at the
/// factorization threshold propagated by the P equation (or taken directly at
/// `t` when the family is not admissible).
pub fn consistency_p_vs_w(
    w0: &GridField,
    family: &PointerFamily,
    params: &SystemParams,
    t: f64,
) -> Result<f64> {
    let t_min = factorization_threshold(params, family);
    if t < t_min {
        return Err(Error::Factorization { t, t_min });
    }
    let w = evolve_wigner(w0, params, t)?;
    let p = if diffusion_matrix(family).admissible {
        let start = p_from_w(w0, family, params, t_min)?;
        evolve_p_function(&start, family, params, t - t_min)?
    } else {
        p_from_w(w0, family, params, t)?
    };
    let w_from_p = convolve(&p, &family.c_quarter())?;
    w.sup_distance(&w_from_p)
}

/// Entrywise comparison of `C_1/4` with `D t0^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionRelation {
    pub c_quarter: CorrelationMatrix,
    pub d_scaled: CorrelationMatrix,
    pub max_abs_discrepancy: f64,
}

pub fn diffusion_relation(family: &PointerFamily) -> DiffusionRelation {
    let t0 = family.params().t0();
    let c = family.c_quarter();
    let d = (0.5 * t0 * t0) * diffusion_matrix(family).as_matrix();
    DiffusionRelation {
        c_quarter: c,
        d_scaled: d,
        max_abs_discrepancy: c.max_abs_diff(&d),
    }
}

/// One row of an evolution trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub min_value: f64,
    pub norm: f64,
    pub p2: f64,
}

/// Evolves `w0` to each time independently and records summary statistics.
pub fn evolution_trace(
    w0: &GridField,
    params: &SystemParams,
    times: &[f64],
) -> Result<Vec<TracePoint>> {
    par::map_slice(times, |&t| {
        let w = evolve_wigner(w0, params, t)?;
        let m = w.moments();
        Ok(TracePoint {
            t,
            min_value: w.min(),
            norm: m.norm,
            p2: m.p2,
        })
    })
    .into_iter()
    .collect()
}
