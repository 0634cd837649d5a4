//! Gaussian coarse-graining kernels, spectral convolution and free-streaming
//! shear on phase-space grids.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{domain, Bounds, Error, Result};
use crate::fft::{shift_columns, Transform2};
use crate::grid::{GridField, PhaseGrid, SUPPORT_TOL};
use crate::matrix::CorrelationMatrix;
use crate::par;

/// Kernel extent, in standard deviations, that must fit inside the grid.
pub const KERNEL_SIGMAS: f64 = 6.0;

/// Relative tolerance for treating a slightly indefinite covariance as PSD.
pub const PSD_TOL: f64 = 1e-12;

/// Samples `g(G; C) = |C|^(-1/2) exp(-G^T (2C)^(-1) G)`, which integrates to
/// one under `dx dp / 2pi`.
pub fn gaussian_kernel(c: &CorrelationMatrix, grid: &PhaseGrid) -> Result<GridField> {
    gaussian_kernel_at(c, grid, (0.0, 0.0))
}

/// [`gaussian_kernel`] centred on `(x0, p0)`.
pub fn gaussian_kernel_at(
    c: &CorrelationMatrix,
    grid: &PhaseGrid,
    centre: (f64, f64),
) -> Result<GridField> {
    if !c.is_finite() || !c.is_positive_definite() {
        return domain(format!("kernel covariance {c:?} is not positive definite"));
    }
    let (sx, sp) = (KERNEL_SIGMAS * c.cxx.sqrt(), KERNEL_SIGMAS * c.cpp.sqrt());
    let need = Bounds {
        x_min: centre.0 - sx,
        x_max: centre.0 + sx,
        p_min: centre.1 - sp,
        p_max: centre.1 + sp,
    };
    if need.x_min < grid.x_min
        || need.x_max > grid.x_max
        || need.p_min < grid.p_min
        || need.p_max > grid.p_max
    {
        return Err(Error::Coverage {
            message: format!("kernel {c:?} needs {KERNEL_SIGMAS} standard deviations on each side"),
            required: Some(need),
        });
    }
    let inv = c.inverse().expect("positive definite");
    let amp = c.det().powf(-0.5);
    let values = Array2::from_shape_fn((grid.nx, grid.np), |(i, j)| {
        let (x, p) = (grid.x(i) - centre.0, grid.p(j) - centre.1);
        amp * (-0.5 * inv.quadratic_form(x, p)).exp()
    });
    GridField::generic(*grid, values)
}

/// Fourier multiplier `exp(-1/2 k^T C k)` on the grid's FFT wavenumbers.
pub(crate) fn gaussian_multiplier(grid: &PhaseGrid, c: &CorrelationMatrix) -> Array2<f64> {
    let kx = grid.kxs();
    let kp = grid.kps();
    Array2::from_shape_fn((grid.nx, grid.np), |(i, j)| {
        (-0.5 * c.quadratic_form(kx[i], kp[j])).exp()
    })
}

/// Validates a coarse-graining covariance and returns its PSD projection.
pub(crate) fn admissible_covariance(c: &CorrelationMatrix) -> Result<CorrelationMatrix> {
    if !c.is_finite() {
        return domain(format!("covariance {c:?} is not finite"));
    }
    if !c.is_psd(PSD_TOL * c.scale()) {
        return domain(format!(
            "covariance {c:?} has a negative eigenvalue {:.3e}",
            c.eigenvalues().0
        ));
    }
    Ok(c.clip_psd())
}

fn check_kernel_fits(grid: &PhaseGrid, c: &CorrelationMatrix) -> Result<()> {
    let (sx, sp) = (KERNEL_SIGMAS * c.cxx.sqrt(), KERNEL_SIGMAS * c.cpp.sqrt());
    if sx > 0.5 * grid.len_x() || sp > 0.5 * grid.len_p() {
        let (cx, cp) = (
            0.5 * (grid.x_min + grid.x_max),
            0.5 * (grid.p_min + grid.p_max),
        );
        return Err(Error::Coverage {
            message: format!(
                "kernel {c:?} spans {sx:.3} x {sp:.3} (6 sigma), wider than half the periodic domain"
            ),
            required: Some(Bounds {
                x_min: cx - 2.0 * sx,
                x_max: cx + 2.0 * sx,
                p_min: cp - 2.0 * sp,
                p_max: cp + 2.0 * sp,
            }),
        });
    }
    Ok(())
}

/// Gaussian coarse-graining `g(.; C) * f`, computed spectrally.
///
/// `C` may be singular (only the non-null directions are smoothed). Returns
/// `f` unchanged for `C = 0`. Fails rather than alias when the kernel or the
/// smoothed field would wrap around the periodic domain.
pub fn convolve(f: &GridField, c: &CorrelationMatrix) -> Result<GridField> {
    let c = admissible_covariance(c)?;
    if c.is_zero() {
        return Ok(f.clone());
    }
    check_kernel_fits(f.grid(), &c)?;
    let out = f.with_values(apply_multiplier(f, &gaussian_multiplier(f.grid(), &c)));
    out.check_contained("convolution")?;
    Ok(out)
}

pub(crate) fn apply_multiplier(f: &GridField, mult: &Array2<f64>) -> Array2<f64> {
    let t = Transform2::new(f.grid());
    let mut spec = t.forward(f.values());
    let np = f.grid().np;
    let m = mult.as_slice().expect("standard layout");
    par::for_each_chunk_mut(
        spec.as_slice_mut().expect("standard layout"),
        np,
        |i, row| {
            for (z, &w) in row.iter_mut().zip(&m[i * np..(i + 1) * np]) {
                *z *= w;
            }
        },
    );
    t.inverse_real(spec)
}

/// Multiplies the 2-D spectrum of `f` by an arbitrary complex mask.
pub(crate) fn apply_complex_multiplier(f: &GridField, mult: &Array2<Complex64>) -> Array2<f64> {
    let t = Transform2::new(f.grid());
    let mut spec = t.forward(f.values());
    spec.zip_mut_with(mult, |z, w| *z *= w);
    t.inverse_real(spec)
}

/// Free streaming `f(x, p) -> f(x - tau p, p)` with `tau = t/m`, as an exact
/// spectral translation of every momentum column.
pub fn shear(f: &GridField, tau: f64) -> Result<GridField> {
    if tau == 0.0 {
        return Ok(f.clone());
    }
    if !tau.is_finite() {
        return domain(format!("shear parameter must be finite, got {tau}"));
    }
    let g = *f.grid();
    if let Some(b) = f.support_box(SUPPORT_TOL) {
        let corners = [
            b.x_min - tau * b.p_min,
            b.x_min - tau * b.p_max,
            b.x_max - tau * b.p_min,
            b.x_max - tau * b.p_max,
        ];
        let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo < g.x_min || hi > g.x(g.nx - 1) {
            return Err(Error::Coverage {
                message: format!(
                    "free streaming by tau = {tau} carries the field outside the x domain"
                ),
                required: Some(Bounds {
                    x_min: lo.min(g.x_min),
                    x_max: hi.max(g.x_max),
                    p_min: g.p_min,
                    p_max: g.p_max,
                }),
            });
        }
    }
    let values = shift_columns(f.values(), &g, |j| tau * g.p(j));
    let out = f.with_values(values);
    out.check_contained("free streaming")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FieldKind;
    use proptest::prelude::*;

    fn grid() -> PhaseGrid {
        PhaseGrid::symmetric(128, 128, 12.0, 12.0).unwrap()
    }

    #[test]
    fn kernel_peak_values() {
        let g = grid();
        let k = gaussian_kernel(&CorrelationMatrix::diag(1.0, 1.0), &g).unwrap();
        assert!((k.get(64, 64) - 1.0).abs() < 1e-15);
        let k = gaussian_kernel(&CorrelationMatrix::diag(4.0, 1.0), &g).unwrap();
        assert!((k.get(64, 64) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kernel_errors() {
        let g = grid();
        assert!(matches!(
            gaussian_kernel(&CorrelationMatrix::new(1.0, 1.0, 1.0), &g),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            gaussian_kernel(&CorrelationMatrix::diag(9.0, 1.0), &g),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn kernel_integrates_to_one() {
        let g = PhaseGrid::symmetric(256, 256, 20.0, 20.0).unwrap();
        for &(a, b, r) in &[
            (0.1, 0.1, 0.0),
            (1.0, 1.0, 0.5),
            (10.0, 10.0, -0.3),
            (3.0, 0.2, 0.9),
        ] {
            let c = CorrelationMatrix::new(a, r * f64::sqrt(a * b), b);
            let k = gaussian_kernel(&c, &g).unwrap();
            assert!((k.integral() - 1.0).abs() < 1e-9, "{c:?}: {}", k.integral());
        }
    }

    #[test]
    fn zero_covariance_is_identity() {
        let g = grid();
        let f = gaussian_kernel(&CorrelationMatrix::new(1.0, 0.2, 0.5), &g).unwrap();
        let out = convolve(&f, &CorrelationMatrix::zero()).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn semigroup_on_kernels() {
        let g = grid();
        let c1 = CorrelationMatrix::new(0.8, 0.3, 0.5);
        let c2 = CorrelationMatrix::new(0.4, -0.1, 0.9);
        let f = gaussian_kernel(&c1, &g).unwrap();
        let out = convolve(&f, &c2).unwrap();
        let expected = gaussian_kernel(&(c1 + c2), &g).unwrap();
        assert!(out.sup_distance(&expected).unwrap() < 1e-10);
    }

    #[test]
    fn rejects_indefinite_and_oversized() {
        let g = grid();
        let f = gaussian_kernel(&CorrelationMatrix::diag(1.0, 1.0), &g).unwrap();
        assert!(matches!(
            convolve(&f, &CorrelationMatrix::diag(1.0, -0.1)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            convolve(&f, &CorrelationMatrix::diag(5.0, 1.0)),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn singular_kernel_smooths_one_direction() {
        let g = grid();
        let f = gaussian_kernel(&CorrelationMatrix::diag(0.5, 0.5), &g).unwrap();
        let out = convolve(&f, &CorrelationMatrix::diag(0.7, 0.0)).unwrap();
        let expected = gaussian_kernel(&CorrelationMatrix::diag(1.2, 0.5), &g).unwrap();
        assert!(out.sup_distance(&expected).unwrap() < 1e-10);
    }

    #[test]
    fn shear_moves_gaussian_covariance() {
        let g = grid();
        let c = CorrelationMatrix::new(0.6, 0.1, 0.8);
        let f = gaussian_kernel(&c, &g).unwrap();
        let out = shear(&f, 0.7).unwrap();
        let expected = gaussian_kernel(&c.sheared(0.7), &g).unwrap();
        assert!(out.sup_distance(&expected).unwrap() < 1e-10);
    }

    #[test]
    fn shear_out_of_domain() {
        let g = grid();
        let f = gaussian_kernel(&CorrelationMatrix::diag(0.5, 2.0), &g).unwrap();
        assert!(matches!(shear(&f, 5.0), Err(Error::Coverage { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn convolution_semigroup_and_mass(
            a1 in 0.1f64..1.0, b1 in 0.1f64..1.0, r1 in -0.8f64..0.8,
            a2 in 0.1f64..1.0, b2 in 0.1f64..1.0, r2 in -0.8f64..0.8,
        ) {
            let g = grid();
            let c1 = CorrelationMatrix::new(a1, r1 * (a1 * b1).sqrt(), b1);
            let c2 = CorrelationMatrix::new(a2, r2 * (a2 * b2).sqrt(), b2);
            // a lumpy test field: two offset Gaussians with different weights
            let base = CorrelationMatrix::new(0.4, 0.1, 0.3);
            let f1 = gaussian_kernel_at(&base, &g, (1.0, -0.5)).unwrap();
            let f2 = gaussian_kernel_at(&base, &g, (-1.5, 1.0)).unwrap();
            let f = GridField::new(g, f1.values() * 0.7 + f2.values() * 0.3, FieldKind::Wigner).unwrap();
            let two_step = convolve(&convolve(&f, &c1).unwrap(), &c2).unwrap();
            let one_step = convolve(&f, &(c1 + c2)).unwrap();
            prop_assert!(two_step.sup_distance(&one_step).unwrap() < 1e-9);
            prop_assert!((two_step.integral() - f.integral()).abs() < 1e-9);
        }
    }
}
