//! Two-dimensional FFT plumbing over `(nx, np)` arrays.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::PhaseGrid;
use crate::par;

/// Rows handed to one worker per FFT batch.
const ROWS_PER_TASK: usize = 16;

pub(crate) struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Unnormalized transform of every contiguous `row_len` row of `data`.
pub(crate) fn fft_rows(data: &mut [Complex64], row_len: usize, plans: &Plans, inverse: bool) {
    let fft = if inverse {
        &plans.inverse
    } else {
        &plans.forward
    };
    par::for_each_chunk_mut(data, row_len * ROWS_PER_TASK, |_, block| fft.process(block));
}

pub(crate) fn transpose<T: Copy + Send + Sync + Default>(a: &Array2<T>) -> Array2<T> {
    a.t().as_standard_layout().into_owned()
}

/// Forward/inverse 2-D transforms matching a grid's shape.
pub(crate) struct Transform2 {
    nx: usize,
    np: usize,
    x: Plans,
    p: Plans,
}

impl Transform2 {
    pub(crate) fn new(grid: &PhaseGrid) -> Self {
        Self {
            nx: grid.nx,
            np: grid.np,
            x: Plans::new(grid.nx),
            p: Plans::new(grid.np),
        }
    }

    fn apply(&self, data: &mut Array2<Complex64>, inverse: bool) {
        debug_assert_eq!(data.dim(), (self.nx, self.np));
        // rows (p axis) are contiguous
        fft_rows(
            data.as_slice_mut().expect("standard layout"),
            self.np,
            &self.p,
            inverse,
        );
        let mut t = transpose(data);
        fft_rows(
            t.as_slice_mut().expect("standard layout"),
            self.nx,
            &self.x,
            inverse,
        );
        *data = transpose(&t);
    }

    pub(crate) fn forward(&self, values: &Array2<f64>) -> Array2<Complex64> {
        let mut c = values.mapv(|v| Complex64::new(v, 0.0));
        self.apply(&mut c, false);
        c
    }

    /// Normalized inverse transform.
    pub(crate) fn inverse_complex(&self, mut spec: Array2<Complex64>) -> Array2<Complex64> {
        self.apply(&mut spec, true);
        let norm = 1.0 / (self.nx * self.np) as f64;
        spec.mapv_inplace(|z| z * norm);
        spec
    }

    /// Normalized inverse transform keeping the real part.
    pub(crate) fn inverse_real(&self, spec: Array2<Complex64>) -> Array2<f64> {
        self.inverse_complex(spec).mapv(|z| z.re)
    }
}

/// Translates each momentum column along x by `shift(j)` using exact
/// spectral phase ramps: `out(x, p_j) = f(x - shift(j), p_j)` on the
/// periodic domain.
pub(crate) fn shift_columns(
    values: &Array2<f64>,
    grid: &PhaseGrid,
    shift: impl Fn(usize) -> f64 + Sync + Send,
) -> Array2<f64> {
    let nx = values.dim().0;
    let plans = Plans::new(nx);
    let kx = grid.kxs();
    // (np, nx): each row is one momentum column
    let mut t = values
        .t()
        .mapv(|v| Complex64::new(v, 0.0))
        .as_standard_layout()
        .into_owned();
    let data = t.as_slice_mut().expect("standard layout");
    fft_rows(data, nx, &plans, false);
    let norm = 1.0 / nx as f64;
    par::for_each_chunk_mut(data, nx, |j, row| {
        let s = shift(j);
        for (z, &k) in row.iter_mut().zip(kx.iter()) {
            *z *= Complex64::from_polar(norm, -k * s);
        }
    });
    fft_rows(data, nx, &plans, true);
    let real = t.mapv(|z| z.re);
    transpose(&real)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhaseGrid;

    #[test]
    fn round_trip() {
        let g = PhaseGrid::symmetric(32, 16, 3.0, 2.0).unwrap();
        let v = Array2::from_shape_fn((32, 16), |(i, j)| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let t = Transform2::new(&g);
        let back = t.inverse_real(t.forward(&v));
        let err = back
            .iter()
            .zip(v.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn forward_matches_direct_dft() {
        let g = PhaseGrid::symmetric(8, 8, 1.0, 1.0).unwrap();
        let v = Array2::from_shape_fn((8, 8), |(i, j)| (i as f64 * 0.3).sin() + j as f64 * 0.1);
        let spec = Transform2::new(&g).forward(&v);
        let (a, b) = (3usize, 5usize);
        let mut direct = Complex64::new(0.0, 0.0);
        for i in 0..8 {
            for j in 0..8 {
                let ph =
                    -2.0 * std::f64::consts::PI * ((a * i) as f64 / 8.0 + (b * j) as f64 / 8.0);
                direct += Complex64::from_polar(v[[i, j]], ph);
            }
        }
        assert!((spec[[a, b]] - direct).norm() < 1e-12);
    }

    #[test]
    fn integer_shift_is_a_roll() {
        let g = PhaseGrid::symmetric(16, 8, 4.0, 2.0).unwrap();
        let v = Array2::from_shape_fn((16, 8), |(i, j)| {
            (-(g.x(i) - 0.5).powi(2)).exp() * (1.0 + j as f64)
        });
        // shift column j by j cells
        let out = shift_columns(&v, &g, |j| j as f64 * g.dx());
        for i in 0..16 {
            for j in 0..8 {
                let src = (i + 16 - j) % 16;
                assert!((out[[i, j]] - v[[src, j]]).abs() < 1e-12);
            }
        }
    }
}
