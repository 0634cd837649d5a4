//! Phase-space toolkit for a free particle under position decoherence.
//!
//! Wigner functions evolve under `dW/dt = -(p/m) dW/dx + (D/2) d^2W/dp^2`,
//! which acts as free streaming followed by a growing Gaussian
//! coarse-graining. The crate evolves W, Q and P functions for arbitrary
//! Gaussian pointer families and certifies the times after which W and P
//! become non-negative.

pub mod error;
pub mod evolution;
mod fft;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod matrix;
pub mod par;
pub mod params;
pub mod pointer;
pub mod positivity;
pub mod quasiprob;
pub mod states;

pub use error::{Bounds, Error, Result};
pub use evolution::{
    consistency_p_vs_w, diffusion_matrix, evolve_p_function, evolve_wigner, fd_fokker_planck,
    DiffusionMatrix,
};
pub use grid::{FieldKind, GridField, Moments, PhaseGrid, Reliability};
pub use kernel::{convolve, gaussian_kernel, shear};
pub use matrix::{det_condition, CorrelationMatrix};
pub use params::{cw_of_t, make_params, SystemParams, Units};
pub use pointer::{PointerFamily, QGrid, Wavefunction};
pub use positivity::{
    certify_theorem_p, certify_theorem_w, negativity, p_positivity_time, wigner_positivity_time,
    CertificationReport, NegativityReport,
};
pub use quasiprob::{
    p_deconvolve, p_from_w, q_direct, q_from_w, reconstruct_density, symplectic_fourier,
};
pub use states::{cat_state, density_from_wigner, fock_state, wigner_from_density, DensityMatrix};
