//! Physical configuration of the decohering free particle (hbar = 1).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::matrix::CorrelationMatrix;

/// Mass and decoherence strength, with the derived equilibrium width and
/// decoherence timescale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    m: f64,
    d: f64,
    sigma0: f64,
    t0: f64,
}

impl SystemParams {
    /// Builds parameters for mass `m` and decoherence strength `d`
    /// (momentum^2 per unit time).
    pub fn new(m: f64, d: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return domain(format!("mass must be positive and finite, got {m}"));
        }
        if !(d.is_finite() && d > 0.0) {
            return domain(format!(
                "decoherence strength must be positive and finite, got {d}"
            ));
        }
        Ok(Self {
            m,
            d,
            sigma0: (d * m).powf(-0.25),
            t0: (m / d).sqrt(),
        })
    }

    /// m = D = 1: lengths in sigma0, momenta in 1/sigma0, times in t0.
    pub fn unit() -> Self {
        Self::new(1.0, 1.0).expect("unit parameters are valid")
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Decoherence strength D.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Equilibrium width (Dm)^(-1/4).
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Decoherence timescale sqrt(m/D).
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Scale factors to and from the dimensionless system with m = D = 1.
    pub fn units(&self) -> Units {
        Units {
            length: self.sigma0,
            momentum: 1.0 / self.sigma0,
            time: self.t0,
        }
    }

    /// Coarse-graining covariance accumulated by free evolution plus momentum
    /// diffusion after time `t`:
    /// `D t [[t^2/3m^2, t/2m], [t/2m, 1]]`.
    pub fn cw_of_t(&self, t: f64) -> Result<CorrelationMatrix> {
        if !(t.is_finite() && t >= 0.0) {
            return domain(format!("time must be non-negative, got {t}"));
        }
        let (m, d) = (self.m, self.d);
        Ok(CorrelationMatrix::new(
            d * t * t * t / (3.0 * m * m),
            d * t * t / (2.0 * m),
            d * t,
        ))
    }

    /// Closed form of `det C_W(t) = D^2 t^4 / 12 m^2`.
    pub fn cw_det(&self, t: f64) -> f64 {
        self.d * self.d * t.powi(4) / (12.0 * self.m * self.m)
    }
}

/// Free-function form of [`SystemParams::new`].
pub fn make_params(m: f64, d: f64) -> Result<SystemParams> {
    SystemParams::new(m, d)
}

/// Free-function form of [`SystemParams::cw_of_t`].
pub fn cw_of_t(params: &SystemParams, t: f64) -> Result<CorrelationMatrix> {
    params.cw_of_t(t)
}

/// Natural-unit sizes of one dimensionless unit of length, momentum and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub length: f64,
    pub momentum: f64,
    pub time: f64,
}

impl Units {
    pub fn to_dimensionless(&self, x: f64, p: f64, t: f64) -> (f64, f64, f64) {
        (x / self.length, p / self.momentum, t / self.time)
    }

    pub fn to_natural(&self, x: f64, p: f64, t: f64) -> (f64, f64, f64) {
        (x * self.length, p * self.momentum, t * self.time)
    }
}
