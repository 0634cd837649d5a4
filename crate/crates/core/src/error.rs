use std::fmt;

use thiserror::Error;

/// Axis-aligned phase-space (or position) bounds reported by coverage errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "x in [{:.4}, {:.4}], p in [{:.4}, {:.4}]",
            self.x_min, self.x_max, self.p_min, self.p_max
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient grid coverage: {message}{}", .required.map(|b| format!(" (required {b})")).unwrap_or_default())]
    Coverage {
        message: String,
        required: Option<Bounds>,
    },

    #[error("unstable time step dt = {dt:e}: the explicit scheme requires dt <= {bound:e}")]
    Stability { dt: f64, bound: f64 },

    #[error(
        "C_W(t) - C_1/4 is not positive semidefinite at t = {t:.6}; the forward P route needs t >= {t_min:.6}"
    )]
    Factorization { t: f64, t_min: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
