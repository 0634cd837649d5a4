//! Negativity metrics, the two positivity-time solvers and the probe-based
//! certifiers for the Wigner and P functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::evolve_wigner;
use crate::grid::GridField;
use crate::kernel::PSD_TOL;
use crate::par;
use crate::params::SystemParams;
use crate::pointer::PointerFamily;
use crate::quasiprob::p_from_w;

/// Final bracket width of the threshold solvers, in units of t0.
pub const BRACKET_REL: f64 = 1e-10;

/// Default number of certification probes.
pub const DEFAULT_PROBES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativityReport {
    pub min_value: f64,
    pub min_location: (f64, f64),
    /// `int |min(f, 0)| dx dp / 2pi`.
    pub negative_volume: f64,
    pub certified_positive: bool,
    pub epsilon: f64,
}

pub fn negativity(f: &GridField) -> NegativityReport {
    let (min_value, min_location) = f.min_with_location();
    let neg: f64 = f.values().iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    let epsilon = f.epsilon_grid();
    NegativityReport {
        min_value,
        min_location,
        negative_volume: neg * f.grid().cell_measure(),
        certified_positive: min_value >= -epsilon,
        epsilon,
    }
}

/// `3^(1/4) t0`, where `det C_W(t) = 1/4`.
pub fn wigner_positivity_time(params: &SystemParams) -> f64 {
    3f64.powf(0.25) * params.t0()
}

/// Smallest `t` for which `pred` holds, given that it is monotone
/// (false then true) in `t`. Brackets start at `[lo, hi]` and are widened
/// as needed; the returned time satisfies `pred`.
fn first_true(pred: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    while pred(lo) && lo > width {
        hi = lo;
        lo *= 0.5;
    }
    while !pred(hi) {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Whether `C_W(t) - C_1/4` is positive semidefinite, i.e. whether the
/// forward P route is available at `t`.
pub fn forward_route_available(params: &SystemParams, family: &PointerFamily, t: f64) -> bool {
    let cq = family.c_quarter();
    match params.cw_of_t(t) {
        Ok(cw) => {
            let c = cw - cq;
            c.is_psd(PSD_TOL * c.scale().max(cq.scale()))
        }
        Err(_) => false,
    }
}

/// Onset of positive semidefiniteness of `C_W(t) - C_1/4`.
pub fn factorization_threshold(params: &SystemParams, family: &PointerFamily) -> f64 {
    let t0 = params.t0();
    first_true(
        |t| forward_route_available(params, family, t),
        0.1 * t0,
        10.0 * t0,
        BRACKET_REL * t0,
    )
}

/// `det(C_W(t) - C_1/4) - 1/4`.
pub fn det_residual(params: &SystemParams, family: &PointerFamily, t: f64) -> f64 {
    let c = params.cw_of_t(t).expect("non-negative time") - family.c_quarter();
    c.det() - 0.25
}

/// Smallest `t` with `C_W(t) - C_1/4` positive semidefinite and of
/// determinant at least 1/4, by bisection.
pub fn p_positivity_time(params: &SystemParams, family: &PointerFamily) -> f64 {
    let t0 = params.t0();
    let cq = family.c_quarter();
    first_true(
        |t| {
            let c = params.cw_of_t(t).expect("non-negative time") - cq;
            c.eigenvalues().0 >= 0.0 && c.det() >= 0.25
        },
        0.1 * t0,
        10.0 * t0,
        BRACKET_REL * t0,
    )
}

/// `n` log-spaced times in `[0.1 t0, 4 t0]`.
pub fn default_probe_schedule(params: &SystemParams) -> Vec<f64> {
    log_schedule(0.1 * params.t0(), 4.0 * params.t0(), DEFAULT_PROBES)
}

pub fn log_schedule(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![from],
        _ => {
            let (a, b) = (from.ln(), to.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeStatus {
    #[serde(rename = "certified")]
    Certified,
    #[serde(rename = "negative")]
    Negative,
    #[serde(rename = "forward route unavailable")]
    Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub t: f64,
    pub min_value: Option<f64>,
    pub negative_volume: Option<f64>,
    pub certified: Option<bool>,
    pub status: ProbeStatus,
}

impl ProbeResult {
    fn from_report(t: f64, r: &NegativityReport) -> Self {
        Self {
            t,
            min_value: Some(r.min_value),
            negative_volume: Some(r.negative_volume),
            certified: Some(r.certified_positive),
            status: if r.certified_positive {
                ProbeStatus::Certified
            } else {
                ProbeStatus::Negative
            },
        }
    }

    fn unavailable(t: f64) -> Self {
        Self {
            t,
            min_value: None,
            negative_volume: None,
            certified: None,
            status: ProbeStatus::Unavailable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub wigner: f64,
    pub p: Option<f64>,
    pub factorization: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub state: String,
    pub family: Option<String>,
    pub thresholds: Thresholds,
    pub probes: Vec<ProbeResult>,
    /// Earliest probe from which every later evaluated probe is certified.
    pub empirical_crossing: Option<f64>,
    /// Latest evaluated probe that is not certified.
    pub last_negative: Option<f64>,
    /// Every evaluated probe at or beyond the theoretical bound is certified.
    pub bound_respected: bool,
}

impl CertificationReport {
    fn assemble(
        state: &str,
        family: Option<String>,
        thresholds: Thresholds,
        bound: f64,
        probes: Vec<ProbeResult>,
    ) -> Self {
        let evaluated: Vec<&ProbeResult> =
            probes.iter().filter(|p| p.certified.is_some()).collect();
        let mut crossing = None;
        for p in evaluated.iter().rev() {
            if p.certified == Some(true) {
                crossing = Some(p.t);
            } else {
                break;
            }
        }
        let last_negative = evaluated
            .iter()
            .rev()
            .find(|p| p.certified == Some(false))
            .map(|p| p.t);
        let bound_respected = evaluated
            .iter()
            .filter(|p| p.t >= bound)
            .all(|p| p.certified == Some(true));
        Self {
            state: state.to_string(),
            family,
            thresholds,
            probes,
            empirical_crossing: crossing,
            last_negative,
            bound_respected,
        }
    }
}

fn sorted_probes(probes: &[f64]) -> Result<Vec<f64>> {
    if let Some(t) = probes.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::Domain(format!(
            "probe time {t} is not a non-negative number"
        )));
    }
    let mut v = probes.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Evaluates the Wigner function at every probe time and certifies
/// positivity under the grid tolerance.
pub fn certify_theorem_w(
    state: &str,
    w0: &GridField,
    params: &SystemParams,
    probes: &[f64],
) -> Result<CertificationReport> {
    let times = sorted_probes(probes)?;
    let results: Result<Vec<ProbeResult>> = par::map_slice(&times, |&t| {
        let w = evolve_wigner(w0, params, t)?;
        Ok(ProbeResult::from_report(t, &negativity(&w)))
    })
    .into_iter()
    .collect();
    let bound = wigner_positivity_time(params);
    let thresholds = Thresholds {
        wigner: bound,
        p: None,
        factorization: None,
    };
    Ok(CertificationReport::assemble(
        state, None, thresholds, bound, results?,
    ))
}

/// Evaluates the forward-route P function at every probe time. Probes
/// before the factorization threshold are reported as unavailable.
pub fn certify_theorem_p(
    state: &str,
    w0: &GridField,
    params: &SystemParams,
    family: &PointerFamily,
    probes: &[f64],
) -> Result<CertificationReport> {
    let times = sorted_probes(probes)?;
    let results: Result<Vec<ProbeResult>> = par::map_slice(&times, |&t| {
        if !forward_route_available(params, family, t) {
            return Ok(ProbeResult::unavailable(t));
        }
        let p = p_from_w(w0, family, params, t)?;
        Ok(ProbeResult::from_report(t, &negativity(&p)))
    })
    .into_iter()
    .collect();
    let bound = p_positivity_time(params, family);
    let thresholds = Thresholds {
        wigner: wigner_positivity_time(params),
        p: Some(bound),
        factorization: Some(factorization_threshold(params, family)),
    };
    Ok(CertificationReport::assemble(
        state,
        Some(family.label()),
        thresholds,
        bound,
        results?,
    ))
}
