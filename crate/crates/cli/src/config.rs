//! Run configuration: a JSON file merged with command-line overrides.
//!
//! Lengths are in units of sigma0, momenta in 1/sigma0 and times in t0, so
//! the same config describes the same physics for any `m` and `D`.

use std::f64::consts::PI;
use std::fs::File;
use std::path::Path;

use clap::{Args, ValueEnum};
use phasepos::pointer::PointerFamily;
use phasepos::{PhaseGrid, SystemParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const DEFAULT_GRID: usize = 512;
/// Momentum half-width in 1/sigma0.
pub const DEFAULT_P_HALF: f64 = 14.0;
/// Position half-width cap in sigma0.
pub const MAX_X_HALF: f64 = 40.0;
/// Momentum reach of the built-in states in 1/sigma0, used to size dx.
const STATE_MOMENTUM_REACH: f64 = 7.0;
/// Metric radius of kept modes; the peak gain is exp(cutoff^2 / 2).
pub const DEFAULT_CUTOFF: f64 = 4.0;
/// Cat separation in sigma0.
pub const DEFAULT_SEP: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Vacuum,
    Fock,
    Cat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    CertifyW,
    CertifyP,
    DecoherenceTimes,
    Sweep,
    OracleCompare,
}

/// Every key is optional here; [`Config::resolve`] fills defaults and
/// reports the keys a subcommand still needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Mass.
    #[arg(long)]
    pub m: Option<f64>,
    /// Decoherence strength.
    #[arg(long)]
    pub d: Option<f64>,
    /// Initial state.
    #[arg(long, value_enum)]
    pub state: Option<StateKind>,
    /// Fock level for `--state fock`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Cat separation in sigma0 (default 6).
    #[arg(long)]
    pub sep: Option<f64>,
    /// Pointer family: robust, coherent or "re,im" for alpha.
    #[arg(long)]
    pub family: Option<String>,
    /// Samples per phase-space axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Position half-width in sigma0.
    #[arg(long)]
    pub x_half: Option<f64>,
    /// Momentum half-width in 1/sigma0.
    #[arg(long)]
    pub p_half: Option<f64>,
    /// Time in t0.
    #[arg(long)]
    pub t: Option<f64>,
    /// Finite-difference step in t0.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Certification probe times in t0.
    #[arg(long, num_args = 1..)]
    pub probes: Option<Vec<f64>>,
    /// Spectral radius kept when deconvolving below the P threshold.
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long, num_args = 1..)]
    pub m_list: Option<Vec<f64>>,
    #[arg(long, num_args = 1..)]
    pub d_list: Option<Vec<f64>>,
    #[arg(long, num_args = 1..)]
    pub family_list: Option<Vec<String>>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        $(if $top.$field.is_some() { $base.$field = $top.$field.clone(); })*
    };
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path)
            .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
        serde_json::from_reader(file)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `top` win.
    pub fn overlay(&mut self, top: &Config) {
        overlay!(
            self,
            top,
            m,
            d,
            state,
            n,
            sep,
            family,
            grid,
            x_half,
            p_half,
            t,
            dt,
            probes,
            cutoff,
            m_list,
            d_list,
            family_list
        );
    }

    /// Fills defaults and checks that `command` has everything it needs.
    pub fn resolve(mut self, command: Command) -> Result<Self, CliError> {
        let mut missing = Vec::new();
        let needs_state = matches!(
            command,
            Command::Evolve | Command::CertifyW | Command::CertifyP | Command::OracleCompare
        );
        if needs_state && self.state.is_none() {
            missing.push("state");
        }
        if matches!(command, Command::Evolve | Command::OracleCompare) && self.t.is_none() {
            missing.push("t");
        }
        if command == Command::Sweep {
            if self.m_list.is_none() {
                missing.push("m_list");
            }
            if self.d_list.is_none() {
                missing.push("d_list");
            }
        }
        if self.state == Some(StateKind::Fock) && self.n.is_none() {
            missing.push("n");
        }
        if !missing.is_empty() {
            return Err(CliError::Missing(
                missing.iter().map(|s| s.to_string()).collect(),
            ));
        }

        self.m.get_or_insert(1.0);
        self.d.get_or_insert(1.0);
        self.family.get_or_insert_with(|| "robust".into());
        let n = *self.grid.get_or_insert(DEFAULT_GRID);
        let p_half = *self.p_half.get_or_insert(DEFAULT_P_HALF);
        self.x_half.get_or_insert_with(|| default_x_half(n, p_half));
        self.cutoff.get_or_insert(DEFAULT_CUTOFF);
        if self.state == Some(StateKind::Cat) {
            self.sep.get_or_insert(DEFAULT_SEP);
        }
        if command == Command::Sweep {
            self.family_list
                .get_or_insert_with(|| vec!["robust".into()]);
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v.is_finite() && v > 0.0) => Err(CliError::Config(format!(
                "{name} must be positive, got {v}"
            ))),
            _ => Ok(()),
        };
        positive("sep", self.sep)?;
        positive("x_half", self.x_half)?;
        positive("p_half", self.p_half)?;
        positive("dt", self.dt)?;
        positive("cutoff", self.cutoff)?;
        if let Some(t) = self.t {
            if !(t.is_finite() && t >= 0.0) {
                return Err(CliError::Config(format!("t must be non-negative, got {t}")));
            }
        }
        for (name, list) in [("m_list", &self.m_list), ("d_list", &self.d_list)] {
            if list.as_ref().is_some_and(|l| l.is_empty()) {
                return Err(CliError::Config(format!("{name} is empty")));
            }
        }
        if self.family_list.as_ref().is_some_and(|l| l.is_empty()) {
            return Err(CliError::Config("family_list is empty".into()));
        }
        if let Some(f) = &self.family {
            parse_family(f, SystemParams::unit())?;
        }
        for f in self.family_list.iter().flatten() {
            parse_family(f, SystemParams::unit())?;
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON of the command and resolved config.
    pub fn hash(&self, command: Command) -> String {
        let canonical = serde_json::to_vec(&(command, self)).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn params(&self) -> Result<SystemParams, CliError> {
        Ok(SystemParams::new(
            self.m.unwrap_or(1.0),
            self.d.unwrap_or(1.0),
        )?)
    }

    pub fn pointer_family(&self, params: SystemParams) -> Result<PointerFamily, CliError> {
        parse_family(self.family.as_deref().unwrap_or("robust"), params)
    }

    pub fn phase_grid(&self, params: &SystemParams) -> Result<PhaseGrid, CliError> {
        let s = params.sigma0();
        let n = self.grid.unwrap_or(DEFAULT_GRID);
        let p_half = self.p_half.unwrap_or(DEFAULT_P_HALF);
        let x_half = self.x_half.unwrap_or_else(|| default_x_half(n, p_half));
        Ok(PhaseGrid::symmetric(n, n, x_half * s, p_half / s)?)
    }
}

/// Widest x range whose spacing still resolves `p_half` plus the momentum
/// reach of the built-in states in the Wigner transform.
pub fn default_x_half(n: usize, p_half: f64) -> f64 {
    (n as f64 * PI / (2.0 * (p_half + STATE_MOMENTUM_REACH))).min(MAX_X_HALF)
}

pub fn parse_family(spec: &str, params: SystemParams) -> Result<PointerFamily, CliError> {
    match spec.trim() {
        "robust" => Ok(PointerFamily::robust(params)),
        "coherent" => Ok(PointerFamily::coherent(params)),
        other => {
            let parts: Vec<&str> = other.split(',').map(str::trim).collect();
            let bad = || {
                CliError::Config(format!(
                    "family must be robust, coherent or \"re,im\", got {other:?}"
                ))
            };
            if parts.len() != 2 {
                return Err(bad());
            }
            let re: f64 = parts[0].parse().map_err(|_| bad())?;
            let im: f64 = parts[1].parse().map_err(|_| bad())?;
            Ok(PointerFamily::new(re, im, params)?)
        }
    }
}
