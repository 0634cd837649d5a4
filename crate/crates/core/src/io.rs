//! CSV export of fields, density matrices and traces, with JSON sidecars
//! carrying grid geometry and provenance.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::evolution::TracePoint;
use crate::grid::{FieldKind, GridField, PhaseGrid, Reliability};
use crate::params::SystemParams;
use crate::states::DensityMatrix;

/// Sidecar describing a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub nx: usize,
    pub np: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub kind: FieldKind,
    pub reliable: bool,
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<SystemParams>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config_hash: Option<String>,
}

impl FieldMetadata {
    pub fn of(field: &GridField) -> Self {
        let g = field.grid();
        let r = field.reliability();
        Self {
            nx: g.nx,
            np: g.np,
            x_min: g.x_min,
            x_max: g.x_max,
            p_min: g.p_min,
            p_max: g.p_max,
            kind: field.kind(),
            reliable: r.reliable,
            reason: r.reason.clone(),
            params: None,
            family: None,
            t: None,
            config_hash: None,
        }
    }

    pub fn grid(&self) -> Result<PhaseGrid> {
        PhaseGrid::new(
            self.nx,
            self.np,
            (self.x_min, self.x_max),
            (self.p_min, self.p_max),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct FieldRow {
    x: f64,
    p: f64,
    value: f64,
}

#[derive(Serialize)]
struct DensityRow {
    q: f64,
    q_prime: f64,
    re: f64,
    im: f64,
}

/// Path of the JSON sidecar belonging to a CSV file.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes `x,p,value` rows (x outer) and the sidecar next to it.
pub fn write_field(csv: &Path, field: &GridField, meta: &FieldMetadata) -> Result<()> {
    let mut w = csv::Writer::from_path(csv)?;
    let g = field.grid();
    for ((i, j), &value) in field.values().indexed_iter() {
        w.serialize(FieldRow {
            x: g.x(i),
            p: g.p(j),
            value,
        })?;
    }
    w.flush()?;
    write_json(&sidecar_path(csv), meta)
}

/// Reads a field written by [`write_field`].
pub fn read_field(csv: &Path) -> Result<(GridField, FieldMetadata)> {
    let meta: FieldMetadata = serde_json::from_reader(File::open(sidecar_path(csv))?)?;
    let grid = meta.grid()?;
    let mut r = csv::Reader::from_path(csv)?;
    let mut values = Vec::with_capacity(grid.nx * grid.np);
    for row in r.deserialize() {
        let row: FieldRow = row?;
        values.push(row.value);
    }
    if values.len() != grid.nx * grid.np {
        return domain(format!(
            "{} holds {} samples, sidecar describes {}",
            csv.display(),
            values.len(),
            grid.nx * grid.np
        ));
    }
    let values = Array2::from_shape_vec((grid.nx, grid.np), values).expect("length checked");
    let reliability = Reliability {
        reliable: meta.reliable,
        reason: meta.reason.clone(),
    };
    let field = GridField::unchecked(grid, values, meta.kind)?.with_reliability(reliability);
    Ok((field, meta))
}

/// `q,q_prime,re,im` rows of a density matrix.
pub fn write_density(csv: &Path, rho: &DensityMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(csv)?;
    let q = rho.q_grid();
    for ((j, k), z) in rho.entries().indexed_iter() {
        w.serialize(DensityRow {
            q: q.q(j),
            q_prime: q.q(k),
            re: z.re,
            im: z.im,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// `t,min_value,norm,p2` rows.
pub fn write_trace(csv: &Path, trace: &[TracePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(csv)?;
    for p in trace {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
