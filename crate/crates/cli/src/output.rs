//! Artifact writer for one run: every file gets the config hash, and the
//! run ends with a manifest listing what was written.

use std::fs;
use std::path::{Path, PathBuf};

use phasepos::io::{sidecar_path, write_field, write_json, FieldMetadata};
use phasepos::{GridField, SystemParams};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Command, Config};
use crate::CliError;

pub struct Outputs {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config_hash: &'a str,
    columns: &'a [&'a str],
    description: &'a str,
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: Command,
    config: &'a Config,
    config_hash: &'a str,
    parallel: bool,
    files: Vec<ManifestEntry>,
}

/// JSON body with the config hash prepended.
#[derive(Serialize)]
pub struct Tagged<'a, T: Serialize> {
    pub config_hash: &'a str,
    #[serde(flatten)]
    pub body: T,
}

impl Outputs {
    pub fn create(dir: &Path, hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash,
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn track_sidecar(&mut self, csv_name: &str) {
        let side = sidecar_path(Path::new(csv_name));
        self.files.push(side.to_string_lossy().into_owned());
    }

    pub fn field(
        &mut self,
        name: &str,
        field: &GridField,
        params: &SystemParams,
        family: Option<String>,
        t: f64,
    ) -> Result<(), CliError> {
        let meta = FieldMetadata {
            params: Some(*params),
            family,
            t: Some(t),
            config_hash: Some(self.hash.clone()),
            ..FieldMetadata::of(field)
        };
        let path = self.path(name);
        write_field(&path, field, &meta)?;
        self.track_sidecar(name);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, body: T) -> Result<(), CliError> {
        let hash = self.hash.clone();
        let path = self.path(name);
        write_json(
            &path,
            &Tagged {
                config_hash: &hash,
                body,
            },
        )?;
        Ok(())
    }

    /// Plain table with a sidecar naming its columns.
    pub fn table<R: Serialize>(
        &mut self,
        name: &str,
        columns: &[&str],
        description: &str,
        rows: &[R],
    ) -> Result<(), CliError> {
        self.table_without_sidecar(name, columns, rows)?;
        let path = self.dir.join(name);
        let side = Sidecar {
            config_hash: &self.hash,
            columns,
            description,
        };
        write_json(&sidecar_path(&path), &side)?;
        self.track_sidecar(name);
        Ok(())
    }

    pub fn table_without_sidecar<R: Serialize>(
        &mut self,
        name: &str,
        columns: &[&str],
        rows: &[R],
    ) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(&path)?;
        w.write_record(columns)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn finish(mut self, command: Command, config: &Config) -> Result<PathBuf, CliError> {
        self.files.sort();
        self.files.dedup();
        let mut entries = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let bytes = fs::read(self.dir.join(name))?;
            entries.push(ManifestEntry {
                path: name.clone(),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes)),
            });
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            config_hash: &self.hash,
            parallel: phasepos::par::is_parallel(),
            files: entries,
        };
        let path = self.dir.join("manifest.json");
        write_json(&path, &manifest)?;
        Ok(path)
    }
}
