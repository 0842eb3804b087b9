//! Flat `key = value` record of one invocation: resolved config, mesh,
//! input hashes, outputs and per-stage wall-clock times.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pharmonic_core::TriMesh;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, KEYS};
use crate::error::CliError;

pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Default)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
    outputs: Vec<PathBuf>,
    timings: Vec<(String, f64)>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        let mut m = Self::default();
        m.set("version", version_string());
        m.set("command", command);
        for key in KEYS {
            m.set(&format!("config.{key}"), cfg.get(key).unwrap());
        }
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn describe_mesh(&mut self, mesh: &TriMesh, description: &str) {
        self.set("mesh.description", description);
        self.set("mesh.nodes", mesh.n_nodes());
        self.set("mesh.elements", mesh.n_elements());
        self.set("mesh.h", mesh.mesh_size());
    }

    pub fn hash_input(&mut self, name: &str, bytes: &[u8]) {
        self.set(&format!("input.{name}.sha256"), sha256_hex(bytes));
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn outputs(&self) -> &[PathBuf] {
        &self.outputs
    }

    /// Runs `f` and records its wall-clock time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings
            .push((stage.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (i, p) in self.outputs.iter().enumerate() {
            let _ = writeln!(s, "output.{i} = {}", p.display());
        }
        for (stage, secs) in &self.timings {
            let _ = writeln!(s, "timing.{stage}_s = {secs:.6}");
        }
        s
    }

    /// Writes the manifest to `path` after checking every listed output exists.
    pub fn write(&mut self, path: &Path) -> Result<(), CliError> {
        if let Some(missing) = self.outputs.iter().find(|p| !p.exists()) {
            return Err(CliError::Io(format!(
                "output {} missing at manifest time",
                missing.display()
            )));
        }
        self.add_output(path);
        std::fs::write(path, self.render())
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
