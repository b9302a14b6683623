//! Run manifests: one JSON sidecar per output file, enough to re-run the
//! exact command.

use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_ms: u128,
}

impl RunManifest {
    pub fn new(
        command: &str,
        argv: &[String],
        seed: Option<u64>,
        inputs: &[&Path],
        outputs: &[&Path],
        started: Instant,
    ) -> Self {
        let path_strings = |ps: &[&Path]| ps.iter().map(|p| p.display().to_string()).collect();
        Self {
            command: command.to_string(),
            argv: argv.to_vec(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: path_strings(inputs),
            outputs: path_strings(outputs),
            wall_ms: started.elapsed().as_millis(),
        }
    }

    pub fn write(&self, path: &PathBuf) -> std::io::Result<()> {
        let mut body = serde_json::to_vec_pretty(self).expect("manifest serializes");
        body.push(b'\n');
        std::fs::write(path, body)
    }
}
