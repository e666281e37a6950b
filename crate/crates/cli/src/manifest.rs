use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use multinet_core::io::write_atomic;
use multinet_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix_ms: u128,
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Arguments after the program name, exactly as given.
    pub argv: Vec<String>,
    /// Directory the command ran in; relative paths in `argv` resolve against it.
    pub cwd: PathBuf,
    pub params: Value,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock: WallClock,
    pub version: String,
}

/// Collects what a run read and wrote, then turns it into a manifest.
pub struct Recorder {
    pub argv: Vec<String>,
    pub cwd: PathBuf,
    started: SystemTime,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Recorder {
    pub fn new(argv: Vec<String>, cwd: PathBuf) -> Self {
        Recorder {
            argv,
            cwd,
            started: SystemTime::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) {
        self.inputs.push(path.into());
    }

    /// Writes `bytes` atomically and remembers the path.
    pub fn write(&mut self, path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
        let path = path.as_ref();
        write_atomic(path, bytes)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    pub fn finish(
        self,
        subcommand: &str,
        params: Value,
        seed: Option<u64>,
        manifest_path: impl AsRef<Path>,
    ) -> Result<RunManifest> {
        let started_unix_ms = self.started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
        let elapsed_ms = self.started.elapsed().map_or(0, |d| d.as_millis());
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            argv: self.argv,
            cwd: self.cwd,
            params,
            seed,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_clock: WallClock {
                started_unix_ms,
                elapsed_ms,
            },
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        write_atomic(manifest_path.as_ref(), text.as_bytes())?;
        Ok(manifest)
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}
