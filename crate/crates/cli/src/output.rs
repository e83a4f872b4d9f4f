use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use regimelab::io::{emit_config, format_f64, RunConfig};
use regimelab::Thresholds;

use crate::CliError;

/// Files to be written by one command, checked together before any is
/// written so a refused overwrite leaves nothing half done.
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
    force: bool,
}

impl Outputs {
    pub fn new(force: bool) -> Self {
        Outputs { files: Vec::new(), force }
    }

    pub fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    pub fn write_all(self) -> Result<Vec<PathBuf>, CliError> {
        if !self.force {
            if let Some((p, _)) = self.files.iter().find(|(p, _)| p.exists()) {
                return Err(CliError::Io(format!("{} exists (pass --force to overwrite)", p.display())));
            }
        }
        let mut written = Vec::with_capacity(self.files.len());
        for (path, bytes) in self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            }
            let mut f = OpenOptions::new()
                .write(true)
                .create(true)
                .truncate(true)
                .create_new(!self.force)
                .open(&path)
                .map_err(|e| io_err(&path, e))?;
            f.write_all(&bytes).map_err(|e| io_err(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Config-file path if set, else `name` under `out_dir`.
pub fn target(configured: &Option<String>, out_dir: &Path, name: &str) -> PathBuf {
    configured.as_ref().map(PathBuf::from).unwrap_or_else(|| out_dir.join(name))
}

/// Provenance lines: the command, the resolved configuration in config-file
/// syntax, and the analysis thresholds. Worker count and overwrite flags are
/// left out since they never change output bytes.
pub fn provenance(command: &str, config: &RunConfig, thresholds: Option<&Thresholds>, extra: &[String]) -> Vec<String> {
    let mut meta = vec![format!("command = {command}")];
    meta.extend(emit_config(config).lines().map(str::to_string));
    if let Some(t) = thresholds {
        meta.push(format!("threshold_converge = {:?}", t.converge));
        meta.push(format!("threshold_cv = {:?}", t.cv));
        meta.push(format!("threshold_amp = {:?}", t.amp));
        meta.push(format!("threshold_lyap = {:?}", t.lyap));
        meta.push(format!("threshold_hysteresis_fraction = {:?}", t.hysteresis_fraction));
    }
    meta.extend(extra.iter().cloned());
    meta
}

pub fn opt_f64(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_else(|| "none".into())
}
