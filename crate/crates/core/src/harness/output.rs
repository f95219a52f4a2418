use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::SimConfig;
use crate::Result;

/// File-name fragment for an SNR point, e.g. `snr_7.00`.
pub fn snr_tag(snr_db: f64) -> String {
    format!("snr_{snr_db:.2}")
}

/// Index of everything a subcommand wrote, with what is needed to rerun it.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: Option<String>,
    pub seed: u64,
    /// Seed of frame `f` at SNR `x` dB: `derive_seed(seed, [f, round(1000 x)])`.
    pub snr_db: Vec<f64>,
    pub files: Vec<String>,
    #[serde(skip)]
    dir: PathBuf,
}

impl Manifest {
    pub fn new(dir: &Path, command: &str, config: Option<&SimConfig>, seed: u64) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            tool: "bicm-gmi-lab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_hash: config.map(SimConfig::hash),
            seed,
            snr_db: config.map(|c| c.snr_db.clone()).unwrap_or_default(),
            files: Vec::new(),
            dir: dir.to_path_buf(),
        })
    }

    /// Creates `name` under the output directory and records it.
    pub fn create(&mut self, name: &str) -> Result<fs::File> {
        self.files.push(name.to_string());
        Ok(fs::File::create(self.dir.join(name))?)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let file = self.create(name)?;
        serde_json::to_writer_pretty(file, value)?;
        Ok(())
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(self) -> Result<PathBuf> {
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_vec_pretty(&self)?)?;
        Ok(path)
    }
}
