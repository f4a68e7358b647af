use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use symcc_core::config::ExperimentConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Written into every output directory. `config` is the fully resolved
/// configuration after flag overrides, so rerunning with it alone and the
/// same seed reproduces the directory.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub subcommand: &'a str,
    pub config_path: String,
    pub seed: u64,
    pub output_directory: String,
    pub tool_version: &'static str,
    pub timestamp: String,
    pub args: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub config: &'a ExperimentConfig,
}

impl<'a> RunManifest<'a> {
    pub fn new(
        subcommand: &'a str,
        config_path: &Path,
        seed: u64,
        out: &Path,
        config: &'a ExperimentConfig,
    ) -> Self {
        Self {
            subcommand,
            config_path: config_path.display().to_string(),
            seed,
            output_directory: out.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            args: std::env::args().collect(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config,
        }
    }

    pub fn write(&self) -> anyhow::Result<()> {
        let path = Path::new(&self.output_directory).join(MANIFEST_FILE);
        let file =
            std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}
