//! TOML run configuration. Every key mirrors a command-line flag and a
//! flag wins over the file value; unknown keys are rejected so a typo
//! fails loudly instead of silently falling back to a default.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("bad config: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub family: Option<String>,
    pub users: Option<usize>,
    pub tx: Option<usize>,
    pub rx: Option<usize>,
    pub streams: Option<usize>,
    pub sigma: Option<f64>,
    pub p_max: Option<f64>,
    pub rician_k_db: Option<f64>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub hidden: Option<usize>,
    pub layers: Option<usize>,
    pub a_max: Option<f64>,
    pub b_max: Option<f64>,
    pub interference_mode: Option<String>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_iters: Option<u64>,
    pub patience: Option<usize>,
    pub eval_every: Option<u64>,
    pub fd_step: Option<f64>,
    pub gradient_method: Option<String>,
    pub wmmse_iters: Option<usize>,
    pub trunc_iters: Option<usize>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub cross: Option<CrossSection>,
    pub size: Option<SizeSection>,
}

/// Cross-distribution robustness: trained checkpoints and test datasets
/// keyed by channel family name.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSection {
    pub checkpoints: BTreeMap<String, PathBuf>,
    pub test: BTreeMap<String, PathBuf>,
}

/// Size-generalization sweep: one checkpoint evaluated at every size in
/// `sizes` on freshly generated test sets.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeSection {
    pub checkpoint: PathBuf,
    pub train_family: String,
    pub test_family: String,
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub train_sizes: Vec<usize>,
    pub tx: Option<usize>,
    pub rx: Option<usize>,
    pub rician_k_db: Option<f64>,
    pub samples_per_size: Option<usize>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Ok(toml::from_str(&fs::read_to_string(path)?)?)
    }
}
