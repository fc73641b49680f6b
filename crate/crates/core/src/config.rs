//! Run configuration read from TOML.
//!
//! ```toml
//! seed = 42
//! window = 10
//! standardize = true
//! out = "out"
//!
//! [[series]]
//! name = "NIFTYSDR"
//! path = "nifty.csv"
//! kind = "volatility"
//!
//! [sweep]
//! clusters = { min = 2, max = 11 }
//! restarts = 10
//!
//! [kernel]
//! kind = "rbf"
//! sigma = 1.5
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::pipeline::{FeatureCatalog, FeatureSource, DEFAULT_WINDOW};
use crate::sweep::SweepConfig;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub window: usize,
    pub standardize: bool,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub series: Vec<FeatureSource>,
    pub sweep: SweepConfig,
    /// Kernel for kernel k-means; absent means RBF with the median heuristic.
    pub kernel: Option<KernelSpec>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            window: DEFAULT_WINDOW,
            standardize: true,
            out: PathBuf::from("out"),
            jobs: None,
            series: Vec::new(),
            sweep: SweepConfig::default(),
            kernel: None,
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        Ok(config)
    }

    /// Parse TOML text; relative paths stay relative to the working directory.
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(kernel) = &config.kernel {
            kernel.validate()?;
        }
        Ok(config)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// Output directory resolved against the config location.
    pub fn out_dir(&self) -> PathBuf {
        self.base_dir.join(&self.out)
    }

    pub fn catalog(&self) -> FeatureCatalog {
        FeatureCatalog {
            sources: self
                .series
                .iter()
                .map(|s| FeatureSource {
                    path: self.base_dir.join(&s.path),
                    ..s.clone()
                })
                .collect(),
            window: self.window,
        }
    }

    /// The sweep section with the run-wide seed, kernel and parallelism applied.
    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            seed: self.seed,
            kernel: self.kernel,
            jobs: self.jobs,
            ..self.sweep.clone()
        }
    }
}
