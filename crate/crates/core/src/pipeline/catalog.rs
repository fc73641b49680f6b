//! Which series become which features, and how.

use std::collections::HashSet;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::matrix::{align, FeatureMatrix};
use super::series::{log_returns, parse_price_csv, rolling_volatility, DatedValues, PriceSeries};
use crate::error::{Error, Result};

/// Default volatility window in trading days.
pub const DEFAULT_WINDOW: usize = 10;

/// Cumulative feature order used for the feature-count axis of a sweep.
pub const DEFAULT_FEATURE_ORDER: [&str; 9] = [
    "INDIAVIX",
    "NIFTYSDR",
    "CBOEVIX",
    "CRUDESDR",
    "DJIASDR",
    "DAXSDR",
    "HANGSDR",
    "NIKKEISDR",
    "GOLDSDR",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// The close itself is the feature (implied-volatility indices).
    Level,
    /// Rolling standard deviation of the close's log returns.
    Volatility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSource {
    pub name: String,
    pub path: PathBuf,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    pub sources: Vec<FeatureSource>,
    pub window: usize,
}

impl FeatureCatalog {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::Config("catalog lists no series".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.sources {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::Config(format!("duplicate feature name `{}`", s.name)));
            }
        }
        if self.window < 2 {
            return Err(Error::Config(format!(
                "volatility window must be at least 2, got {}",
                self.window
            )));
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.sources.iter().map(|s| s.name.as_str()).collect()
    }

    /// Read every source (paths relative to `base_dir`) and build the aligned, unscaled matrix.
    pub fn load(&self, base_dir: &Path) -> Result<FeatureMatrix> {
        self.validate()?;
        let mut loaded = Vec::with_capacity(self.sources.len());
        for source in &self.sources {
            let path = base_dir.join(&source.path);
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let prices = parse_price_csv(file, &path.display().to_string())?;
            loaded.push((source, prices));
        }
        build_features(
            loaded.iter().map(|(s, p)| (s.name.as_str(), s.kind, p)),
            self.window,
        )
    }
}

/// Turn named price series into aligned feature columns.
pub fn build_features<'a>(
    inputs: impl IntoIterator<Item = (&'a str, FeatureKind, &'a PriceSeries)>,
    window: usize,
) -> Result<FeatureMatrix> {
    let mut columns: Vec<Box<dyn DatedValues>> = Vec::new();
    for (name, kind, prices) in inputs {
        match kind {
            FeatureKind::Level => {
                let renamed =
                    PriceSeries::new(name, prices.dates().to_vec(), prices.closes().to_vec())?;
                columns.push(Box::new(renamed));
            }
            FeatureKind::Volatility => {
                let vol = rolling_volatility(&log_returns(prices)?, window)?.renamed(name);
                columns.push(Box::new(vol));
            }
        }
    }
    let refs: Vec<&dyn DatedValues> = columns.iter().map(|c| c.as_ref()).collect();
    align(&refs)
}
