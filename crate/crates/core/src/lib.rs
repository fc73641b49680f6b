//! Clustering of daily volatility features with kernel k-means, Gaussian mixtures and
//! self-organizing maps, scored by Silhouette and Dunn indices over a grid of cluster and
//! feature counts.

pub mod cli;
pub mod clustering;
pub mod config;
pub mod error;
pub mod gmm;
pub mod kernel;
pub mod kernel_kmeans;
pub mod numfmt;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod som;
pub mod sweep;
pub mod synthetic;
pub mod validity;

pub use clustering::HardClustering;
pub use error::{Error, ErrorClass, Result};
pub use pipeline::FeatureMatrix;
