//! From daily closes to a standardized feature matrix.

mod catalog;
mod matrix;
mod series;

pub use catalog::{
    build_features, FeatureCatalog, FeatureKind, FeatureSource, DEFAULT_FEATURE_ORDER,
    DEFAULT_WINDOW,
};
pub use matrix::{align, ColumnScaling, FeatureMatrix};
pub use series::{
    log_returns, parse_price_csv, rolling_volatility, DatedValues, PriceSeries, ReturnSeries,
    VolatilitySeries,
};
