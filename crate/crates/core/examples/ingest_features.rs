//! Build the aligned, standardized feature matrix from the synthetic market and print the
//! first rows plus per-column scaling.
//!
//! cargo run --example ingest_features

use volclust::pipeline::{build_features, log_returns, rolling_volatility, DatedValues, DEFAULT_WINDOW};
use volclust::synthetic::synthetic_market;

fn main() -> volclust::Result<()> {
    let market = synthetic_market(2013)?;
    for s in &market {
        println!("{:<10} {:>4} closes  {} .. {}", s.name, s.prices.len(), s.prices.dates()[0], s.prices.dates()[s.prices.len() - 1]);
    }

    let nifty = &market[1].prices;
    let vol = rolling_volatility(&log_returns(nifty)?, DEFAULT_WINDOW)?;
    println!("\nNIFTY: {} closes -> {} volatility rows (window {})", nifty.len(), vol.len(), vol.window());

    let raw = build_features(
        market.iter().map(|s| (s.name.as_str(), s.kind, &s.prices)),
        DEFAULT_WINDOW,
    )?;
    let features = raw.standardize()?;
    println!("aligned: {} rows x {} features\n", features.n_rows(), features.n_features());

    let scaling = features.scaling().expect("standardized");
    for (j, name) in features.names().iter().enumerate() {
        println!("{name:<10} mean {:>12.6}  std {:>10.6}", scaling.means[j], scaling.stds[j]);
    }
    println!();
    let mut head = Vec::new();
    features.write_csv(&mut head).expect("in-memory write");
    for line in String::from_utf8_lossy(&head).lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
