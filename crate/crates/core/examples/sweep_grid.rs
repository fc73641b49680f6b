//! Full default sweep (3 algorithms, 2 indices, clusters 2-11, features 2-9) over the
//! synthetic nine-series market, printing each table and its best cell.
//!
//! cargo run --release --example sweep_grid [seed]

use std::time::Instant;

use volclust::pipeline::{build_features, DEFAULT_WINDOW};
use volclust::sweep::{run_sweep, SweepConfig};
use volclust::synthetic::synthetic_market;

fn main() -> volclust::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(42);
    let market = synthetic_market(seed)?;
    let features = build_features(
        market.iter().map(|s| (s.name.as_str(), s.kind, &s.prices)),
        DEFAULT_WINDOW,
    )?
    .standardize()?;
    println!("{} rows x {} features", features.n_rows(), features.n_features());

    let config = SweepConfig::default();
    let started = Instant::now();
    let grid = run_sweep(&features, &config)?;
    let elapsed = started.elapsed();

    for table in &grid.tables {
        println!("\n{}", table.name());
        print!("{}", table.to_csv());
        match table.best_cell() {
            Ok(b) => println!("best: {} features, {} clusters, {:.4}", b.features, b.clusters, b.score),
            Err(e) => println!("best: none ({e})"),
        }
    }
    println!("\nsweep took {:.1} s", elapsed.as_secs_f64());
    Ok(())
}
