//! Write the synthetic nine-series market (CSV per series plus `volclust.toml`) into a
//! directory, ready for `volclust ingest --config <dir>/volclust.toml`.
//!
//! cargo run --example generate_fixtures -- [dir] [seed]

use std::path::PathBuf;

use volclust::synthetic::write_market_fixture;

fn main() -> volclust::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("crates/core/tests/fixtures/market"));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(2013);
    let config = write_market_fixture(&dir, seed)?;
    println!("wrote {}", config.display());
    Ok(())
}
