//! Render a heatmap and a profile chart for a small score table (with one failed cell) and
//! write them to a directory.
//!
//! cargo run --example render_report -- [out_dir]

use std::path::PathBuf;

use volclust::report::{render_heatmap, render_profiles, HeatmapSpec, Rgb};
use volclust::sweep::{Algorithm, IndexKind, ScoreTable};

fn main() -> volclust::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("volclust_report"));
    std::fs::create_dir_all(&out).expect("create output directory");

    let clusters: Vec<usize> = (2..=6).collect();
    let features: Vec<usize> = (2..=5).collect();
    let rows = clusters
        .iter()
        .map(|&k| {
            features
                .iter()
                .map(|&f| (k != 5 || f != 4).then(|| 0.6 / (k as f64).sqrt() - 0.03 * f as f64))
                .collect()
        })
        .collect();
    let table = ScoreTable::from_scores(Algorithm::Som, IndexKind::Silhouette, clusters, features, rows)?;
    print!("{}", table.to_csv());

    let spec = HeatmapSpec {
        low: "#fff5eb".parse::<Rgb>()?,
        high: "#7f2704".parse::<Rgb>()?,
        ..HeatmapSpec::for_table(&table)
    };
    let heatmap = out.join("example_heatmap.svg");
    let profiles = out.join("example_profiles.svg");
    std::fs::write(&heatmap, render_heatmap(&table, &spec)?).expect("write heatmap");
    std::fs::write(&profiles, render_profiles(&table)?).expect("write profiles");
    println!("wrote {} and {}", heatmap.display(), profiles.display());
    Ok(())
}
