//! Silhouette and Dunn indices for a hand-checkable example and for k-means-style
//! partitions of planted blobs at several cluster counts.
//!
//! cargo run --example validity_indices

use volclust::kernel::KernelSpec;
use volclust::kernel_kmeans::{fit_kernel_kmeans, KernelKMeansOptions};
use volclust::synthetic::planted_blobs;
use volclust::validity::{dunn_index, silhouette_index, validity_report};
use volclust::{FeatureMatrix, HardClustering};

fn main() -> volclust::Result<()> {
    let line = FeatureMatrix::from_rows(vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]])?;
    let split = HardClustering::new(vec![0, 0, 1, 1], 2)?;
    let s = silhouette_index(&line, &split)?;
    println!("points 0, 1, 10, 11 split in two:");
    println!("  per-point silhouette {:?}", s.per_point);
    println!("  mean {:.6}, dunn {:.6}\n", s.mean, dunn_index(&line, &split)?);

    let centers = vec![vec![0.0, 0.0], vec![12.0, 0.0], vec![6.0, 10.0]];
    let (data, _) = planted_blobs(&centers, 60, 1.0, 3)?;
    println!(" k  silhouette    dunn");
    for k in 2..=6 {
        let fit = fit_kernel_kmeans(&data, &KernelSpec::LINEAR, &KernelKMeansOptions::new(k))?;
        let report = validity_report(&data, &fit.clustering)?;
        println!(
            "{k:>2}  {:>10.4}  {:>6}",
            report.silhouette,
            report.dunn.map_or_else(|| "NA".into(), |d| format!("{d:.4}"))
        );
    }
    Ok(())
}
