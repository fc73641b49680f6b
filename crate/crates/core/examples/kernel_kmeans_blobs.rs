//! Kernel k-means on two concentric rings, where a linear kernel (plain k-means) fails and
//! an RBF kernel separates them.
//!
//! cargo run --example kernel_kmeans_blobs

use std::f64::consts::TAU;

use volclust::kernel::KernelSpec;
use volclust::kernel_kmeans::{fit_kernel_kmeans, KernelKMeansOptions};
use volclust::FeatureMatrix;

fn agreement(labels: &[usize], truth: &[usize]) -> f64 {
    let same = labels.iter().zip(truth).filter(|(a, b)| a == b).count();
    same.max(labels.len() - same) as f64 / labels.len() as f64
}

fn main() -> volclust::Result<()> {
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (ring, radius) in [1.0, 5.0].into_iter().enumerate() {
        for i in 0..60 {
            let a = TAU * i as f64 / 60.0;
            let wobble = 0.1 * ((7 * i) as f64).sin();
            rows.push(vec![(radius + wobble) * a.cos(), (radius + wobble) * a.sin()]);
            truth.push(ring);
        }
    }
    let points = FeatureMatrix::from_rows(rows)?;
    let opts = KernelKMeansOptions::new(2);

    for (label, spec) in [
        ("linear", KernelSpec::LINEAR),
        ("rbf sigma=1", KernelSpec::Rbf { sigma: 1.0 }),
        ("median rbf", KernelSpec::rbf_median(&points)?),
    ] {
        let fit = fit_kernel_kmeans(&points, &spec, &opts)?;
        println!(
            "{label:<12} objective {:>9.4}  iterations {:>2}  converged {}  restart {}  ring agreement {:.2}",
            fit.objective,
            fit.iterations,
            fit.converged,
            fit.restart_index,
            agreement(fit.clustering.labels(), &truth)
        );
    }
    Ok(())
}
