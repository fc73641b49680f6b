//! Internal cluster-validity indices on Euclidean distances: Silhouette and Dunn.

use serde::Serialize;

use crate::clustering::HardClustering;
use crate::error::{Error, Result};
use crate::kernel::squared_distance;
use crate::pipeline::FeatureMatrix;

/// Dense symmetric matrix of Euclidean distances between rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(data: &FeatureMatrix) -> Self {
        let n = data.n_rows();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            let xi = data.row(i);
            for j in i + 1..n {
                let v = squared_distance(xi, data.row(j)).sqrt();
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }
}

fn check(dist: &DistanceMatrix, clustering: &HardClustering) -> Result<()> {
    if clustering.n() != dist.n() {
        return Err(Error::DimensionMismatch {
            expected: dist.n(),
            got: clustering.n(),
        });
    }
    if clustering.k() < 2 {
        return Err(Error::invalid(format!(
            "validity indices require k ≥ 2, got k = {}",
            clustering.k()
        )));
    }
    Ok(())
}

/// Mean silhouette and the per-point values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Silhouette {
    pub mean: f64,
    pub per_point: Vec<f64>,
    /// Points alone in their cluster; their silhouette is defined as 0.
    pub singletons: usize,
}

/// `s(i) = (b - a) / max(a, b)` with `a` the mean distance to the rest of the point's own
/// cluster and `b` the smallest mean distance to another cluster. Singletons score 0.
pub fn silhouette_from_distances(dist: &DistanceMatrix, clustering: &HardClustering) -> Result<Silhouette> {
    check(dist, clustering)?;
    let k = clustering.k();
    let labels = clustering.labels();
    let sizes = clustering.sizes();
    let mut sums = vec![0.0; k];
    let mut per_point = Vec::with_capacity(dist.n());
    let mut singletons = 0;
    for (i, &own) in labels.iter().enumerate() {
        if sizes[own] == 1 {
            singletons += 1;
            per_point.push(0.0);
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (&dij, &l) in dist.row(i).iter().zip(labels) {
            sums[l] += dij;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        per_point.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    let mean = per_point.iter().sum::<f64>() / per_point.len() as f64;
    Ok(Silhouette {
        mean,
        per_point,
        singletons,
    })
}

pub fn silhouette_index(data: &FeatureMatrix, clustering: &HardClustering) -> Result<Silhouette> {
    silhouette_from_distances(&DistanceMatrix::new(data), clustering)
}

/// Smallest between-cluster pair distance over largest within-cluster pair distance.
///
/// Fails with [`Error::DunnDegenerate`] when no within-cluster pair has positive distance.
pub fn dunn_from_distances(dist: &DistanceMatrix, clustering: &HardClustering) -> Result<f64> {
    check(dist, clustering)?;
    let labels = clustering.labels();
    let mut d_min = f64::INFINITY;
    let mut d_max: f64 = 0.0;
    for i in 0..dist.n() {
        let row = dist.row(i);
        for j in i + 1..dist.n() {
            if labels[i] == labels[j] {
                d_max = d_max.max(row[j]);
            } else {
                d_min = d_min.min(row[j]);
            }
        }
    }
    if !(d_max > 0.0) {
        return Err(Error::DunnDegenerate);
    }
    Ok(d_min / d_max)
}

pub fn dunn_index(data: &FeatureMatrix, clustering: &HardClustering) -> Result<f64> {
    dunn_from_distances(&DistanceMatrix::new(data), clustering)
}

/// Both indices for one clustering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub k: usize,
    pub silhouette: f64,
    /// `None` when the index is undefined (see `flags`).
    pub dunn: Option<f64>,
    pub per_point_silhouette: Vec<f64>,
    pub flags: Vec<String>,
}

pub fn validity_report(data: &FeatureMatrix, clustering: &HardClustering) -> Result<ValidityReport> {
    let dist = DistanceMatrix::new(data);
    let sil = silhouette_from_distances(&dist, clustering)?;
    let mut flags = Vec::new();
    if sil.singletons > 0 {
        flags.push(format!(
            "{} singleton point(s) scored silhouette 0",
            sil.singletons
        ));
    }
    let dunn = match dunn_from_distances(&dist, clustering) {
        Ok(v) => Some(v),
        Err(Error::DunnDegenerate) => {
            flags.push("dunn undefined: all within-cluster distances are zero".into());
            None
        }
        Err(e) => return Err(e),
    };
    Ok(ValidityReport {
        k: clustering.k(),
        silhouette: sil.mean,
        dunn,
        per_point_silhouette: sil.per_point,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(xs: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_rows(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn hc(labels: &[usize], k: usize) -> HardClustering {
        HardClustering::new(labels.to_vec(), k).unwrap()
    }

    #[test]
    fn four_point_example() {
        let data = col(&[0.0, 1.0, 10.0, 11.0]);
        let c = hc(&[0, 0, 1, 1], 2);
        let s = silhouette_index(&data, &c).unwrap();
        let expected = [9.5 / 10.5, 8.5 / 9.5, 8.5 / 9.5, 9.5 / 10.5];
        for (a, b) in s.per_point.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s.mean - 0.899_749_373_433_584).abs() < 1e-12);
        assert!((dunn_index(&data, &c).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_clusters_score_zero() {
        // every pairwise distance equal: a(i) == b(i)
        let data = FeatureMatrix::from_rows(vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let s = silhouette_index(&data, &hc(&[0, 0, 1, 1], 2)).unwrap();
        assert!(s.mean.abs() < 1e-12);
    }

    #[test]
    fn two_singletons() {
        let data = col(&[0.0, 5.0]);
        let c = hc(&[0, 1], 2);
        let s = silhouette_index(&data, &c).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.singletons, 2);
        assert!(matches!(dunn_index(&data, &c), Err(Error::DunnDegenerate)));
    }

    #[test]
    fn overlapping_clusters_have_zero_dunn() {
        let data = col(&[0.0, 1.0, 1.0, 3.0]);
        assert_eq!(dunn_index(&data, &hc(&[0, 0, 1, 1], 2)).unwrap(), 0.0);
    }

    #[test]
    fn single_cluster_rejected() {
        let data = col(&[0.0, 1.0]);
        let c = hc(&[0, 0], 1);
        assert!(silhouette_index(&data, &c).is_err());
        assert!(dunn_index(&data, &c).is_err());
    }

    #[test]
    fn dunn_scale_free() {
        let data = FeatureMatrix::from_rows(vec![
            vec![0.0, 1.0],
            vec![0.5, 1.2],
            vec![4.0, 4.0],
            vec![5.0, 3.5],
            vec![4.2, 5.1],
        ])
        .unwrap();
        let c = hc(&[0, 0, 1, 1, 1], 2);
        let base = dunn_index(&data, &c).unwrap();
        let scaled = dunn_index(&data.scaled(37.5), &c).unwrap();
        assert!((base - scaled).abs() < 1e-12);
    }

    #[test]
    fn report_flags_degenerate_dunn() {
        let data = col(&[0.0, 0.0, 5.0]);
        let r = validity_report(&data, &hc(&[0, 0, 1], 2)).unwrap();
        assert_eq!(r.dunn, None);
        assert_eq!(r.flags.len(), 2);
        assert_eq!(r.k, 2);
    }
}
