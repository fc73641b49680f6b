//! Hard partitions of a point set.

use serde::Serialize;

use crate::error::{Error, Result};

/// A partition of `n` points into `k` non-empty, disjoint clusters covering every point.
///
/// Labels are cluster indices in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HardClustering {
    k: usize,
    labels: Vec<usize>,
}

impl HardClustering {
    /// Validates that every label is below `k` and every cluster has a member.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("cluster count must be at least 1"));
        }
        let sizes = cluster_sizes(&labels, k)?;
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("cluster {empty} is empty")));
        }
        Ok(Self { k, labels })
    }

    /// Renumber the labels that occur into `0..k'` preserving their order.
    ///
    /// Returns the clustering and whether any label value went unused.
    pub fn compacted(labels: &[usize]) -> Result<(Self, bool)> {
        let Some(&max) = labels.iter().max() else {
            return Err(Error::invalid("cannot cluster zero points"));
        };
        let mut remap = vec![usize::MAX; max + 1];
        for &l in labels {
            remap[l] = 0;
        }
        let mut next = 0;
        for slot in remap.iter_mut().filter(|s| **s == 0) {
            *slot = next;
            next += 1;
        }
        let compacted = next < max + 1;
        let labels = labels.iter().map(|&l| remap[l]).collect();
        Ok((Self { k: next, labels }, compacted))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> Vec<usize> {
        cluster_sizes(&self.labels, self.k).expect("labels validated")
    }

    /// Point indices of each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

pub(crate) fn cluster_sizes(labels: &[usize], k: usize) -> Result<Vec<usize>> {
    let mut sizes = vec![0; k];
    for &l in labels {
        if l >= k {
            return Err(Error::invalid(format!("label {l} out of range for k = {k}")));
        }
        sizes[l] += 1;
    }
    Ok(sizes)
}
