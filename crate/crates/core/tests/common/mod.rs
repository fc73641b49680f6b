//! Independent reference implementations shared by the integration and acceptance suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volclust::FeatureMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize, spread: f64) -> FeatureMatrix {
    let rows = (0..n)
        .map(|_| (0..p).map(|_| rng.random_range(-spread..spread)).collect())
        .collect();
    FeatureMatrix::from_rows(rows).unwrap()
}

/// Labels in `0..k` with every cluster used at least once (requires `n >= k`).
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        if (0..k).all(|c| labels.contains(&c)) {
            return labels;
        }
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean silhouette straight from the definition, one pair at a time.
pub fn brute_silhouette(data: &FeatureMatrix, labels: &[usize], k: usize) -> (f64, Vec<f64>) {
    let n = data.n_rows();
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let own = labels[i];
        let own_size = labels.iter().filter(|&&l| l == own).count();
        if own_size == 1 {
            s.push(0.0);
            continue;
        }
        let mut a = 0.0;
        for j in 0..n {
            if j != i && labels[j] == own {
                a += euclid(data.row(i), data.row(j));
            }
        }
        a /= (own_size - 1) as f64;
        let mut b = f64::INFINITY;
        for c in (0..k).filter(|&c| c != own) {
            let members: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
            let mean = members
                .iter()
                .map(|&j| euclid(data.row(i), data.row(j)))
                .sum::<f64>()
                / members.len() as f64;
            b = b.min(mean);
        }
        let m = a.max(b);
        s.push(if m == 0.0 { 0.0 } else { (b - a) / m });
    }
    (s.iter().sum::<f64>() / n as f64, s)
}

/// Dunn index from the definition; `None` when every within-cluster distance is zero.
pub fn brute_dunn(data: &FeatureMatrix, labels: &[usize]) -> Option<f64> {
    let n = data.n_rows();
    let mut inter = f64::INFINITY;
    let mut intra: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = euclid(data.row(i), data.row(j));
            if labels[i] == labels[j] {
                intra = intra.max(d);
            } else {
                inter = inter.min(d);
            }
        }
    }
    (intra > 0.0).then(|| inter / intra)
}

/// Plain Lloyd k-means with explicit centroids, nearest-centroid ties to the lower index
/// and empty clusters refilled by the point farthest from its own centroid (taken from a
/// cluster with at least two points).
pub fn lloyd(data: &FeatureMatrix, k: usize, init: Vec<usize>, max_iter: usize) -> Vec<usize> {
    let n = data.n_rows();
    let p = data.n_features();
    let mut labels = init;
    for _ in 0..max_iter {
        let mut centroids = vec![vec![0.0; p]; k];
        let mut sizes = vec![0usize; k];
        for i in 0..n {
            sizes[labels[i]] += 1;
            for (c, x) in centroids[labels[i]].iter_mut().zip(data.row(i)) {
                *c += x;
            }
        }
        for (c, &s) in centroids.iter_mut().zip(&sizes) {
            c.iter_mut().for_each(|v| *v /= s as f64);
        }
        let sq = |i: usize, c: usize| -> f64 {
            data.row(i)
                .iter()
                .zip(&centroids[c])
                .map(|(x, m)| (x - m) * (x - m))
                .sum()
        };
        let mut next: Vec<usize> = (0..n)
            .map(|i| {
                let mut best = 0;
                for c in 1..k {
                    if sq(i, c) < sq(i, best) {
                        best = c;
                    }
                }
                best
            })
            .collect();
        let mut counts = vec![0usize; k];
        next.iter().for_each(|&l| counts[l] += 1);
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let mut donor: Option<usize> = None;
            for i in 0..n {
                if counts[next[i]] < 2 {
                    continue;
                }
                if donor.is_none_or(|d| sq(i, next[i]) > sq(d, next[d])) {
                    donor = Some(i);
                }
            }
            let d = donor.unwrap();
            counts[next[d]] -= 1;
            next[d] = empty;
            counts[empty] = 1;
        }
        if next == labels {
            break;
        }
        labels = next;
    }
    labels
}

/// Adjusted Rand index between two labelings.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |v: u64| (v * v.saturating_sub(1)) as f64 / 2.0;
    let sum_cells: f64 = table.iter().flatten().map(|&v| c2(v)).sum();
    let sum_rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let sum_cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(a.len() as u64);
    let expected = sum_rows * sum_cols / total;
    let max = (sum_rows + sum_cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (sum_cells - expected) / (max - expected)
}

/// Three 2-D blobs, 100 points each, centers 10 standard deviations apart or more.
pub fn three_blobs(seed: u64) -> (FeatureMatrix, Vec<usize>) {
    let centers = vec![vec![0.0, 0.0], vec![12.0, 0.0], vec![6.0, 11.0]];
    volclust::synthetic::planted_blobs(&centers, 100, 1.0, seed).unwrap()
}
