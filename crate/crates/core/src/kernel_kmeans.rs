//! K-Means in an implicit feature space.
//!
//! Cluster means in feature space are never formed explicitly. For a point `x_n` and a
//! cluster `C`,
//!
//! ```text
//! ||phi(x_n) - m_C||^2 = K_nn - (2/|C|) sum_{j in C} K_nj + (1/|C|^2) sum_{j,l in C} K_jl
//! ```
//!
//! so one pass over the Gram matrix per iteration gives every point-to-cluster distance.
//! Initialization assigns points to clusters uniformly at random; empty clusters are
//! refilled with the point farthest from its own cluster mean.

use rand::Rng;
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::clustering::HardClustering;
use crate::error::{Error, Result};
use crate::kernel::{gram_matrix, KernelMatrix, KernelSpec};
use crate::pipeline::FeatureMatrix;
use crate::seed::rng_for;

const INIT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelKMeansOptions {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KernelKMeansOptions {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            restarts: 10,
            max_iter: 300,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelKMeansResult {
    pub clustering: HardClustering,
    /// Total within-cluster feature-space scatter of `clustering`.
    pub objective: f64,
    /// Objective of every labelling visited, initial one first.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub restart_index: usize,
}

/// Squared feature-space distance from `point` to the mean of `members`.
pub fn feature_space_distance_sq(gram: &KernelMatrix, point: usize, members: &[usize]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::invalid("distance to the mean of an empty member set"));
    }
    let n = gram.n();
    if point >= n || members.iter().any(|&m| m >= n) {
        return Err(Error::invalid("point index outside the gram matrix"));
    }
    let size = members.len() as f64;
    let cross: f64 = members.iter().map(|&j| gram.get(point, j)).sum();
    let within: f64 = members
        .iter()
        .map(|&j| members.iter().map(|&l| gram.get(j, l)).sum::<f64>())
        .sum();
    let d = gram.get(point, point) - 2.0 * cross / size + within / (size * size);
    Ok(d.max(0.0))
}

/// Every point's squared distance to every cluster mean, row-major `n x k`.
fn distances_to_clusters(gram: &KernelMatrix, labels: &[usize], k: usize) -> Vec<f64> {
    let n = gram.n();
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    // cross[n*k + c] = sum_{j in C_c} K_nj
    let mut cross = vec![0.0; n * k];
    for i in 0..n {
        let row = gram.row(i);
        let acc = &mut cross[i * k..(i + 1) * k];
        for (j, &kij) in row.iter().enumerate() {
            acc[labels[j]] += kij;
        }
    }
    let mut within = vec![0.0; k];
    for (i, &l) in labels.iter().enumerate() {
        within[l] += cross[i * k + l];
    }
    let mut dist = vec![f64::INFINITY; n * k];
    for i in 0..n {
        let kii = gram.get(i, i);
        for c in 0..k {
            if sizes[c] == 0 {
                continue;
            }
            let s = sizes[c] as f64;
            let d = kii - 2.0 * cross[i * k + c] / s + within[c] / (s * s);
            dist[i * k + c] = d.max(0.0);
        }
    }
    dist
}

/// Nearest cluster per point (ties to the lower index), then refill any empty cluster
/// with the point farthest from its assigned cluster mean.
pub(crate) fn assign_and_repair(dist: &[f64], n: usize, k: usize) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n)
        .map(|i| {
            let row = &dist[i * k..(i + 1) * k];
            let mut best = 0;
            for c in 1..k {
                if row[c] < row[best] {
                    best = c;
                }
            }
            best
        })
        .collect();
    repair_empty(&mut labels, dist, k);
    labels
}

pub(crate) fn repair_empty(labels: &mut [usize], dist: &[f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut donor: Option<usize> = None;
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = dist[i * k + l];
            if donor.is_none_or(|best| d > dist[best * k + labels[best]]) {
                donor = Some(i);
            }
        }
        let p = donor.expect("n >= k leaves a cluster with two or more points");
        sizes[labels[p]] -= 1;
        labels[p] = empty;
        sizes[empty] = 1;
    }
}

fn objective(dist: &[f64], labels: &[usize], k: usize) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| dist[i * k + l])
        .sum()
}

/// One Lloyd-style run starting from `init` labels.
///
/// Returns the final labels, the objective trace, the number of assignment steps and
/// whether a step left the labels unchanged within `max_iter`.
pub fn run_from_labels(
    gram: &KernelMatrix,
    k: usize,
    init: Vec<usize>,
    max_iter: usize,
) -> Result<(Vec<usize>, Vec<f64>, usize, bool)> {
    let n = gram.n();
    if init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: init.len(),
        });
    }
    HardClustering::new(init.clone(), k)?;
    let mut labels = init;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let dist = distances_to_clusters(gram, &labels, k);
        trace.push(objective(&dist, &labels, k));
        if iterations == max_iter {
            break;
        }
        let next = assign_and_repair(&dist, n, k);
        iterations += 1;
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    Ok((labels, trace, iterations, converged))
}

/// Uniform random labels with every cluster non-empty.
pub(crate) fn random_labels<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    for _ in 0..INIT_ATTEMPTS {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let mut seen = vec![false; k];
        labels.iter().for_each(|&l| seen[l] = true);
        if seen.iter().all(|&s| s) {
            return labels;
        }
    }
    // k close to n: seed one point per cluster, the rest uniform
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut labels = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = if rank < k { rank } else { rng.random_range(0..k) };
    }
    labels
}

/// Fit on a precomputed Gram matrix, keeping the lowest-objective restart.
pub fn fit_kernel_kmeans_gram(gram: &KernelMatrix, opts: &KernelKMeansOptions) -> Result<KernelKMeansResult> {
    let n = gram.n();
    let k = opts.k;
    if k < 1 || k > n {
        return Err(Error::invalid(format!("k = {k} must lie in 1..={n}")));
    }
    if opts.max_iter < 1 || opts.restarts < 1 {
        return Err(Error::invalid("max_iter and restarts must be at least 1"));
    }
    let mut best: Option<KernelKMeansResult> = None;
    for restart in 0..opts.restarts {
        let mut rng = rng_for(opts.seed, &[restart as u64]);
        let init = random_labels(&mut rng, n, k);
        let (labels, trace, iterations, converged) = run_from_labels(gram, k, init, opts.max_iter)?;
        let objective = *trace.last().expect("trace holds the initial objective");
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(KernelKMeansResult {
                clustering: HardClustering::new(labels, k)?,
                objective,
                objective_trace: trace,
                iterations,
                converged,
                restart_index: restart,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Build the Gram matrix of `points` under `spec` and fit.
pub fn fit_kernel_kmeans(
    points: &FeatureMatrix,
    spec: &KernelSpec,
    opts: &KernelKMeansOptions,
) -> Result<KernelKMeansResult> {
    if opts.k > points.n_rows() {
        return Err(Error::invalid(format!(
            "k = {} exceeds the {} points",
            opts.k,
            points.n_rows()
        )));
    }
    let gram = gram_matrix(points, spec)?;
    fit_kernel_kmeans_gram(&gram, opts)
}
