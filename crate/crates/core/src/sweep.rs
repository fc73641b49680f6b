//! Grid of validity scores over cluster counts and cumulative feature counts.
//!
//! Cell `(k, f)` clusters the first `f` columns of the configured feature order into `k`
//! clusters and scores the resulting hard partition. One clustering per
//! `(algorithm, k, f)` feeds every requested index.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::HardClustering;
use crate::error::{Error, Result};
use crate::gmm::{fit_gmm, hard_assign, GmmModel, GmmOptions};
use crate::kernel::{gram_matrix, KernelMatrix, KernelSpec};
use crate::kernel_kmeans::{fit_kernel_kmeans_gram, KernelKMeansOptions};
use crate::pipeline::{FeatureMatrix, DEFAULT_FEATURE_ORDER};
use crate::seed::derive_seed;
use crate::som::{assign_som, fit_som, SomGrid, SomSchedule};
use crate::validity::{dunn_from_distances, silhouette_from_distances, DistanceMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[serde(rename = "kernel_kmeans")]
    KernelKMeans,
    Som,
    Gmm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::KernelKMeans, Algorithm::Som, Algorithm::Gmm];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KernelKMeans => "kernel_kmeans",
            Algorithm::Som => "som",
            Algorithm::Gmm => "gmm",
        }
    }

    fn seed_tag(self) -> u64 {
        match self {
            Algorithm::KernelKMeans => 1,
            Algorithm::Som => 2,
            Algorithm::Gmm => 3,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm '{s}' (kernel_kmeans, som, gmm)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Dunn,
    Silhouette,
}

impl IndexKind {
    pub const ALL: [IndexKind; 2] = [IndexKind::Dunn, IndexKind::Silhouette];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::Dunn => "dunn",
            IndexKind::Silhouette => "silhouette",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndexKind::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown index '{s}' (dunn, silhouette)")))
    }
}

/// Inclusive integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

impl CountRange {
    pub fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    pub fn values(&self) -> Vec<usize> {
        (self.min..=self.max).collect()
    }

    pub fn len(&self) -> usize {
        self.max + 1 - self.min
    }

    pub fn is_empty(&self) -> bool {
        self.max < self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub algorithms: Vec<Algorithm>,
    pub indices: Vec<IndexKind>,
    pub clusters: CountRange,
    pub features: CountRange,
    pub feature_order: Vec<String>,
    pub restarts: usize,
    #[serde(skip)]
    pub seed: u64,
    /// `None` selects an RBF kernel with the median pairwise distance of each feature prefix.
    #[serde(skip)]
    pub kernel: Option<KernelSpec>,
    pub kernel_max_iter: usize,
    pub som_epochs: usize,
    pub gmm_max_iter: usize,
    pub gmm_tol: f64,
    pub gmm_regularization: f64,
    /// Worker threads; `None` uses every core.
    #[serde(skip)]
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let gmm = GmmOptions::new(1);
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            indices: IndexKind::ALL.to_vec(),
            clusters: CountRange::new(2, 11),
            features: CountRange::new(2, 9),
            feature_order: DEFAULT_FEATURE_ORDER.iter().map(|s| s.to_string()).collect(),
            restarts: 10,
            seed: 42,
            kernel: None,
            kernel_max_iter: KernelKMeansOptions::new(1).max_iter,
            som_epochs: SomSchedule::for_shape(1, 1).epochs,
            gmm_max_iter: gmm.max_iter,
            gmm_tol: gmm.tol,
            gmm_regularization: gmm.regularization,
            jobs: None,
        }
    }
}

impl SweepConfig {
    /// Check the configuration against a data matrix with `n` rows and the given columns.
    pub fn validate(&self, data: &FeatureMatrix) -> Result<()> {
        let n = data.n_rows();
        if self.algorithms.is_empty() || self.indices.is_empty() {
            return Err(Error::Config("at least one algorithm and one index are required".into()));
        }
        if self.clusters.is_empty() || self.clusters.min < 2 || self.clusters.max + 1 > n {
            return Err(Error::Config(format!(
                "cluster range {}..={} must lie within 2..={} for {n} rows",
                self.clusters.min,
                self.clusters.max,
                n.saturating_sub(1)
            )));
        }
        let p = self.feature_order.len();
        if self.features.is_empty() || self.features.min < 1 || self.features.max > p {
            return Err(Error::Config(format!(
                "feature range {}..={} must lie within 1..={p}",
                self.features.min, self.features.max
            )));
        }
        for name in &self.feature_order[..self.features.max] {
            if data.column_index(name).is_none() {
                return Err(Error::Config(format!(
                    "feature '{name}' is not a column of the data ({})",
                    data.names().join(", ")
                )));
            }
        }
        if self.restarts < 1 || self.kernel_max_iter < 1 || self.gmm_max_iter < 1 || self.som_epochs < 1 {
            return Err(Error::Config("restarts, iteration caps and epochs must be at least 1".into()));
        }
        if let Some(spec) = &self.kernel {
            spec.validate()?;
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Seed for one cell; restarts inside the cell derive from it by index.
    pub fn cell_seed(&self, algorithm: Algorithm, k: usize, f: usize) -> u64 {
        derive_seed(self.seed, &[algorithm.seed_tag(), k as u64, f as u64])
    }

    fn prefix(&self, f: usize) -> Vec<&str> {
        self.feature_order[..f].iter().map(String::as_str).collect()
    }
}

/// A cell's score, or why there is none.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellValue {
    Score(f64),
    Failed(String),
}

impl CellValue {
    pub fn score(&self) -> Option<f64> {
        match self {
            CellValue::Score(v) => Some(*v),
            CellValue::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CellMeta {
    pub restart_index: Option<usize>,
    pub converged: Option<bool>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub value: CellValue,
    pub meta: CellMeta,
}

impl Cell {
    fn failed(reason: impl Into<String>) -> Self {
        Cell {
            value: CellValue::Failed(reason.into()),
            meta: CellMeta::default(),
        }
    }
}

/// Winning cell of a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestCell {
    pub features: usize,
    pub clusters: usize,
    pub score: f64,
}

/// Scores of one (algorithm, index) pair; rows are cluster counts, columns feature counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub algorithm: Algorithm,
    pub index: IndexKind,
    clusters: Vec<usize>,
    features: Vec<usize>,
    cells: Vec<Cell>,
}

impl ScoreTable {
    pub fn new(
        algorithm: Algorithm,
        index: IndexKind,
        clusters: Vec<usize>,
        features: Vec<usize>,
        cells: Vec<Cell>,
    ) -> Result<Self> {
        if clusters.is_empty() || features.is_empty() {
            return Err(Error::invalid("a score table needs at least one row and one column"));
        }
        if cells.len() != clusters.len() * features.len() {
            return Err(Error::DimensionMismatch {
                expected: clusters.len() * features.len(),
                got: cells.len(),
            });
        }
        Ok(Self {
            algorithm,
            index,
            clusters,
            features,
            cells,
        })
    }

    /// Table from plain scores, `None` marking a failed cell.
    pub fn from_scores(
        algorithm: Algorithm,
        index: IndexKind,
        clusters: Vec<usize>,
        features: Vec<usize>,
        rows: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if rows.len() != clusters.len() || rows.iter().any(|r| r.len() != features.len()) {
            return Err(Error::invalid("score rows do not match the table axes"));
        }
        let cells = rows
            .into_iter()
            .flatten()
            .map(|v| Cell {
                value: match v {
                    Some(s) => CellValue::Score(s),
                    None => CellValue::Failed("NA".into()),
                },
                meta: CellMeta::default(),
            })
            .collect();
        Self::new(algorithm, index, clusters, features, cells)
    }

    pub fn clusters(&self) -> &[usize] {
        &self.clusters
    }

    pub fn features(&self) -> &[usize] {
        &self.features
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row * self.features.len() + col]
    }

    pub fn score(&self, row: usize, col: usize) -> Option<f64> {
        self.cell(row, col).value.score()
    }

    /// Cell by cluster and feature count.
    pub fn lookup(&self, k: usize, f: usize) -> Option<&Cell> {
        let r = self.clusters.iter().position(|&c| c == k)?;
        let c = self.features.iter().position(|&x| x == f)?;
        Some(self.cell(r, c))
    }

    pub fn name(&self) -> String {
        format!("{}_{}", self.algorithm, self.index)
    }

    /// Highest score; ties go to fewer features, then fewer clusters.
    pub fn best_cell(&self) -> Result<BestCell> {
        let mut best: Option<BestCell> = None;
        for (c, &f) in self.features.iter().enumerate() {
            for (r, &k) in self.clusters.iter().enumerate() {
                let Some(score) = self.score(r, c) else { continue };
                let better = match best {
                    None => true,
                    Some(b) => {
                        score > b.score
                            || (score == b.score && (f, k) < (b.features, b.clusters))
                    }
                };
                if better {
                    best = Some(BestCell {
                        features: f,
                        clusters: k,
                        score,
                    });
                }
            }
        }
        best.ok_or_else(|| Error::Degenerate(format!("every cell of {} failed", self.name())))
    }

    /// CSV with feature counts across and cluster counts down, four decimals, `NA` for failures.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("clusters");
        for f in &self.features {
            out.push_str(&format!(",{f}"));
        }
        out.push('\n');
        for (r, k) in self.clusters.iter().enumerate() {
            out.push_str(&k.to_string());
            for c in 0..self.features.len() {
                match self.score(r, c) {
                    Some(v) => out.push_str(&format!(",{v:.4}")),
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`ScoreTable::to_csv`]. Cell metadata is not stored in the CSV.
    pub fn parse_csv(text: &str, source_name: &str, algorithm: Algorithm, index: IndexKind) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty table".into()))?;
        let mut head = header.split(',');
        if head.next().map(str::trim) != Some("clusters") {
            return Err(parse_err(1, "header must start with 'clusters'".into()));
        }
        let features = head
            .map(|h| {
                h.trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(1, format!("bad feature count '{h}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut clusters = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != features.len() + 1 {
                return Err(parse_err(
                    lineno,
                    format!("expected {} fields, found {}", features.len() + 1, fields.len()),
                ));
            }
            clusters.push(
                fields[0]
                    .parse::<usize>()
                    .map_err(|_| parse_err(lineno, format!("bad cluster count '{}'", fields[0])))?,
            );
            let row = fields[1..]
                .iter()
                .map(|v| match *v {
                    "NA" => Ok(None),
                    _ => v
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .map(Some)
                        .ok_or_else(|| parse_err(lineno, format!("bad score '{v}'"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if clusters.is_empty() {
            return Err(parse_err(1, "table has no rows".into()));
        }
        Self::from_scores(algorithm, index, clusters, features, rows)
            .map_err(|e| parse_err(1, e.to_string()))
    }
}

/// Every table of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub tables: Vec<ScoreTable>,
}

impl SweepGrid {
    pub fn table(&self, algorithm: Algorithm, index: IndexKind) -> Option<&ScoreTable> {
        self.tables
            .iter()
            .find(|t| t.algorithm == algorithm && t.index == index)
    }

    pub fn best_cell(&self, algorithm: Algorithm, index: IndexKind) -> Result<BestCell> {
        self.table(algorithm, index)
            .ok_or_else(|| Error::invalid(format!("no table for {algorithm}_{index}")))?
            .best_cell()
    }

    pub fn summary(&self, config: &SweepConfig, data: &FeatureMatrix) -> SweepSummary {
        let tables = self
            .tables
            .iter()
            .map(|t| {
                let mut failed = Vec::new();
                let mut flagged = Vec::new();
                for (r, &k) in t.clusters.iter().enumerate() {
                    for (c, &f) in t.features.iter().enumerate() {
                        let cell = t.cell(r, c);
                        if let CellValue::Failed(reason) = &cell.value {
                            failed.push(CellNote {
                                clusters: k,
                                features: f,
                                note: reason.clone(),
                            });
                        }
                        for flag in &cell.meta.flags {
                            flagged.push(CellNote {
                                clusters: k,
                                features: f,
                                note: flag.clone(),
                            });
                        }
                    }
                }
                TableSummary {
                    algorithm: t.algorithm,
                    index: t.index,
                    file: format!("{}.csv", t.name()),
                    best: t.best_cell().ok(),
                    failed,
                    flagged,
                }
            })
            .collect();
        SweepSummary {
            seed: config.seed,
            rows: data.n_rows(),
            feature_order: config.feature_order[..config.features.max].to_vec(),
            clusters: config.clusters,
            features: config.features,
            restarts: config.restarts,
            kernel: config.kernel,
            tables,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellNote {
    pub clusters: usize,
    pub features: usize,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableSummary {
    pub algorithm: Algorithm,
    pub index: IndexKind,
    pub file: String,
    pub best: Option<BestCell>,
    pub failed: Vec<CellNote>,
    pub flagged: Vec<CellNote>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub seed: u64,
    pub rows: usize,
    pub feature_order: Vec<String>,
    pub clusters: CountRange,
    pub features: CountRange,
    pub restarts: usize,
    pub kernel: Option<KernelSpec>,
    pub tables: Vec<TableSummary>,
}

/// Data derived from one feature prefix, shared by every cell with that prefix.
struct PrefixContext {
    data: FeatureMatrix,
    /// Only needed for scoring.
    distances: Option<DistanceMatrix>,
    gram: std::result::Result<KernelMatrix, String>,
}

fn kernel_for(data: &FeatureMatrix, config: &SweepConfig) -> Result<KernelSpec> {
    config.kernel.map_or_else(|| KernelSpec::rbf_median(data), Ok)
}

impl PrefixContext {
    fn build(data: FeatureMatrix, config: &SweepConfig, need_gram: bool) -> Self {
        let distances = Some(DistanceMatrix::new(&data));
        let gram = if need_gram {
            kernel_for(&data, config)
                .and_then(|spec| gram_matrix(&data, &spec))
                .map_err(|e| e.to_string())
        } else {
            Err("kernel not requested".into())
        };
        Self {
            data,
            distances,
            gram,
        }
    }
}

/// What a cell's algorithm fitted, beyond the labels.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    KernelKMeans { kernel: KernelSpec, objective: f64 },
    Som(SomGrid),
    Gmm(GmmModel),
}

/// Clustering of one cell with its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct CellClustering {
    pub clustering: HardClustering,
    pub meta: CellMeta,
    pub model: FittedModel,
}

fn fit_cell(ctx: &PrefixContext, config: &SweepConfig, algorithm: Algorithm, k: usize) -> Result<CellClustering> {
    let seed = config.cell_seed(algorithm, k, ctx.data.n_features());
    match algorithm {
        Algorithm::KernelKMeans => {
            let gram = ctx.gram.as_ref().map_err(|e| Error::Degenerate(e.clone()))?;
            let opts = KernelKMeansOptions {
                k,
                restarts: config.restarts,
                max_iter: config.kernel_max_iter,
                seed,
            };
            let fit = fit_kernel_kmeans_gram(gram, &opts)?;
            let mut flags = Vec::new();
            if !fit.converged {
                flags.push(format!("no convergence within {} iterations", opts.max_iter));
            }
            Ok(CellClustering {
                clustering: fit.clustering,
                meta: CellMeta {
                    restart_index: Some(fit.restart_index),
                    converged: Some(fit.converged),
                    flags,
                },
                model: FittedModel::KernelKMeans {
                    kernel: *gram.spec(),
                    objective: fit.objective,
                },
            })
        }
        Algorithm::Som => {
            let schedule = SomSchedule {
                epochs: config.som_epochs,
                ..SomSchedule::for_shape(1, k)
            };
            let fit = fit_som(&ctx.data, 1, k, &schedule, config.restarts, seed)?;
            let assignment = assign_som(&fit.grid, &ctx.data)?;
            let mut flags = Vec::new();
            if assignment.compacted {
                flags.push(format!(
                    "{} of {k} units won no point",
                    k - assignment.clustering.k()
                ));
            }
            Ok(CellClustering {
                clustering: assignment.clustering,
                meta: CellMeta {
                    restart_index: Some(fit.restart_index),
                    converged: None,
                    flags,
                },
                model: FittedModel::Som(fit.grid),
            })
        }
        Algorithm::Gmm => {
            let opts = GmmOptions {
                m: k,
                restarts: config.restarts,
                max_iter: config.gmm_max_iter,
                tol: config.gmm_tol,
                regularization: config.gmm_regularization,
                seed,
            };
            let fit = fit_gmm(&ctx.data, &opts)?;
            let assignment = hard_assign(&fit.responsibilities);
            let mut flags = Vec::new();
            if !fit.converged {
                flags.push(format!("no convergence within {} iterations", opts.max_iter));
            }
            let reseeds: usize = fit.restarts.iter().map(|t| t.reseeds.len()).sum();
            if reseeds > 0 {
                flags.push(format!("{reseeds} degenerate component(s) re-seeded"));
            }
            let failed = fit.restarts.iter().filter(|t| t.failure.is_some()).count();
            if failed > 0 {
                flags.push(format!("{failed} restart(s) failed"));
            }
            if assignment.compacted {
                flags.push(format!(
                    "{} of {k} components won no point",
                    k - assignment.clustering.k()
                ));
            }
            Ok(CellClustering {
                clustering: assignment.clustering,
                meta: CellMeta {
                    restart_index: Some(fit.restart_index),
                    converged: Some(fit.converged),
                    flags,
                },
                model: FittedModel::Gmm(fit.model),
            })
        }
    }
}

/// Cluster every column of `data` into `k` groups exactly as the sweep cell with
/// `f = data.n_features()` would.
pub fn cluster_cell(data: &FeatureMatrix, config: &SweepConfig, algorithm: Algorithm, k: usize) -> Result<CellClustering> {
    if k < 1 || k > data.n_rows() {
        return Err(Error::invalid(format!(
            "k = {k} must lie in 1..={}",
            data.n_rows()
        )));
    }
    if let Some(spec) = &config.kernel {
        spec.validate()?;
    }
    let need_gram = algorithm == Algorithm::KernelKMeans;
    let gram = if need_gram {
        Ok(gram_matrix(data, &kernel_for(data, config)?)?)
    } else {
        Err("kernel not requested".into())
    };
    let ctx = PrefixContext {
        data: data.clone(),
        distances: None,
        gram,
    };
    fit_cell(&ctx, config, algorithm, k)
}

fn score_cell(ctx: &PrefixContext, config: &SweepConfig, algorithm: Algorithm, k: usize) -> Vec<Cell> {
    let fit = match fit_cell(ctx, config, algorithm, k) {
        Ok(fit) => fit,
        Err(e) => {
            return config
                .indices
                .iter()
                .map(|_| Cell::failed(e.to_string()))
                .collect()
        }
    };
    let distances = ctx.distances.as_ref().expect("sweep contexts carry distances");
    config
        .indices
        .iter()
        .map(|index| {
            let value = match index {
                IndexKind::Silhouette => {
                    silhouette_from_distances(distances, &fit.clustering).map(|s| s.mean)
                }
                IndexKind::Dunn => dunn_from_distances(distances, &fit.clustering),
            };
            Cell {
                value: match value {
                    Ok(v) => CellValue::Score(v),
                    Err(e) => CellValue::Failed(e.to_string()),
                },
                meta: fit.meta.clone(),
            }
        })
        .collect()
}

/// Score a single cell on its own, in the index order of `config`.
pub fn run_cell(data: &FeatureMatrix, config: &SweepConfig, algorithm: Algorithm, k: usize, f: usize) -> Result<Vec<Cell>> {
    config.validate(data)?;
    let ctx = PrefixContext::build(
        data.select(&config.prefix(f))?,
        config,
        algorithm == Algorithm::KernelKMeans,
    );
    Ok(score_cell(&ctx, config, algorithm, k))
}

/// Run every configured cell. Cells run in parallel; results do not depend on scheduling.
pub fn run_sweep(data: &FeatureMatrix, config: &SweepConfig) -> Result<SweepGrid> {
    config.validate(data)?;
    let clusters = config.clusters.values();
    let features = config.features.values();
    let need_gram = config.algorithms.contains(&Algorithm::KernelKMeans);
    let work = clusters.len() * features.len() * config.algorithms.len();

    let run = || -> Result<SweepGrid> {
        let contexts = features
            .par_iter()
            .map(|&f| Ok(PrefixContext::build(data.select(&config.prefix(f))?, config, need_gram)))
            .collect::<Result<Vec<_>>>()?;

        let jobs: Vec<(usize, usize, usize)> = (0..config.algorithms.len())
            .flat_map(|a| {
                let n_f = features.len();
                clusters
                    .iter()
                    .enumerate()
                    .flat_map(move |(r, _)| (0..n_f).map(move |c| (a, r, c)))
            })
            .collect();
        let results: Vec<Vec<Cell>> = jobs
            .par_iter()
            .map(|&(a, r, c)| score_cell(&contexts[c], config, config.algorithms[a], clusters[r]))
            .collect();

        let per_alg = clusters.len() * features.len();
        let mut tables = Vec::new();
        for (a, &algorithm) in config.algorithms.iter().enumerate() {
            let block = &results[a * per_alg..(a + 1) * per_alg];
            for (i, &index) in config.indices.iter().enumerate() {
                let cells = block.iter().map(|cell| cell[i].clone()).collect();
                tables.push(ScoreTable::new(
                    algorithm,
                    index,
                    clusters.clone(),
                    features.clone(),
                    cells,
                )?);
            }
        }
        Ok(SweepGrid { tables })
    };

    let threads = config
        .jobs
        .unwrap_or_else(rayon::current_num_threads)
        .min(work)
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<Vec<Option<f64>>>) -> ScoreTable {
        let clusters = (2..2 + rows.len()).collect();
        let features = (2..2 + rows[0].len()).collect();
        ScoreTable::from_scores(Algorithm::Gmm, IndexKind::Dunn, clusters, features, rows).unwrap()
    }

    #[test]
    fn best_cell_prefers_fewer_features_then_clusters() {
        let t = table(vec![vec![Some(0.5), Some(0.5)], vec![Some(0.5), Some(0.5)]]);
        let b = t.best_cell().unwrap();
        assert_eq!((b.features, b.clusters), (2, 2));

        let t = table(vec![vec![Some(0.1), Some(0.9)], vec![Some(0.9), None]]);
        let b = t.best_cell().unwrap();
        assert_eq!((b.features, b.clusters, b.score), (2, 3, 0.9));
    }

    #[test]
    fn best_cell_unique_max_and_all_failed() {
        let t = table(vec![vec![Some(0.1), Some(0.2)], vec![Some(0.7), Some(0.3)]]);
        assert_eq!(t.best_cell().unwrap().score, 0.7);
        assert!(table(vec![vec![None]]).best_cell().is_err());
    }

    #[test]
    fn single_cell_csv() {
        let t = table(vec![vec![Some(0.25)]]);
        assert_eq!(t.to_csv(), "clusters,2\n2,0.2500\n");
    }

    #[test]
    fn csv_shape_and_round_trip() {
        let rows: Vec<Vec<Option<f64>>> = (0..10)
            .map(|r| (0..8).map(|c| if r == 3 && c == 5 { None } else { Some((r * 8 + c) as f64 / 97.0) }).collect())
            .collect();
        let t = table(rows);
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 11);
        assert!(csv.lines().all(|l| l.split(',').count() == 9));
        let back = ScoreTable::parse_csv(&csv, "t.csv", Algorithm::Gmm, IndexKind::Dunn).unwrap();
        assert_eq!(back.to_csv(), csv);
        assert_eq!(back.score(3, 5), None);
        assert!((back.score(1, 1).unwrap() - t.score(1, 1).unwrap()).abs() <= 5e-5);
    }

    #[test]
    fn parse_rejects_garbage_with_line() {
        let err = ScoreTable::parse_csv("clusters,2\n2,abc\n", "bad.csv", Algorithm::Som, IndexKind::Dunn)
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.csv") && msg.contains('2'), "{msg}");
    }

    #[test]
    fn serde_names_match_display() {
        for a in Algorithm::ALL {
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{a}\""));
        }
        for i in IndexKind::ALL {
            assert_eq!(serde_json::to_string(&i).unwrap(), format!("\"{i}\""));
        }
    }

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        for i in IndexKind::ALL {
            assert_eq!(i.name().parse::<IndexKind>().unwrap(), i);
        }
        assert!("kmeans".parse::<Algorithm>().is_err());
    }

    #[test]
    fn config_rejects_bad_ranges() {
        let data = FeatureMatrix::from_rows(vec![vec![0.0, 1.0]; 5]).unwrap();
        let mut cfg = SweepConfig {
            feature_order: vec!["x0".into(), "x1".into()],
            clusters: CountRange::new(2, 4),
            features: CountRange::new(1, 2),
            ..SweepConfig::default()
        };
        assert!(cfg.validate(&data).is_ok());
        cfg.clusters = CountRange::new(2, 5);
        assert!(cfg.validate(&data).is_err());
        cfg.clusters = CountRange::new(1, 3);
        assert!(cfg.validate(&data).is_err());
        cfg.clusters = CountRange::new(2, 3);
        cfg.features = CountRange::new(1, 3);
        assert!(cfg.validate(&data).is_err());
        cfg.features = CountRange::new(1, 2);
        cfg.feature_order = vec!["x0".into(), "nope".into()];
        assert!(cfg.validate(&data).is_err());
    }
}
