//! Command-line front end: `ingest`, `cluster`, `sweep` and `report`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::pipeline::FeatureMatrix;
use crate::report::{render_heatmap, render_profiles, HeatmapSpec};
use crate::sweep::{cluster_cell, run_sweep, Algorithm, FittedModel, ScoreTable};
use crate::validity::validity_report;

#[derive(Debug, Parser)]
#[command(name = "volclust", version, about = "Cluster volatility features and score the partitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read the configured price series and write features.csv.
    Ingest(Common),
    /// Cluster the feature matrix once and score the result.
    Cluster(ClusterArgs),
    /// Score every (algorithm, index, clusters, features) cell and write one table per pair.
    Sweep(Common),
    /// Render heatmaps and profiles from the sweep tables.
    Report(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the sweep.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    #[value(name = "kernel_kmeans", alias = "kernel-kmeans")]
    KernelKmeans,
    Som,
    Gmm,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::KernelKmeans => Algorithm::KernelKMeans,
            AlgorithmArg::Som => Algorithm::Som,
            AlgorithmArg::Gmm => Algorithm::Gmm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    Rbf,
    Polynomial,
    Sigmoid,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    algorithm: AlgorithmArg,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// Feature matrix to cluster (default: features.csv in the output directory).
    #[arg(long)]
    features: Option<PathBuf>,
    /// Use only the first N columns of the configured feature order.
    #[arg(long, value_name = "N")]
    feature_count: Option<usize>,
    /// Kernel for kernel_kmeans; rbf without --sigma uses the median pairwise distance.
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
}

/// Parse `args` (program name first), run the subcommand and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Ingest(c) => cmd_ingest(&c),
        Command::Cluster(c) => cmd_cluster(&c),
        Command::Sweep(c) => cmd_sweep(&c),
        Command::Report(c) => cmd_report(&c),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.class().exit_code()
        }
    }
}

/// Config plus flag overrides, and the resolved output directory.
fn resolve(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        config.jobs = Some(jobs);
    }
    let out = common.out.clone().unwrap_or_else(|| config.out_dir());
    Ok((config, out))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    FeatureMatrix::read_csv(file, &path.display().to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::invalid(format!("cannot serialize output: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn cmd_ingest(common: &Common) -> Result<()> {
    let (config, out) = resolve(common)?;
    if config.series.is_empty() {
        return Err(Error::Config(
            "ingest needs a config listing [[series]] entries (--config)".into(),
        ));
    }
    let raw = config.catalog().load(Path::new(""))?;
    let features = if config.standardize { raw.standardize()? } else { raw };
    create_dir(&out)?;
    let path = out.join("features.csv");
    let mut buf = Vec::new();
    features
        .write_csv(&mut buf)
        .map_err(|e| Error::io(&path, e))?;
    write_file(&path, buf)?;
    let dates = features.dates();
    println!(
        "{} rows x {} features, {} to {} -> {}",
        features.n_rows(),
        features.n_features(),
        dates.first().map_or_else(String::new, |d| d.to_string()),
        dates.last().map_or_else(String::new, |d| d.to_string()),
        path.display()
    );
    Ok(())
}

fn kernel_from_flags(args: &ClusterArgs, fallback: Option<KernelSpec>) -> Result<Option<KernelSpec>> {
    let kind = match (args.kernel, args.sigma) {
        (Some(kind), _) => kind,
        (None, Some(_)) => KernelArg::Rbf,
        (None, None) => {
            if args.gamma.is_some() || args.degree.is_some() || args.theta.is_some() {
                return Err(Error::invalid("kernel parameters given without --kernel"));
            }
            return Ok(fallback);
        }
    };
    let spec = match kind {
        KernelArg::Rbf => args.sigma.map(|sigma| KernelSpec::Rbf { sigma }),
        KernelArg::Polynomial => Some(KernelSpec::Polynomial {
            gamma: args.gamma.unwrap_or(1.0),
            degree: args.degree.unwrap_or(2),
        }),
        KernelArg::Sigmoid => Some(KernelSpec::Sigmoid {
            gamma: args.gamma.unwrap_or(0.01),
            theta: args.theta.unwrap_or(0.0),
        }),
    };
    if let Some(s) = &spec {
        s.validate()?;
    }
    Ok(spec)
}

#[derive(Serialize)]
struct ClusterSummary<'a> {
    algorithm: Algorithm,
    k: usize,
    clusters_found: usize,
    features: &'a [String],
    seed: u64,
    silhouette: f64,
    dunn: Option<f64>,
    flags: Vec<String>,
    restart_index: Option<usize>,
    converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<KernelSpec>,
}

fn cmd_cluster(args: &ClusterArgs) -> Result<()> {
    if args.k < 2 {
        return Err(Error::invalid("validity indices require k ≥ 2"));
    }
    let (config, out) = resolve(&args.common)?;
    let algorithm = Algorithm::from(args.algorithm);
    let mut sweep = config.sweep_config();
    sweep.kernel = kernel_from_flags(args, sweep.kernel)?;

    let source = args.features.clone().unwrap_or_else(|| out.join("features.csv"));
    let mut data = read_features(&source)?;
    if let Some(f) = args.feature_count {
        if f < 1 || f > sweep.feature_order.len() {
            return Err(Error::invalid(format!(
                "--feature-count must lie in 1..={}",
                sweep.feature_order.len()
            )));
        }
        let names: Vec<&str> = sweep.feature_order[..f].iter().map(String::as_str).collect();
        data = data.select(&names)?;
    }
    if args.k >= data.n_rows() {
        return Err(Error::invalid(format!(
            "k = {} must be below the {} rows",
            args.k,
            data.n_rows()
        )));
    }

    let cell = cluster_cell(&data, &sweep, algorithm, args.k)?;
    let mut flags = cell.meta.flags.clone();
    let kernel = match &cell.model {
        FittedModel::KernelKMeans { kernel, .. } => Some(*kernel),
        _ => None,
    };
    let validity = if cell.clustering.k() < 2 {
        return Err(Error::Degenerate(format!(
            "{algorithm} put every point in one cluster; validity indices require k ≥ 2"
        )));
    } else {
        validity_report(&data, &cell.clustering)?
    };
    flags.extend(validity.flags.iter().cloned());

    create_dir(&out)?;
    let mut assignments = String::from("date,label\n");
    for (i, label) in cell.clustering.labels().iter().enumerate() {
        match data.dates().get(i) {
            Some(d) => assignments.push_str(&format!("{},{label}\n", d.format("%Y-%m-%d"))),
            None => assignments.push_str(&format!("{i},{label}\n")),
        }
    }
    write_file(&out.join("assignments.csv"), assignments)?;

    let summary = ClusterSummary {
        algorithm,
        k: args.k,
        clusters_found: cell.clustering.k(),
        features: data.names(),
        seed: sweep.seed,
        silhouette: validity.silhouette,
        dunn: validity.dunn,
        flags,
        restart_index: cell.meta.restart_index,
        converged: cell.meta.converged,
        kernel,
    };
    write_file(&out.join("validity.json"), to_json(&summary)?)?;
    match &cell.model {
        FittedModel::Gmm(model) => {
            write_file(&out.join("gmm_model.json"), to_json(&model.canonicalized().dump())?)?;
        }
        FittedModel::Som(grid) => {
            let path = out.join("som_grid.csv");
            let mut buf = Vec::new();
            grid.write_csv(&mut buf).map_err(|e| Error::io(&path, e))?;
            write_file(&path, buf)?;
        }
        FittedModel::KernelKMeans { .. } => {}
    }
    println!(
        "{algorithm} k={}: silhouette {:.4}, dunn {} -> {}",
        args.k,
        validity.silhouette,
        validity
            .dunn
            .map_or_else(|| "NA".to_string(), |d| format!("{d:.4}")),
        out.display()
    );
    Ok(())
}

fn cmd_sweep(common: &Common) -> Result<()> {
    let (config, out) = resolve(common)?;
    let sweep = config.sweep_config();
    let data = read_features(&out.join("features.csv"))?;
    let grid = run_sweep(&data, &sweep)?;
    create_dir(&out)?;
    for table in &grid.tables {
        write_file(&out.join(format!("{}.csv", table.name())), table.to_csv())?;
        match table.best_cell() {
            Ok(b) => println!(
                "{}: best {:.4} at {} features, {} clusters",
                table.name(),
                b.score,
                b.features,
                b.clusters
            ),
            Err(_) => println!("{}: every cell failed", table.name()),
        }
    }
    write_file(&out.join("summary.json"), to_json(&grid.summary(&sweep, &data))?)?;
    Ok(())
}

fn cmd_report(common: &Common) -> Result<()> {
    let (config, out) = resolve(common)?;
    let sweep = config.sweep_config();
    let mut tables = Vec::new();
    for &algorithm in &sweep.algorithms {
        for &index in &sweep.indices {
            let path = out.join(format!("{algorithm}_{index}.csv"));
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            tables.push(ScoreTable::parse_csv(
                &text,
                &path.display().to_string(),
                algorithm,
                index,
            )?);
        }
    }
    for table in &tables {
        let name = table.name();
        let heatmap = render_heatmap(table, &HeatmapSpec::for_table(table))
            .map_err(|e| Error::Degenerate(format!("{name}: {e}")))?;
        let profiles =
            render_profiles(table).map_err(|e| Error::Degenerate(format!("{name}: {e}")))?;
        write_file(&out.join(format!("{name}_heatmap.svg")), heatmap)?;
        write_file(&out.join(format!("{name}_profiles.svg")), profiles)?;
    }
    println!("{} figures -> {}", 2 * tables.len(), out.display());
    Ok(())
}
