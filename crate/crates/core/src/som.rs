//! Kohonen self-organizing map, trained online.
//!
//! Each presentation finds the best matching unit (nearest weight vector) and pulls every
//! unit toward the input by `lr(t) * exp(-d^2 / (2 sigma(t)^2))`, where `d` is the
//! Euclidean distance between lattice coordinates. Both `lr` and `sigma` decay
//! exponentially over the global step count. After training each unit is one cluster.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::seq::index::sample;
use serde::Serialize;

use crate::clustering::HardClustering;
use crate::error::{Error, Result};
use crate::kernel::squared_distance;
use crate::numfmt::format_significant;
use crate::pipeline::FeatureMatrix;
use crate::seed::{derive_seed, rng_for};

/// A `rows x cols` lattice of units with weight vectors in data space.
#[derive(Debug, Clone, PartialEq)]
pub struct SomGrid {
    rows: usize,
    cols: usize,
    dim: usize,
    weights: Vec<f64>,
}

impl SomGrid {
    /// Grid with explicit unit weights, listed row by row.
    pub fn from_weights(rows: usize, cols: usize, weights: Vec<Vec<f64>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("lattice needs at least one row and column"));
        }
        if weights.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: weights.len(),
            });
        }
        let dim = weights[0].len();
        if dim == 0 {
            return Err(Error::invalid("unit weights must have at least one dimension"));
        }
        let mut flat = Vec::with_capacity(rows * cols * dim);
        for w in weights {
            if w.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("unit weights must be finite"));
            }
            flat.extend(w);
        }
        Ok(Self {
            rows,
            cols,
            dim,
            weights: flat,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn n_units(&self) -> usize {
        self.rows * self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lattice position `(row, col)` of unit `j`.
    pub fn coords(&self, j: usize) -> (usize, usize) {
        (j / self.cols, j % self.cols)
    }

    pub fn weight(&self, j: usize) -> &[f64] {
        &self.weights[j * self.dim..(j + 1) * self.dim]
    }

    fn lattice_distance_sq(&self, a: usize, b: usize) -> f64 {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        let dr = ra as f64 - rb as f64;
        let dc = ca as f64 - cb as f64;
        dr * dr + dc * dc
    }

    /// `unit,row,col,w0,...` with 10 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "unit,row,col")?;
        for k in 0..self.dim {
            write!(out, ",w{k}")?;
        }
        writeln!(out)?;
        for j in 0..self.n_units() {
            let (r, c) = self.coords(j);
            write!(out, "{j},{r},{c}")?;
            for v in self.weight(j) {
                write!(out, ",{}", format_significant(*v, 10))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Learning-rate and neighborhood-width decay over training.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SomSchedule {
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub sigma_start: f64,
    pub sigma_end: f64,
}

impl SomSchedule {
    /// 50 epochs, learning rate 0.5 to 0.01, width `max(rows, cols) / 2` to 0.1.
    pub fn for_shape(rows: usize, cols: usize) -> Self {
        Self {
            epochs: 50,
            lr_start: 0.5,
            lr_end: 0.01,
            sigma_start: (rows.max(cols) as f64 / 2.0).max(0.1),
            sigma_end: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("SOM needs at least one epoch"));
        }
        if !(self.lr_start >= self.lr_end && self.lr_end > 0.0 && self.lr_start <= 1.0) {
            return Err(Error::invalid(
                "learning rates must satisfy 1 >= start >= end > 0",
            ));
        }
        if !(self.sigma_start >= self.sigma_end && self.sigma_end > 0.0) {
            return Err(Error::invalid("widths must satisfy start >= end > 0"));
        }
        Ok(())
    }

    fn decay(start: f64, end: f64, step: usize, total: usize) -> f64 {
        if total <= 1 {
            return start;
        }
        let t = step as f64 / (total - 1) as f64;
        start * (end / start).powf(t)
    }

    pub fn learning_rate(&self, step: usize, total: usize) -> f64 {
        Self::decay(self.lr_start, self.lr_end, step, total)
    }

    pub fn width(&self, step: usize, total: usize) -> f64 {
        Self::decay(self.sigma_start, self.sigma_end, step, total)
    }
}

/// Unit whose weight is nearest `x`; ties go to the lower index.
pub fn best_matching_unit(grid: &SomGrid, x: &[f64]) -> Result<usize> {
    if x.len() != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            got: x.len(),
        });
    }
    Ok(bmu_unchecked(grid, x))
}

fn bmu_unchecked(grid: &SomGrid, x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for j in 0..grid.n_units() {
        let d = squared_distance(x, grid.weight(j));
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Gaussian neighborhood `exp(-d^2 / (2 sigma^2))`.
pub fn neighborhood(distance: f64, sigma: f64) -> f64 {
    (-distance * distance / (2.0 * sigma * sigma)).exp()
}

/// Present one input: move every unit toward `x`. Returns the winning unit.
pub fn update_step(grid: &mut SomGrid, x: &[f64], lr: f64, sigma: f64) -> Result<usize> {
    let winner = best_matching_unit(grid, x)?;
    apply_update(grid, x, winner, lr, sigma);
    Ok(winner)
}

fn apply_update(grid: &mut SomGrid, x: &[f64], winner: usize, lr: f64, sigma: f64) {
    let two_sigma_sq = 2.0 * sigma * sigma;
    let dim = grid.dim;
    for j in 0..grid.n_units() {
        let h = (-grid.lattice_distance_sq(j, winner) / two_sigma_sq).exp();
        let rate = lr * h;
        if rate == 0.0 {
            continue;
        }
        let w = &mut grid.weights[j * dim..(j + 1) * dim];
        for (wk, xk) in w.iter_mut().zip(x) {
            *wk += rate * (xk - *wk);
        }
    }
}

/// Train a `rows x cols` map. Weights start at distinct random rows of `data`; each epoch
/// presents every row once in a fresh seeded order.
pub fn train_som(
    data: &FeatureMatrix,
    rows: usize,
    cols: usize,
    schedule: &SomSchedule,
    seed: u64,
) -> Result<SomGrid> {
    schedule.validate()?;
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::invalid("cannot train a map on empty data"));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("lattice needs at least one row and column"));
    }
    let units = rows * cols;
    let mut rng = rng_for(seed, &[]);

    // more units than rows: cycle through a shuffled copy
    let mut init = Vec::with_capacity(units);
    while init.len() < units {
        let take = (units - init.len()).min(n);
        init.extend(sample(&mut rng, n, take));
    }
    let mut grid = SomGrid::from_weights(
        rows,
        cols,
        init.iter().map(|&i| data.row(i).to_vec()).collect(),
    )?;

    let total = schedule.epochs * n;
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0;
    for _ in 0..schedule.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = data.row(i);
            let winner = bmu_unchecked(&grid, x);
            apply_update(
                &mut grid,
                x,
                winner,
                schedule.learning_rate(step, total),
                schedule.width(step, total),
            );
            step += 1;
        }
    }
    Ok(grid)
}

/// Mean squared distance from each row to its best matching unit.
pub fn quantization_error(grid: &SomGrid, data: &FeatureMatrix) -> Result<f64> {
    if data.n_features() != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            got: data.n_features(),
        });
    }
    if data.n_rows() == 0 {
        return Err(Error::invalid("quantization error of empty data"));
    }
    let total: f64 = data
        .rows()
        .map(|x| squared_distance(x, grid.weight(bmu_unchecked(grid, x))))
        .sum();
    Ok(total / data.n_rows() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomFit {
    pub grid: SomGrid,
    pub quantization_error: f64,
    pub restart_index: usize,
}

/// Train `restarts` maps with seeds derived from `seed` and keep the lowest quantization
/// error (ties to the earlier restart).
pub fn fit_som(
    data: &FeatureMatrix,
    rows: usize,
    cols: usize,
    schedule: &SomSchedule,
    restarts: usize,
    seed: u64,
) -> Result<SomFit> {
    if restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    let mut best: Option<SomFit> = None;
    for restart in 0..restarts {
        let grid = train_som(data, rows, cols, schedule, derive_seed(seed, &[restart as u64]))?;
        let qe = quantization_error(&grid, data)?;
        if best.as_ref().is_none_or(|b| qe < b.quantization_error) {
            best = Some(SomFit {
                grid,
                quantization_error: qe,
                restart_index: restart,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SomAssignment {
    pub clustering: HardClustering,
    /// Some unit won no point and was dropped from the labelling.
    pub compacted: bool,
}

/// Label every row with its best matching unit, dropping units that win nothing.
pub fn assign_som(grid: &SomGrid, data: &FeatureMatrix) -> Result<SomAssignment> {
    if data.n_features() != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            got: data.n_features(),
        });
    }
    let labels: Vec<usize> = data.rows().map(|x| bmu_unchecked(grid, x)).collect();
    let (clustering, gap) = HardClustering::compacted(&labels)?;
    Ok(SomAssignment {
        compacted: gap || clustering.k() < grid.n_units(),
        clustering,
    })
}
