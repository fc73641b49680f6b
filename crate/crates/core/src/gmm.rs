//! Gaussian mixture clustering fitted by Expectation-Maximization.
//!
//! Densities are handled in the log domain throughout. Responsibilities are
//! `alpha_ij = w_i P_i(d_j) / sum_r w_r P_r(d_j)` computed with a max shift, and the
//! M-step uses weights `N_i / n`, responsibility-weighted means, and full covariances
//! with `eps * I` added to each diagonal.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::Serialize;

use crate::clustering::HardClustering;
use crate::error::{Error, Result};
use crate::pipeline::FeatureMatrix;
use crate::seed::rng_for;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Mixture weights, means and full covariance matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<DMatrix<f64>>,
    regularization: f64,
}

impl GmmModel {
    pub fn new(
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covariances: Vec<DMatrix<f64>>,
        regularization: f64,
    ) -> Result<Self> {
        let m = weights.len();
        if m == 0 || means.len() != m || covariances.len() != m {
            return Err(Error::invalid(
                "weights, means and covariances must have one entry per component",
            ));
        }
        let dim = means[0].len();
        for (mu, cov) in means.iter().zip(&covariances) {
            if mu.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: mu.len(),
                });
            }
            if cov.nrows() != dim || cov.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: cov.nrows(),
                });
            }
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("mixture weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self {
            weights,
            means,
            covariances,
            regularization,
        })
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    /// Components sorted by first mean coordinate, for comparing fits up to relabelling.
    pub fn canonicalized(&self) -> Self {
        let mut order: Vec<usize> = (0..self.n_components()).collect();
        order.sort_by(|&a, &b| self.means[a][0].total_cmp(&self.means[b][0]));
        Self {
            weights: order.iter().map(|&i| self.weights[i]).collect(),
            means: order.iter().map(|&i| self.means[i].clone()).collect(),
            covariances: order.iter().map(|&i| self.covariances[i].clone()).collect(),
            regularization: self.regularization,
        }
    }

    pub fn dump(&self) -> GmmDump {
        GmmDump {
            weights: self.weights.clone(),
            means: self.means.clone(),
            covariances: self
                .covariances
                .iter()
                .map(|c| c.row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect(),
            regularization: self.regularization,
        }
    }

    fn factors(&self) -> Result<Vec<CholeskyFactor>> {
        self.covariances
            .iter()
            .enumerate()
            .map(|(i, c)| {
                CholeskyFactor::new(c)
                    .ok_or_else(|| Error::NotPositiveDefinite(format!("covariance of component {i}")))
            })
            .collect()
    }
}

/// Plain-data view of a fitted model for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct GmmDump {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub regularization: f64,
}

/// Lower-triangular factor stored row-major, with the log-determinant of the covariance.
struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
    log_det: f64,
}

impl CholeskyFactor {
    fn new(cov: &DMatrix<f64>) -> Option<Self> {
        let chol = cov.clone().cholesky()?;
        let l = chol.l();
        let dim = cov.nrows();
        let mut lower = vec![0.0; dim * dim];
        let mut log_det = 0.0;
        for i in 0..dim {
            for j in 0..=i {
                lower[i * dim + j] = l[(i, j)];
            }
            log_det += 2.0 * l[(i, i)].ln();
        }
        log_det.is_finite().then_some(Self { dim, lower, log_det })
    }

    /// `log N(x | mean, L L^T)`
    fn log_density(&self, x: &[f64], mean: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.dim;
        let mut quad = 0.0;
        for i in 0..d {
            let row = &self.lower[i * d..i * d + i];
            let mut s = x[i] - mean[i];
            for (j, lij) in row.iter().enumerate() {
                s -= lij * scratch[j];
            }
            let z = s / self.lower[i * d + i];
            scratch[i] = z;
            quad += z * z;
        }
        -0.5 * (d as f64 * LN_2PI + self.log_det + quad)
    }
}

/// Log of the multivariate normal density at `x`.
pub fn gaussian_log_density(x: &[f64], mean: &[f64], cov: &DMatrix<f64>) -> Result<f64> {
    if x.len() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            got: x.len(),
        });
    }
    if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            got: cov.nrows(),
        });
    }
    let factor = CholeskyFactor::new(cov)
        .ok_or_else(|| Error::NotPositiveDefinite("covariance".into()))?;
    let mut scratch = vec![0.0; mean.len()];
    Ok(factor.log_density(x, mean, &mut scratch))
}

/// Posterior component probabilities, one row per data point.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl Responsibilities {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::invalid("responsibilities need at least one row and column"));
        }
        let mut values = Vec::with_capacity(n * m);
        for r in rows {
            if r.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: r.len(),
                });
            }
            if r.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return Err(Error::invalid("responsibilities must lie in [0, 1]"));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("responsibility row sums to {s}")));
            }
            values.extend(r);
        }
        Ok(Self { n, m, values })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn n_components(&self) -> usize {
        self.m
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.m..(j + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.m)
    }

    /// Largest `|row sum - 1|`.
    pub fn max_normalization_error(&self) -> f64 {
        self.rows()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Total responsibility per component.
    pub fn masses(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for r in self.rows() {
            for (o, a) in out.iter_mut().zip(r) {
                *o += a;
            }
        }
        out
    }
}

fn check_dims(model: &GmmModel, data: &FeatureMatrix) -> Result<()> {
    if data.n_features() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: data.n_features(),
        });
    }
    if data.n_rows() == 0 {
        return Err(Error::invalid("no data points"));
    }
    Ok(())
}

/// E-step plus the per-point log mixture density `log sum_i w_i P_i(d_j)`.
fn expectation(model: &GmmModel, data: &FeatureMatrix) -> Result<(Responsibilities, Vec<f64>)> {
    check_dims(model, data)?;
    let factors = model.factors()?;
    let m = model.n_components();
    let n = data.n_rows();
    let log_w: Vec<f64> = model.weights.iter().map(|w| w.ln()).collect();
    let mut scratch = vec![0.0; model.dim()];
    let mut values = vec![0.0; n * m];
    let mut point_ll = Vec::with_capacity(n);
    for (j, x) in data.rows().enumerate() {
        let row = &mut values[j * m..(j + 1) * m];
        for i in 0..m {
            row[i] = log_w[i] + factors[i].log_density(x, &model.means[i], &mut scratch);
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Degenerate(format!(
                "point {j} has zero density under every component"
            )));
        }
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
        point_ll.push(max + sum.ln());
    }
    Ok((Responsibilities { n, m, values }, point_ll))
}

/// Posterior probability of each component for each point.
pub fn e_step(model: &GmmModel, data: &FeatureMatrix) -> Result<Responsibilities> {
    expectation(model, data).map(|(r, _)| r)
}

/// `sum_j log sum_i w_i P_i(d_j)`, evaluated with log-sum-exp.
pub fn log_likelihood(model: &GmmModel, data: &FeatureMatrix) -> Result<f64> {
    expectation(model, data).map(|(_, ll)| ll.iter().sum())
}

/// Weighted moments per component; `None` where the component has no mass.
fn maximization_parts(
    data: &FeatureMatrix,
    resp: &Responsibilities,
    eps: f64,
) -> Result<Vec<Option<(f64, Vec<f64>, DMatrix<f64>)>>> {
    if resp.n_points() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            got: resp.n_points(),
        });
    }
    let n = data.n_rows() as f64;
    let p = data.n_features();
    let masses = resp.masses();
    let tiny = f64::EPSILON * n;
    let mut out = Vec::with_capacity(resp.n_components());
    for (i, &mass) in masses.iter().enumerate() {
        if !(mass > tiny) {
            out.push(None);
            continue;
        }
        let mut mean = vec![0.0; p];
        for (x, r) in data.rows().zip(resp.rows()) {
            let a = r[i];
            for (m, xv) in mean.iter_mut().zip(x) {
                *m += a * xv;
            }
        }
        mean.iter_mut().for_each(|m| *m /= mass);

        let mut cov = DMatrix::<f64>::zeros(p, p);
        let mut diff = vec![0.0; p];
        for (x, r) in data.rows().zip(resp.rows()) {
            let a = r[i];
            if a == 0.0 {
                continue;
            }
            for k in 0..p {
                diff[k] = x[k] - mean[k];
            }
            for r_ in 0..p {
                let s = a * diff[r_];
                for c in r_..p {
                    cov[(r_, c)] += s * diff[c];
                }
            }
        }
        for r_ in 0..p {
            for c in r_..p {
                let v = cov[(r_, c)] / mass;
                cov[(r_, c)] = v;
                cov[(c, r_)] = v;
            }
            cov[(r_, r_)] += eps;
        }
        out.push(Some((mass / n, mean, cov)));
    }
    Ok(out)
}

/// Re-estimate weights, means and regularized covariances from responsibilities.
///
/// Fails with [`Error::EmptyComponent`] when a component has zero total responsibility.
pub fn m_step(data: &FeatureMatrix, resp: &Responsibilities, eps: f64) -> Result<GmmModel> {
    let parts = maximization_parts(data, resp, eps)?;
    let mut weights = Vec::new();
    let mut means = Vec::new();
    let mut covs = Vec::new();
    for (i, part) in parts.into_iter().enumerate() {
        let (w, mu, cov) = part.ok_or(Error::EmptyComponent { component: i })?;
        weights.push(w);
        means.push(mu);
        covs.push(cov);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(GmmModel {
        weights,
        means,
        covariances: covs,
        regularization: eps,
    })
}

/// Biased (divisor `n`) covariance of all rows, plus `eps * I`.
fn global_covariance(data: &FeatureMatrix, eps: f64) -> DMatrix<f64> {
    let n = data.n_rows();
    let p = data.n_features();
    let mean: Vec<f64> = (0..p)
        .map(|j| data.rows().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for x in data.rows() {
        for r in 0..p {
            for c in r..p {
                cov[(r, c)] += (x[r] - mean[r]) * (x[c] - mean[c]);
            }
        }
    }
    for r in 0..p {
        for c in r..p {
            let v = cov[(r, c)] / n as f64;
            cov[(r, c)] = v;
            cov[(c, r)] = v;
        }
        cov[(r, r)] += eps;
    }
    cov
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GmmOptions {
    pub m: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once the absolute log-likelihood change falls below this.
    pub tol: f64,
    /// Added to every covariance diagonal.
    pub regularization: f64,
    pub seed: u64,
}

impl GmmOptions {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            restarts: 10,
            max_iter: 200,
            tol: 1e-6,
            regularization: 1e-6,
            seed: 42,
        }
    }
}

/// What happened inside one EM restart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartTrace {
    /// Log-likelihood after each E-step.
    pub log_likelihood: Vec<f64>,
    /// Trace positions whose model came from re-seeding a degenerate component. EM
    /// monotonicity holds between consecutive re-seeds, not across them.
    pub reseeds: Vec<usize>,
    /// Largest responsibility row-sum error seen in any E-step.
    pub max_normalization_error: f64,
    pub converged: bool,
    /// Set when the restart aborted on a numerical failure.
    pub failure: Option<String>,
}

impl RestartTrace {
    /// The trace split at re-seed points into segments where EM's ascent guarantee applies.
    pub fn monotone_segments(&self) -> Vec<&[f64]> {
        let mut cuts = vec![0];
        cuts.extend(self.reseeds.iter().copied());
        cuts.push(self.log_likelihood.len());
        cuts.windows(2)
            .map(|w| &self.log_likelihood[w[0]..w[1]])
            .filter(|s| !s.is_empty())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFitResult {
    pub model: GmmModel,
    pub responsibilities: Responsibilities,
    /// Trace of the winning restart.
    pub log_likelihood_trace: Vec<f64>,
    pub converged: bool,
    pub restart_index: usize,
    /// Every restart, winners and losers.
    pub restarts: Vec<RestartTrace>,
}

impl GmmFitResult {
    pub fn log_likelihood(&self) -> f64 {
        *self.log_likelihood_trace.last().expect("non-empty trace")
    }
}

struct RestartOutcome {
    model: GmmModel,
    resp: Responsibilities,
}

fn run_restart(
    data: &FeatureMatrix,
    opts: &GmmOptions,
    restart: usize,
    global_cov: &DMatrix<f64>,
    trace: &mut RestartTrace,
) -> Result<RestartOutcome> {
    let n = data.n_rows();
    let m = opts.m;
    let mut rng = rng_for(opts.seed, &[restart as u64]);
    let picks = sample(&mut rng, n, m).into_vec();
    let mut model = GmmModel {
        weights: vec![1.0 / m as f64; m],
        means: picks.iter().map(|&i| data.row(i).to_vec()).collect(),
        covariances: vec![global_cov.clone(); m],
        regularization: opts.regularization,
    };
    let mut iterations = 0;
    loop {
        let (resp, point_ll) = expectation(&model, data)?;
        let ll: f64 = point_ll.iter().sum();
        trace.max_normalization_error = trace
            .max_normalization_error
            .max(resp.max_normalization_error());
        let prev = trace.log_likelihood.last().copied();
        trace.log_likelihood.push(ll);
        if let Some(prev) = prev {
            let fresh_segment = trace.reseeds.last() == Some(&(trace.log_likelihood.len() - 1));
            if !fresh_segment && (ll - prev).abs() < opts.tol {
                trace.converged = true;
            }
        }
        if trace.converged || iterations == opts.max_iter {
            return Ok(RestartOutcome { model, resp });
        }

        let parts = maximization_parts(data, &resp, opts.regularization)?;
        let mut weights = Vec::with_capacity(m);
        let mut means = Vec::with_capacity(m);
        let mut covs = Vec::with_capacity(m);
        let mut degenerate = Vec::new();
        for (i, part) in parts.into_iter().enumerate() {
            match part.filter(|(_, _, c)| CholeskyFactor::new(c).is_some()) {
                Some((w, mu, c)) => {
                    weights.push(w);
                    means.push(mu);
                    covs.push(c);
                }
                None => {
                    degenerate.push(i);
                    weights.push(0.0);
                    means.push(model.means[i].clone());
                    covs.push(global_cov.clone());
                }
            }
        }
        if !degenerate.is_empty() {
            // re-seed at the points the current model explains worst
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| point_ll[a].total_cmp(&point_ll[b]).then(a.cmp(&b)));
            for (slot, &i) in degenerate.iter().enumerate() {
                means[i] = data.row(order[slot % n]).to_vec();
                weights[i] = 1.0 / m as f64;
            }
            trace.reseeds.push(trace.log_likelihood.len());
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        model = GmmModel {
            weights,
            means,
            covariances: covs,
            regularization: opts.regularization,
        };
        iterations += 1;
    }
}

/// Fit an `m`-component mixture, keeping the restart with the highest final log-likelihood.
pub fn fit_gmm(data: &FeatureMatrix, opts: &GmmOptions) -> Result<GmmFitResult> {
    let n = data.n_rows();
    if opts.m < 1 || opts.m > n {
        return Err(Error::invalid(format!(
            "component count {} must lie in 1..={n}",
            opts.m
        )));
    }
    if opts.restarts < 1 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    if !(opts.regularization >= 0.0) || !(opts.tol >= 0.0) {
        return Err(Error::invalid("tolerance and regularization must be non-negative"));
    }
    let global_cov = global_covariance(data, opts.regularization);

    let mut traces = Vec::with_capacity(opts.restarts);
    let mut best: Option<(usize, f64, RestartOutcome)> = None;
    for restart in 0..opts.restarts {
        let mut trace = RestartTrace {
            log_likelihood: Vec::new(),
            reseeds: Vec::new(),
            max_normalization_error: 0.0,
            converged: false,
            failure: None,
        };
        match run_restart(data, opts, restart, &global_cov, &mut trace) {
            Ok(outcome) => {
                let ll = *trace.log_likelihood.last().expect("at least one E-step");
                if best.as_ref().is_none_or(|(_, b, _)| ll > *b) {
                    best = Some((restart, ll, outcome));
                }
            }
            Err(e) => trace.failure = Some(e.to_string()),
        }
        traces.push(trace);
    }
    let Some((restart_index, _, outcome)) = best else {
        return Err(Error::Degenerate(format!(
            "all {} restarts failed: {}",
            opts.restarts,
            traces[0].failure.as_deref().unwrap_or("unknown")
        )));
    };
    Ok(GmmFitResult {
        model: outcome.model,
        responsibilities: outcome.resp,
        log_likelihood_trace: traces[restart_index].log_likelihood.clone(),
        converged: traces[restart_index].converged,
        restart_index,
        restarts: traces,
    })
}

/// Hard labels from responsibilities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HardAssignment {
    pub clustering: HardClustering,
    /// Some component won no point and was dropped from the labelling.
    pub compacted: bool,
}

/// Label each point with its most responsible component (ties to the lower index).
pub fn hard_assign(resp: &Responsibilities) -> HardAssignment {
    let labels: Vec<usize> = resp
        .rows()
        .map(|r| {
            let mut best = 0;
            for i in 1..r.len() {
                if r[i] > r[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    let (clustering, dropped) =
        HardClustering::compacted(&labels).expect("at least one responsibility row");
    HardAssignment {
        compacted: dropped || clustering.k() < resp.n_components(),
        clustering,
    }
}
