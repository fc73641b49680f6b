//! Kernel functions and dense Gram matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::FeatureMatrix;

/// A positive-(semi)definite-ish similarity `K(x, y)`.
///
/// Only `Rbf` is guaranteed positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(-||x - y||^2 / (2 sigma^2))`
    Rbf { sigma: f64 },
    /// `(x.y + gamma)^degree`
    Polynomial { gamma: f64, degree: u32 },
    /// `tanh(gamma * x.y + theta)`
    Sigmoid { gamma: f64, theta: f64 },
}

impl KernelSpec {
    /// Plain inner product, i.e. ordinary K-Means in input space.
    pub const LINEAR: KernelSpec = KernelSpec::Polynomial {
        gamma: 0.0,
        degree: 1,
    };

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { sigma } if !(sigma.is_finite() && sigma > 0.0) => Err(
                Error::invalid(format!("rbf sigma must be finite and positive, got {sigma}")),
            ),
            KernelSpec::Polynomial { gamma, degree } => {
                if degree < 1 {
                    Err(Error::invalid("polynomial degree must be at least 1"))
                } else if !gamma.is_finite() {
                    Err(Error::invalid("polynomial gamma must be finite"))
                } else {
                    Ok(())
                }
            }
            KernelSpec::Sigmoid { gamma, theta } if !(gamma.is_finite() && theta.is_finite()) => {
                Err(Error::invalid("sigmoid parameters must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// RBF whose width is the median pairwise Euclidean distance between rows.
    pub fn rbf_median(points: &FeatureMatrix) -> Result<KernelSpec> {
        let sigma = median_pairwise_distance(points)?;
        if !(sigma > 0.0) {
            return Err(Error::Degenerate(
                "median pairwise distance is zero; choose sigma explicitly".into(),
            ));
        }
        Ok(KernelSpec::Rbf { sigma })
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Evaluate `spec` on one pair of vectors.
pub fn kernel_eval(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    spec.validate()?;
    Ok(eval_unchecked(x, y, spec))
}

#[inline]
fn eval_unchecked(x: &[f64], y: &[f64], spec: &KernelSpec) -> f64 {
    match *spec {
        KernelSpec::Rbf { sigma } => (-squared_distance(x, y) / (2.0 * sigma * sigma)).exp(),
        KernelSpec::Polynomial { gamma, degree } => (dot(x, y) + gamma).powi(degree as i32),
        KernelSpec::Sigmoid { gamma, theta } => (gamma * dot(x, y) + theta).tanh(),
    }
}

/// Dense symmetric `n x n` matrix of kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    entries: Vec<f64>,
    spec: KernelSpec,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }
}

/// Gram matrix of every pair of rows. The upper triangle is computed and mirrored.
pub fn gram_matrix(points: &FeatureMatrix, spec: &KernelSpec) -> Result<KernelMatrix> {
    spec.validate()?;
    let n = points.n_rows();
    if n == 0 {
        return Err(Error::invalid("gram matrix of zero points"));
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let xi = points.row(i);
        for j in i..n {
            let v = eval_unchecked(xi, points.row(j), spec);
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(KernelMatrix {
        n,
        entries,
        spec: *spec,
    })
}

/// Median of the `n(n-1)/2` pairwise Euclidean distances.
pub fn median_pairwise_distance(points: &FeatureMatrix) -> Result<f64> {
    let n = points.n_rows();
    if n < 2 {
        return Err(Error::invalid("median distance needs at least two points"));
    }
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(squared_distance(points.row(i), points.row(j)).sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    Ok(if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    })
}
