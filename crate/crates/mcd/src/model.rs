//! Model state: parameters, observations, probabilities, deviance, and
//! identification.
//!
//! The linear predictor is `Θ = 1·(W·b_w)' + X·B_x·B_z'·Z'` and probabilities
//! follow by a row-wise softmax. Parameters are only identified up to an
//! invertible transform `(B_x·T, B_z·T^(−T))` of the bilinear factors;
//! [`identify`] maps any such pair to the canonical representative with
//! `V'V = I`, `U'U` diagonal nonincreasing, and a deterministic sign per
//! dimension.

use ndarray::{Array1, Array2};

use crate::design::DesignSet;
use crate::error::{Error, Result};
use crate::linalg::{svd, sym_power, truncate};

/// The free parameters of one model: intercept weights `b_w` (length `T`),
/// predictor weights `B_x` (`P×S`), and response-structure weights `B_z`
/// (`Q×S`).
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub b_w: Array1<f64>,
    pub b_x: Array2<f64>,
    pub b_z: Array2<f64>,
}

impl Parameters {
    /// Rank of the bilinear term.
    pub fn s(&self) -> usize {
        self.b_x.ncols()
    }

    pub(crate) fn check_dims(&self, d: &DesignSet) -> Result<()> {
        if self.b_w.len() != d.t() {
            return Err(Error::dim(format!(
                "b_w has {} entries but W has {} columns",
                self.b_w.len(),
                d.t()
            )));
        }
        if self.b_x.nrows() != d.p() {
            return Err(Error::dim(format!(
                "B_x has {} rows but X has {} columns",
                self.b_x.nrows(),
                d.p()
            )));
        }
        if self.b_z.nrows() != d.q() {
            return Err(Error::dim(format!(
                "B_z has {} rows but Z has {} columns",
                self.b_z.nrows(),
                d.q()
            )));
        }
        if self.b_x.ncols() != self.b_z.ncols() {
            return Err(Error::dim(format!(
                "B_x has {} columns but B_z has {}",
                self.b_x.ncols(),
                self.b_z.ncols()
            )));
        }
        Ok(())
    }
}

/// Observed categories as an `N×K` indicator matrix with exactly one 1 per
/// row. The matrix form feeds the fitting algebra; the index form feeds the
/// likelihood.
#[derive(Debug, Clone)]
pub struct Observations {
    g: Array2<f64>,
    observed: Vec<usize>,
}

impl Observations {
    pub fn new(g: Array2<f64>) -> Result<Self> {
        let mut observed = Vec::with_capacity(g.nrows());
        for (i, row) in g.rows().into_iter().enumerate() {
            let mut hit = None;
            for (k, &v) in row.iter().enumerate() {
                if v == 1.0 {
                    if hit.replace(k).is_some() {
                        return Err(Error::InvalidIndicator { row: i });
                    }
                } else if v != 0.0 {
                    return Err(Error::InvalidIndicator { row: i });
                }
            }
            observed.push(hit.ok_or(Error::InvalidIndicator { row: i })?);
        }
        Ok(Observations { g, observed })
    }

    /// Builds the indicator matrix from per-row category indices.
    pub fn from_indices(indices: &[usize], k: usize) -> Result<Self> {
        let mut g = Array2::zeros((indices.len(), k));
        for (i, &idx) in indices.iter().enumerate() {
            if idx >= k {
                return Err(Error::dim(format!("row {i} observes category {idx} but K = {k}")));
            }
            g[(i, idx)] = 1.0;
        }
        Ok(Observations { g, observed: indices.to_vec() })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.g
    }

    /// Observed category index per row.
    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn k(&self) -> usize {
        self.g.ncols()
    }

    /// Keeps the given rows (with repetition), as drawn by a case bootstrap.
    pub fn resample(&self, rows: &[usize]) -> Result<Self> {
        let indices: Vec<usize> = rows.iter().map(|&i| self.observed[i]).collect();
        Observations::from_indices(&indices, self.k())
    }
}

/// A snapshot of the model at one parameter value: the linear predictor, the
/// probabilities, the deviance, and how many iterations produced it.
#[derive(Debug, Clone)]
pub struct FitState {
    pub theta: Array2<f64>,
    pub pi: Array2<f64>,
    pub deviance: f64,
    pub iterations: usize,
}

/// `Θ = 1·(W·b_w)' + X·B_x·B_z'·Z'`.
pub fn linear_predictor(params: &Parameters, d: &DesignSet) -> Result<Array2<f64>> {
    params.check_dims(d)?;
    let m = d.w.dot(&params.b_w);
    let a = params.b_x.dot(&params.b_z.t());
    let coef = a.dot(&d.z.t());
    let mut theta = d.x.dot(&coef);
    theta += &m;
    Ok(theta)
}

/// Row-wise softmax, computed with row-max subtraction so large `|θ|` cannot
/// overflow.
pub fn probabilities(theta: &Array2<f64>) -> Array2<f64> {
    let mut pi = theta.to_owned();
    for mut row in pi.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    pi
}

/// Deviance `−2·Σ_ik g_ik·log π_ik` of given probabilities.
///
/// Fails with [`Error::ProbabilityUnderflow`] when an observed cell's
/// probability falls below the smallest positive normal number — at that
/// point the log-likelihood is numerically meaningless and the model has
/// effectively diverged.
pub fn deviance(g: &Observations, pi: &Array2<f64>) -> Result<f64> {
    if pi.dim() != (g.n(), g.k()) {
        return Err(Error::dim(format!(
            "probabilities are {}×{} but observations are {}×{}",
            pi.nrows(),
            pi.ncols(),
            g.n(),
            g.k()
        )));
    }
    let mut log_lik = 0.0;
    for (i, &k) in g.observed().iter().enumerate() {
        let p = pi[(i, k)];
        if !(p >= f64::MIN_POSITIVE) {
            return Err(Error::ProbabilityUnderflow { row: i });
        }
        log_lik += p.ln();
    }
    Ok(-2.0 * log_lik)
}

/// Deviance straight from the linear predictor via log-sum-exp; returns a
/// non-finite value (rather than an error) when `θ` is non-finite, so the
/// fitter can attribute divergence to an iteration.
pub(crate) fn deviance_from_theta(g: &Observations, theta: &Array2<f64>) -> f64 {
    let mut log_lik = 0.0;
    for (i, &k) in g.observed().iter().enumerate() {
        let row = theta.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        log_lik += row[k] - lse;
    }
    -2.0 * log_lik
}

/// Canonicalizes parameters without changing the linear predictor.
///
/// Among all `(B_x·T, B_z·T^(−T))` giving the same `Θ`, returns the
/// representative with `V = Z·B_z` orthonormal, `U = X·B_x` having a diagonal
/// `U'U` with nonincreasing diagonal, and each column of `V` flipped so its
/// first nonzero entry (scanning rows from the top) is positive. Idempotent.
pub fn identify(params: &Parameters, d: &DesignSet) -> Result<Parameters> {
    params.check_dims(d)?;
    let s = params.s();
    if s == 0 {
        return Ok(params.clone());
    }

    let xtx = d.x.t().dot(&d.x);
    let ztz = d.z.t().dot(&d.z);
    let mx = sym_power(&xtx, 0.5)?.dot(&params.b_x);
    let mz = sym_power(&ztz, 0.5)?.dot(&params.b_z);
    let product = mx.dot(&mz.t());

    // rank(product) ≤ S, so the S leading singular triplets reproduce it
    // exactly and Θ is preserved.
    let factors = truncate(&svd(&product)?, s)?;
    let inv_x = sym_power(&xtx, -0.5)?;
    let inv_z = sym_power(&ztz, -0.5)?;
    let mut b_x = inv_x.dot(&factors.left);
    for (j, sv) in factors.singular_values.iter().enumerate() {
        b_x.column_mut(j).mapv_inplace(|v| v * sv);
    }
    let mut b_z = inv_z.dot(&factors.right);

    // Deterministic sign per dimension: first nonzero entry of each V column
    // positive, flipping the paired B_x column with it.
    let v = d.z.dot(&b_z);
    for j in 0..s {
        let col = v.column(j);
        let scale = col.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let tol = 1e-12 * scale;
        if let Some(&lead) = col.iter().find(|x| x.abs() > tol) {
            if lead < 0.0 {
                b_z.column_mut(j).mapv_inplace(|x| -x);
                b_x.column_mut(j).mapv_inplace(|x| -x);
            }
        }
    }

    Ok(Parameters { b_w: params.b_w.clone(), b_x, b_z })
}
