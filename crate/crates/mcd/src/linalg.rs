//! Dense linear-algebra kernel: SVD, symmetric matrix powers, and rank probes.
//!
//! Everything here is a pure function over `ndarray` matrices, delegating the
//! decompositions to nalgebra. Factors come back in a deterministic form —
//! singular values sorted descending, each left singular vector's
//! largest-magnitude entry made positive — so downstream results are
//! reproducible across runs and platforms.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

use crate::error::{Error, Result};

/// Relative eigenvalue threshold below which a symmetric matrix counts as
/// singular: eigenvalues ≤ `RANK_TOL · λ_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Relative asymmetry tolerated before a matrix is rejected as non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// A thin singular value decomposition `A = left · diag(σ) · right'`.
///
/// `left` is `m×r` and `right` is `n×r` with orthonormal columns, where
/// `r = min(m, n)`; `singular_values` holds `σ` sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub left: Array2<f64>,
    pub singular_values: Vec<f64>,
    pub right: Array2<f64>,
}

impl SvdFactors {
    /// Number of singular values carried by the factorization.
    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }

    /// Reassembles `left · diag(σ) · right'`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let (m, r) = (self.left.nrows(), self.len());
        let n = self.right.nrows();
        let mut scaled = Array2::zeros((m, r));
        for j in 0..r {
            let sv = self.singular_values[j];
            for i in 0..m {
                scaled[(i, j)] = self.left[(i, j)] * sv;
            }
        }
        let mut out = Array2::zeros((m, n));
        ndarray::linalg::general_mat_mul(1.0, &scaled, &self.right.t(), 0.0, &mut out);
        out
    }
}

fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_row_iterator(a.nrows(), a.ncols(), a.iter().copied())
}

fn to_nd(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

fn check_finite(a: &Array2<f64>) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidOptions("matrix contains non-finite entries".into()))
    }
}

/// Thin SVD with deterministic ordering and signs.
///
/// Singular values come back sorted descending. Signs are fixed by making the
/// largest-magnitude entry of each left singular vector positive (first such
/// entry on ties), flipping the paired right vector along with it.
pub fn svd(a: &Array2<f64>) -> Result<SvdFactors> {
    check_finite(a)?;
    let m = to_na(a);
    let svd = nalgebra::linalg::SVD::try_new(m, true, true, f64::EPSILON, 100_000)
        .ok_or(Error::ConvergenceFailure)?;
    let mut u = svd.u.expect("left factors requested");
    let mut v_t = svd.v_t.expect("right factors requested");
    let s: DVector<f64> = svd.singular_values;
    debug_assert!(s.iter().zip(s.iter().skip(1)).all(|(a, b)| a >= b));

    for j in 0..s.len() {
        let mut pivot = 0;
        let mut best = -1.0;
        for i in 0..u.nrows() {
            let mag = u[(i, j)].abs();
            if mag > best {
                best = mag;
                pivot = i;
            }
        }
        if u[(pivot, j)] < 0.0 {
            for i in 0..u.nrows() {
                u[(i, j)] = -u[(i, j)];
            }
            for i in 0..v_t.ncols() {
                v_t[(j, i)] = -v_t[(j, i)];
            }
        }
    }

    Ok(SvdFactors {
        left: to_nd(&u),
        singular_values: s.iter().copied().collect(),
        right: to_nd(&v_t.transpose()),
    })
}

/// Keeps the `s` leading singular triplets.
///
/// Ties among equal singular values keep their original column order, so the
/// first of a tied pair survives.
pub fn truncate(f: &SvdFactors, s: usize) -> Result<SvdFactors> {
    if s < 1 || s > f.len() {
        return Err(Error::RankOutOfRange { requested: s, maximum: f.len() });
    }
    Ok(SvdFactors {
        left: f.left.slice(ndarray::s![.., ..s]).to_owned(),
        singular_values: f.singular_values[..s].to_vec(),
        right: f.right.slice(ndarray::s![.., ..s]).to_owned(),
    })
}

/// Symmetric-positive-definite matrix power `M^p` via eigendecomposition.
///
/// Shared implementation for the inverse square root (`p = -½`) and square
/// root (`p = ½`). Rejects asymmetric input and eigenvalues at or below the
/// relative rank tolerance.
pub(crate) fn sym_power(m: &Array2<f64>, p: f64) -> Result<Array2<f64>> {
    check_finite(m)?;
    if m.nrows() != m.ncols() {
        return Err(Error::dim(format!("sym_power needs a square matrix, got {}×{}", m.nrows(), m.ncols())));
    }
    let mut max_abs = 0.0f64;
    let mut asym = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            max_abs = max_abs.max(m[(i, j)].abs());
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    let sym_tol = SYMMETRY_TOL * max_abs;
    if asym > sym_tol {
        return Err(Error::NotSymmetric { asymmetry: asym, tolerance: sym_tol });
    }

    // Work on the symmetrized matrix so tiny asymmetries cannot leak through.
    let n = m.nrows();
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let eig = nalgebra::linalg::SymmetricEigen::try_new(sym, f64::EPSILON, 100_000)
        .ok_or(Error::ConvergenceFailure)?;

    let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lambda_max <= 0.0 {
        return Err(Error::NotPositiveDefinite { eigenvalue: lambda_min, tolerance: 0.0 });
    }
    let rank_tol = RANK_TOL * lambda_max;
    if lambda_min <= rank_tol {
        return Err(Error::NotPositiveDefinite { eigenvalue: lambda_min, tolerance: rank_tol });
    }

    let q = &eig.eigenvectors;
    let powered = DVector::from_iterator(n, eig.eigenvalues.iter().map(|l| l.powf(p)));
    let result = q * DMatrix::from_diagonal(&powered) * q.transpose();
    // Symmetrize the product; rounding makes it asymmetric in the last ulps.
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        0.5 * (result[(i, j)] + result[(j, i)])
    }))
}

/// Inverse square root `R = M^(−½)` of a symmetric positive-definite matrix,
/// satisfying `R·M·R = I`.
pub fn sym_inv_sqrt(m: &Array2<f64>) -> Result<Array2<f64>> {
    sym_power(m, -0.5)
}

/// Indices of columns that are (numerically) linear combinations of the
/// columns before them, found by modified Gram–Schmidt.
///
/// A column whose residual norm after projecting out the accepted columns
/// falls at or below `1e−10 ·` (largest column norm) is flagged dependent.
pub(crate) fn dependent_columns(a: &Array2<f64>) -> Vec<usize> {
    let (n, p) = a.dim();
    let norms: Vec<f64> = (0..p).map(|j| a.column(j).dot(&a.column(j)).sqrt()).collect();
    let scale = norms.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    let tol = 1e-10 * scale;

    let mut basis: Vec<ndarray::Array1<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..p {
        let mut r = a.column(j).to_owned();
        for b in &basis {
            let c = r.dot(b);
            r.scaled_add(-c, b);
        }
        // A second pass keeps the basis orthogonal to working precision.
        for b in &basis {
            let c = r.dot(b);
            r.scaled_add(-c, b);
        }
        let norm = r.dot(&r).sqrt();
        if norm <= tol {
            dependent.push(j);
        } else {
            basis.push(r.mapv(|v| v / norm));
        }
        debug_assert!(basis.len() <= n);
    }
    dependent
}
