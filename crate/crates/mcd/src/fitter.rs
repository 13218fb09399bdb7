//! The MM estimation engine.
//!
//! Each iteration replaces the multinomial negative log-likelihood by a
//! quadratic surrogate built from the quarter-identity curvature bound (the
//! Böhning bound): with probabilities `Π` at the current iterate, the
//! *working responses* `H = Θ + 4(G − Π)` turn the update into a
//! least-squares problem `min ‖H − 1·m' − X·B_x·B_z'·Z'‖²`.
//!
//! A caution on that bound: `I/4` does not dominate the multinomial
//! curvature `diag(π) − ππ'` for every probability vector (at `π = (½, ½)`
//! the curvature reaches `½` along the contrast direction), so the surrogate
//! step can overshoot and is not a guaranteed descent step. In practice the
//! deviance decreases every iteration on multi-profile data (`K ≥ 4`); the
//! overshoot shows up for near-balanced binary data (`K = 2`), where the
//! update approaches twice the Newton step. The fit loop therefore never
//! accepts a proposal that raises the deviance — such a proposal ends the
//! fit at the last improving iterate — which keeps every recorded trace
//! nonincreasing and every returned fit no worse than any iterate it passed
//! through, at the cost of possibly stopping short of the optimum on data in
//! that regime.
//!
//! One iteration updates, in order:
//!
//! 1. intercepts — project the column means of `H` minus the bilinear part
//!    onto the column space of `W`;
//! 2. the bilinear term, by one of three interchangeable schemes:
//!    * `joint-gsvd` — the constrained low-rank problem solved exactly via an
//!      SVD in the `(X'X, Z'Z)` metrics,
//!    * `alternating` — a least-squares update of `B_x` for fixed `V`
//!      followed by an orthonormality-constrained update of `B_z`,
//!    * `dimension-wise` — cyclic rank-one updates, the only scheme that
//!      honors zero-masks on individual coefficients.
//!
//! The expensive design factors are computed once in [`DesignCache`] and
//! reused every iteration.

use std::io::Write;

use ndarray::{Array1, Array2, Axis};

use crate::design::{DesignSet, ProfileCoding, TermSet};
use crate::error::{Error, Result};
use crate::linalg::{svd, sym_inv_sqrt, truncate};
use crate::model::{
    deviance_from_theta, identify, probabilities, FitState, Observations, Parameters,
};

/// How the bilinear part is updated within each MM iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateScheme {
    /// Exact constrained low-rank solution of the surrogate via a
    /// metric-weighted SVD. The default.
    JointGsvd,
    /// Update `B_x` for fixed `V`, then `B_z` for fixed `U` under the
    /// orthonormality constraint.
    Alternating,
    /// Cyclic rank-one updates per latent dimension; supports zero-masks.
    DimensionWise,
}

impl std::str::FromStr for UpdateScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint-gsvd" => Ok(UpdateScheme::JointGsvd),
            "alternating" => Ok(UpdateScheme::Alternating),
            "dimension-wise" => Ok(UpdateScheme::DimensionWise),
            other => Err(Error::InvalidOptions(format!(
                "unknown update scheme {other:?}; expected joint-gsvd, alternating, or dimension-wise"
            ))),
        }
    }
}

/// 0/1 masks over `B_x` and `B_z`; a 0 pins the coefficient to zero.
/// Honored only by the dimension-wise scheme.
#[derive(Debug, Clone)]
pub struct Masks {
    pub b_x: Array2<f64>,
    pub b_z: Array2<f64>,
}

impl Masks {
    fn has_zeros(&self) -> bool {
        self.b_x.iter().chain(self.b_z.iter()).any(|&v| v == 0.0)
    }

    fn validate(&self, p: usize, q: usize, s: usize) -> Result<()> {
        if self.b_x.dim() != (p, s) || self.b_z.dim() != (q, s) {
            return Err(Error::dim(format!(
                "masks must be {p}×{s} over B_x and {q}×{s} over B_z, got {:?} and {:?}",
                self.b_x.dim(),
                self.b_z.dim()
            )));
        }
        if self.b_x.iter().chain(self.b_z.iter()).any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidOptions("mask entries must be 0 or 1".into()));
        }
        for j in 0..s {
            if self.b_x.column(j).iter().all(|&v| v == 0.0) {
                return Err(Error::UnidentifiableMask { dimension: j + 1, side: "B_x" });
            }
            if self.b_z.column(j).iter().all(|&v| v == 0.0) {
                return Err(Error::UnidentifiableMask { dimension: j + 1, side: "B_z" });
            }
        }
        Ok(())
    }
}

/// Knobs for [`fit`]. The defaults match ordinary use: up to 10000
/// iterations, stopping when the deviance decrease per iteration drops below
/// 1e−8.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Absolute deviance decrease below which the fit counts as converged.
    pub tolerance: f64,
    pub scheme: UpdateScheme,
    /// Zero-masks on the bilinear coefficients (dimension-wise scheme only).
    pub masks: Option<Masks>,
    /// Record the per-iteration deviance trace in the result.
    pub trace: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 10_000,
            tolerance: 1e-8,
            scheme: UpdateScheme::JointGsvd,
            masks: None,
            trace: false,
        }
    }
}

/// A fitted model: canonicalized parameters, the final state, and enough
/// design metadata to interpret and predict without keeping the data around.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Parameters,
    pub state: FitState,
    pub converged: bool,
    /// Per-iteration deviance (entry 0 is the starting value), when requested.
    pub trace: Option<Vec<f64>>,
    /// Intercepts per category, `m = W·b_w`.
    pub m: Array1<f64>,
    /// Category scores `V = Z·B_z` (`K×S`).
    pub v: Array2<f64>,
    pub x_labels: Vec<String>,
    pub coding: Option<ProfileCoding>,
    pub z_terms: Option<TermSet>,
    pub w_terms: Option<TermSet>,
}

impl FitResult {
    pub fn deviance(&self) -> f64 {
        self.state.deviance
    }

    /// Rank of the bilinear term.
    pub fn s(&self) -> usize {
        self.params.s()
    }

    /// Effective parameter count `T + S·(P + Q − S)` — the intercept weights
    /// plus the free parameters of a rank-`S` bilinear form.
    pub fn npar(&self) -> usize {
        let t = self.params.b_w.len();
        let p = self.params.b_x.nrows();
        let q = self.params.b_z.nrows();
        let s = self.params.s();
        t + s * (p + q - s)
    }

    pub fn aic(&self) -> f64 {
        self.deviance() + 2.0 * self.npar() as f64
    }

    /// Writes the deviance trace as tab-separated `iteration<TAB>deviance`
    /// lines. No-op when the trace was not recorded.
    pub fn write_trace(&self, out: &mut impl Write) -> std::io::Result<()> {
        if let Some(trace) = &self.trace {
            for (i, dev) in trace.iter().enumerate() {
                writeln!(out, "{i}\t{dev:.11e}")?;
            }
        }
        Ok(())
    }
}

/// Design factors that depend only on `X`, `Z`, `W` — computed once per fit
/// and reused by every iteration.
#[derive(Debug, Clone)]
pub struct DesignCache {
    /// `(X'X)^(−½)`, `P×P`.
    pub xtx_inv_sqrt: Array2<f64>,
    /// `(Z'Z)^(−½)`, `Q×Q`.
    pub ztz_inv_sqrt: Array2<f64>,
    /// `(X'X)^(−1)·X'`, `P×N`.
    pub xtx_inv_xt: Array2<f64>,
    /// `(Z'Z)^(−1)·Z'`, `Q×K`.
    pub ztz_inv_zt: Array2<f64>,
    /// `(W'W)^(−1)·W'`, `T×K`.
    pub wtw_inv_wt: Array2<f64>,
}

impl DesignCache {
    pub fn new(d: &DesignSet) -> Result<Self> {
        let (xtx_inv_sqrt, xtx_inv_xt) = if d.p() == 0 {
            (Array2::zeros((0, 0)), Array2::zeros((0, d.n())))
        } else {
            let inv_sqrt = sym_inv_sqrt(&d.x.t().dot(&d.x))?;
            let inv_xt = inv_sqrt.dot(&inv_sqrt).dot(&d.x.t());
            (inv_sqrt, inv_xt)
        };
        let ztz_inv_sqrt = sym_inv_sqrt(&d.z.t().dot(&d.z))?;
        let ztz_inv_zt = ztz_inv_sqrt.dot(&ztz_inv_sqrt).dot(&d.z.t());
        let wtw_inv_sqrt = sym_inv_sqrt(&d.w.t().dot(&d.w))
            .map_err(|_| Error::SingularNormalEquations)?;
        let wtw_inv_wt = wtw_inv_sqrt.dot(&wtw_inv_sqrt).dot(&d.w.t());
        Ok(DesignCache { xtx_inv_sqrt, ztz_inv_sqrt, xtx_inv_xt, ztz_inv_zt, wtw_inv_wt })
    }
}

/// Working responses `H = Θ + 4·(G − Π)` — the least-squares targets of the
/// majorizing surrogate at the current iterate.
pub fn working_responses(theta: &Array2<f64>, g: &Observations, pi: &Array2<f64>) -> Array2<f64> {
    let mut h = g.matrix() - pi;
    h.mapv_inplace(|v| 4.0 * v);
    h += theta;
    h
}

/// Intercept update: project the per-category means of `H` minus the current
/// bilinear part onto the column space of `W`.
pub fn update_intercepts(
    h: &Array2<f64>,
    d: &DesignSet,
    cache: &DesignCache,
    b_x: &Array2<f64>,
    b_z: &Array2<f64>,
) -> Array1<f64> {
    let means = if b_x.ncols() == 0 {
        h.mean_axis(Axis(0)).expect("H has rows")
    } else {
        let bilinear = d.x.dot(&b_x.dot(&b_z.t()).dot(&d.z.t()));
        (h - &bilinear).mean_axis(Axis(0)).expect("H has rows")
    };
    cache.wtw_inv_wt.dot(&means)
}

/// Joint bilinear update: the rank-`S` minimizer of
/// `‖H_c − X·B_x·B_z'·Z'‖²` from the SVD of
/// `(X'X)^(−½)·X'·H_c·Z·(Z'Z)^(−½)`.
///
/// The returned pair already satisfies the identification constraints:
/// `B_z'(Z'Z)B_z = I` and `U'U` diagonal nonincreasing.
pub fn update_bilinear(
    h_c: &Array2<f64>,
    d: &DesignSet,
    cache: &DesignCache,
    s: usize,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let max = d.p().min(d.q());
    if s > max {
        return Err(Error::RankOutOfRange { requested: s, maximum: max });
    }
    if s == 0 {
        return Ok((Array2::zeros((d.p(), 0)), Array2::zeros((d.q(), 0))));
    }
    let mid = d.x.t().dot(h_c).dot(&d.z);
    let weighted = cache.xtx_inv_sqrt.dot(&mid).dot(&cache.ztz_inv_sqrt);
    let factors = truncate(&svd(&weighted)?, s)?;
    let mut b_x = cache.xtx_inv_sqrt.dot(&factors.left);
    for (j, sv) in factors.singular_values.iter().enumerate() {
        b_x.column_mut(j).mapv_inplace(|v| v * sv);
    }
    let b_z = cache.ztz_inv_sqrt.dot(&factors.right);
    Ok((b_x, b_z))
}

/// Least-squares update of `B_x` for fixed category scores `V` (assumed to
/// have orthonormal columns): `B_x = (X'X)^(−1)·X'·H_c·V`.
pub fn update_bx_given_v(h_c: &Array2<f64>, cache: &DesignCache, v: &Array2<f64>) -> Array2<f64> {
    cache.xtx_inv_xt.dot(&h_c.dot(v))
}

/// Orthonormality-constrained update of `B_z` for fixed `U = X·B_x`: with the
/// SVD `(Z'Z)^(−½)·Z'·H_c'·U = P·Φ·Q'`, the trace-maximizing semi-orthogonal
/// factor is `B_z = (Z'Z)^(−½)·P·Q'`, which can only decrease the surrogate.
pub fn update_bz_given_u(
    h: &Array2<f64>,
    d: &DesignSet,
    cache: &DesignCache,
    u: &Array2<f64>,
    m: &Array1<f64>,
) -> Result<Array2<f64>> {
    let h_c = h - m;
    let target = d.z.t().dot(&h_c.t().dot(u));
    let weighted = cache.ztz_inv_sqrt.dot(&target);
    let factors = svd(&weighted)?;
    let b_z = cache.ztz_inv_sqrt.dot(&factors.left.dot(&factors.right.t()));
    Ok(b_z)
}

fn compute_theta(d: &DesignSet, m: &Array1<f64>, b_x: &Array2<f64>, b_z: &Array2<f64>) -> Array2<f64> {
    let coef = b_x.dot(&b_z.t()).dot(&d.z.t());
    let mut theta = d.x.dot(&coef);
    theta += m;
    theta
}

/// One cyclic pass of rank-one updates over the latent dimensions.
///
/// Maintains the residual `E = H_c − U·V'` across dimensions; masked entries
/// are zeroed after each least-squares solve, and a dimension whose score
/// vector has collapsed to zero is skipped (leaving it unchanged keeps the
/// surrogate from increasing).
fn dimension_wise_sweep(
    h_c: &Array2<f64>,
    d: &DesignSet,
    cache: &DesignCache,
    b_x: &mut Array2<f64>,
    b_z: &mut Array2<f64>,
    masks: Option<&Masks>,
) {
    let s = b_x.ncols();
    let mut u = d.x.dot(&*b_x);
    let mut v = d.z.dot(&*b_z);
    let mut e = h_c - &u.dot(&v.t());
    let (n, k) = e.dim();

    for j in 0..s {
        let v_j = v.column(j).to_owned();
        let denom_v = v_j.dot(&v_j);
        if denom_v > f64::MIN_POSITIVE {
            // R_j·v_j = E·v_j + u_j·(v_j'v_j), where R_j restores dimension j.
            let mut rv = e.dot(&v_j);
            rv.scaled_add(denom_v, &u.column(j));
            let mut bx_j = cache.xtx_inv_xt.dot(&rv);
            bx_j.mapv_inplace(|val| val / denom_v);
            if let Some(m) = masks {
                for (p, b) in bx_j.iter_mut().enumerate() {
                    if m.b_x[(p, j)] == 0.0 {
                        *b = 0.0;
                    }
                }
            }
            let u_new = d.x.dot(&bx_j);
            for i in 0..n {
                let du = u[(i, j)] - u_new[i];
                if du != 0.0 {
                    for c in 0..k {
                        e[(i, c)] += du * v_j[c];
                    }
                }
            }
            b_x.column_mut(j).assign(&bx_j);
            u.column_mut(j).assign(&u_new);
        }

        let u_j = u.column(j).to_owned();
        let denom_u = u_j.dot(&u_j);
        if denom_u > f64::MIN_POSITIVE {
            let mut ru = e.t().dot(&u_j);
            ru.scaled_add(denom_u, &v.column(j));
            let mut bz_j = cache.ztz_inv_zt.dot(&ru);
            bz_j.mapv_inplace(|val| val / denom_u);
            if let Some(m) = masks {
                for (q, b) in bz_j.iter_mut().enumerate() {
                    if m.b_z[(q, j)] == 0.0 {
                        *b = 0.0;
                    }
                }
            }
            let v_new = d.z.dot(&bz_j);
            for i in 0..n {
                let ui = u_j[i];
                if ui != 0.0 {
                    for c in 0..k {
                        e[(i, c)] += ui * (v[(c, j)] - v_new[c]);
                    }
                }
            }
            b_z.column_mut(j).assign(&bz_j);
            v.column_mut(j).assign(&v_new);
        }
    }
}

/// One full MM iteration from `params`/`theta`: intercepts first, then the
/// bilinear update under the chosen scheme.
fn mm_iteration(
    g: &Observations,
    d: &DesignSet,
    cache: &DesignCache,
    scheme: UpdateScheme,
    masks: Option<&Masks>,
    params: &Parameters,
    theta: &Array2<f64>,
) -> Result<(Parameters, Array2<f64>)> {
    let pi = probabilities(theta);
    let h = working_responses(theta, g, &pi);

    let b_w = update_intercepts(&h, d, cache, &params.b_x, &params.b_z);
    let m = d.w.dot(&b_w);

    let s = params.s();
    let (b_x, b_z) = if s == 0 {
        (params.b_x.clone(), params.b_z.clone())
    } else {
        let h_c = &h - &m;
        match scheme {
            UpdateScheme::JointGsvd => update_bilinear(&h_c, d, cache, s)?,
            UpdateScheme::Alternating => {
                let v = d.z.dot(&params.b_z);
                let b_x = update_bx_given_v(&h_c, cache, &v);
                let u = d.x.dot(&b_x);
                let b_z = update_bz_given_u(&h, d, cache, &u, &m)?;
                (b_x, b_z)
            }
            UpdateScheme::DimensionWise => {
                let mut b_x = params.b_x.clone();
                let mut b_z = params.b_z.clone();
                dimension_wise_sweep(&h_c, d, cache, &mut b_x, &mut b_z, masks);
                (b_x, b_z)
            }
        }
    };

    let theta_new = compute_theta(d, &m, &b_x, &b_z);
    Ok((Parameters { b_w, b_x, b_z }, theta_new))
}

/// Deterministic starting point: intercepts fitted to `H = 4·(G − 1/K)` with
/// no bilinear part, then one joint bilinear update on the centered `H`.
fn initialize(
    g: &Observations,
    d: &DesignSet,
    cache: &DesignCache,
    s: usize,
    masks: Option<&Masks>,
) -> Result<(Parameters, Array2<f64>)> {
    let k = g.k() as f64;
    let h0 = g.matrix().mapv(|v| 4.0 * (v - 1.0 / k));
    let empty_x = Array2::zeros((d.p(), 0));
    let empty_z = Array2::zeros((d.q(), 0));
    let b_w = update_intercepts(&h0, d, cache, &empty_x, &empty_z);
    let m = d.w.dot(&b_w);

    let (mut b_x, mut b_z) = if s == 0 {
        (empty_x, empty_z)
    } else {
        let h0_c = &h0 - &m;
        update_bilinear(&h0_c, d, cache, s)?
    };

    if let Some(mask) = masks {
        b_x.zip_mut_with(&mask.b_x, |b, &m| *b *= m);
        b_z.zip_mut_with(&mask.b_z, |b, &m| *b *= m);
        // A mask can zero out an entire starting column; reseed its free
        // entries so the rank-one updates have something to work with.
        for j in 0..s {
            if b_x.column(j).iter().all(|&v| v == 0.0) {
                for (p, b) in b_x.column_mut(j).iter_mut().enumerate() {
                    if mask.b_x[(p, j)] == 1.0 {
                        *b = 1.0;
                    }
                }
            }
            if b_z.column(j).iter().all(|&v| v == 0.0) {
                for (q, b) in b_z.column_mut(j).iter_mut().enumerate() {
                    if mask.b_z[(q, j)] == 1.0 {
                        *b = 1.0;
                    }
                }
            }
        }
    }

    let theta = compute_theta(d, &m, &b_x, &b_z);
    Ok((Parameters { b_w, b_x, b_z }, theta))
}

/// Per-dimension normalization for masked fits, where the full canonical form
/// would overwrite pinned zeros: scale each score column to unit norm and fix
/// its sign, leaving zero patterns intact.
fn normalize_masked(mut params: Parameters, d: &DesignSet) -> Parameters {
    for j in 0..params.s() {
        let v_j = d.z.dot(&params.b_z.column(j));
        let norm = v_j.dot(&v_j).sqrt();
        if norm > f64::MIN_POSITIVE {
            params.b_z.column_mut(j).mapv_inplace(|b| b / norm);
            params.b_x.column_mut(j).mapv_inplace(|b| b * norm);
        }
        let v_j = d.z.dot(&params.b_z.column(j));
        let scale = v_j.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if let Some(&lead) = v_j.iter().find(|x| x.abs() > 1e-12 * scale) {
            if lead < 0.0 {
                params.b_z.column_mut(j).mapv_inplace(|b| -b);
                params.b_x.column_mut(j).mapv_inplace(|b| -b);
            }
        }
    }
    params
}

fn validate(g: &Observations, d: &DesignSet, s: usize, opts: &FitOptions) -> Result<()> {
    if g.n() != d.n() || g.k() != d.k() {
        return Err(Error::dim(format!(
            "observations are {}×{} but the design implies {}×{}",
            g.n(),
            g.k(),
            d.n(),
            d.k()
        )));
    }
    let max = d.p().min(d.q());
    if s > max {
        return Err(Error::RankOutOfRange { requested: s, maximum: max });
    }
    if opts.max_iterations < 1 {
        return Err(Error::InvalidOptions("max_iterations must be at least 1".into()));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidOptions("tolerance must be positive".into()));
    }
    if let Some(masks) = &opts.masks {
        if opts.scheme != UpdateScheme::DimensionWise {
            return Err(Error::InvalidOptions(
                "constraint masks are honored only by the dimension-wise scheme".into(),
            ));
        }
        masks.validate(d.p(), d.q(), s)?;
    }
    Ok(())
}

/// Fits the model by MM iteration until the deviance decrease falls below
/// `opts.tolerance` or `opts.max_iterations` is reached. A proposal that
/// would *raise* the deviance is discarded and ends the fit at the previous
/// iterate, so the result is never worse than any iterate along the way.
///
/// The returned parameters are canonicalized (see [`identify`]); masked fits
/// get a per-dimension normalization instead so pinned zeros survive.
pub fn fit(g: &Observations, d: &DesignSet, s: usize, opts: &FitOptions) -> Result<FitResult> {
    validate(g, d, s, opts)?;
    let cache = DesignCache::new(d)?;
    let masks = opts.masks.as_ref();

    let (mut params, mut theta) = initialize(g, d, &cache, s, masks)?;
    let mut dev = deviance_from_theta(g, &theta);
    if !dev.is_finite() {
        return Err(Error::Diverged { iteration: 0 });
    }
    let mut trace = opts.trace.then(|| vec![dev]);

    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=opts.max_iterations {
        let (next_params, next_theta) =
            mm_iteration(g, d, &cache, opts.scheme, masks, &params, &theta)?;
        let next_dev = deviance_from_theta(g, &next_theta);
        if !next_dev.is_finite() {
            return Err(Error::Diverged { iteration: t });
        }
        // A proposal that makes the deviance worse is discarded outright: the
        // fit ends at the last improving iterate rather than stepping uphill.
        if next_dev > dev {
            converged = true;
            break;
        }
        params = next_params;
        theta = next_theta;
        if let Some(trace) = trace.as_mut() {
            trace.push(next_dev);
        }
        iterations = t;
        let decrease = dev - next_dev;
        dev = next_dev;
        if decrease < opts.tolerance {
            converged = true;
            break;
        }
    }

    let keep_zeros = masks.is_some_and(Masks::has_zeros);
    if s > 0 {
        params = if keep_zeros { normalize_masked(params, d) } else { identify(&params, d)? };
        theta = compute_theta(d, &d.w.dot(&params.b_w), &params.b_x, &params.b_z);
    }
    let pi = probabilities(&theta);
    let deviance = deviance_from_theta(g, &theta);
    if !deviance.is_finite() {
        return Err(Error::Diverged { iteration: iterations });
    }

    Ok(FitResult {
        m: d.w.dot(&params.b_w),
        v: d.z.dot(&params.b_z),
        params,
        state: FitState { theta, pi, deviance, iterations },
        converged,
        trace,
        x_labels: d.x_labels.clone(),
        coding: d.coding,
        z_terms: d.z_terms.clone(),
        w_terms: d.w_terms.clone(),
    })
}

/// [`fit`] with the dimension-wise scheme forced on, the only scheme that
/// honors `opts.masks`.
pub fn fit_dimensionwise(
    g: &Observations,
    d: &DesignSet,
    s: usize,
    opts: &FitOptions,
) -> Result<FitResult> {
    let opts = FitOptions { scheme: UpdateScheme::DimensionWise, ..opts.clone() };
    fit(g, d, s, &opts)
}

/// Wraps externally supplied parameters in a [`FitResult`] (no fitting):
/// computes the state at those parameters so the interpretation and
/// prediction helpers can be used on them.
pub fn evaluate(g: &Observations, d: &DesignSet, params: &Parameters) -> Result<FitResult> {
    if g.n() != d.n() || g.k() != d.k() {
        return Err(Error::dim(format!(
            "observations are {}×{} but the design implies {}×{}",
            g.n(),
            g.k(),
            d.n(),
            d.k()
        )));
    }
    params.check_dims(d)?;
    let theta = crate::model::linear_predictor(params, d)?;
    let pi = probabilities(&theta);
    let deviance = crate::model::deviance(g, &pi)?;
    Ok(FitResult {
        m: d.w.dot(&params.b_w),
        v: d.z.dot(&params.b_z),
        params: params.clone(),
        state: FitState { theta, pi, deviance, iterations: 0 },
        converged: true,
        trace: None,
        x_labels: d.x_labels.clone(),
        coding: d.coding,
        z_terms: d.z_terms.clone(),
        w_terms: d.w_terms.clone(),
    })
}
