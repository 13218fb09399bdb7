//! Shared machinery for the integration suites: an independent Newton fitter
//! for multinomial logistic regression (used as an oracle), random problem
//! generators, and a category sampler.
//!
//! Everything here is deterministic given the seed arguments, so suite
//! failures reproduce exactly.

use mcd::design::{DesignSet, ProfileCoding, Term, TermSet};
use mcd::model::Observations;
use mcd::ndarray::{Array1, Array2};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Draws one category index from a probability row by inverse CDF.
pub fn sample_category(probs: &[f64], rng: &mut StdRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Row-wise softmax with the usual max-shift stabilization.
pub fn softmax_rows(theta: &Array2<f64>) -> Array2<f64> {
    let mut pi = theta.clone();
    for mut row in pi.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|t| (t - max).exp());
        let total = row.sum();
        row.mapv_inplace(|e| e / total);
    }
    pi
}

// ---------------------------------------------------------------------------
// Newton oracle for multinomial logistic regression
// ---------------------------------------------------------------------------

/// A converged maximum-likelihood fit of the baseline-category multinomial
/// logistic regression θ_ik = m_k + x_i'a_k (category K−1 as baseline).
pub struct NewtonFit {
    pub deviance: f64,
    pub probabilities: Array2<f64>,
}

/// Fits multinomial logistic regression by full Newton iteration with step
/// halving. Independent of the library's MM machinery: its own
/// parameterization, gradient, and Hessian, solved with LU decompositions.
///
/// Returns `None` when the optimum is not attained cleanly (singular Hessian,
/// runaway coefficients from separated data, or no convergence in 100
/// steps) so callers can discard the instance and draw another.
pub fn newton_multinomial_logistic(
    y: &[usize],
    x: &Array2<f64>,
    k: usize,
) -> Option<NewtonFit> {
    let n = y.len();
    let p = x.ncols();
    assert_eq!(n, x.nrows());
    let block = p + 1; // one intercept plus P slopes per non-baseline category
    let dim = (k - 1) * block;
    let mut beta = DVector::<f64>::zeros(dim);

    // u_i = (1, x_i): the per-observation design row shared by every block.
    let u = |i: usize, a: usize| if a == 0 { 1.0 } else { x[(i, a - 1)] };

    let theta_of = |beta: &DVector<f64>| -> Array2<f64> {
        let mut theta = Array2::zeros((n, k));
        for i in 0..n {
            for j in 0..k - 1 {
                let mut t = 0.0;
                for a in 0..block {
                    t += beta[j * block + a] * u(i, a);
                }
                theta[(i, j)] = t;
            }
        }
        theta
    };
    let nll_of = |beta: &DVector<f64>| -> f64 {
        let theta = theta_of(beta);
        let mut nll = 0.0;
        for i in 0..n {
            let row = theta.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&t| (t - max).exp()).sum::<f64>().ln();
            nll += lse - theta[(i, y[i])];
        }
        nll
    };

    let mut nll = nll_of(&beta);
    for _ in 0..100 {
        let pi = softmax_rows(&theta_of(&beta));

        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            for j in 0..k - 1 {
                let resid = pi[(i, j)] - if y[i] == j { 1.0 } else { 0.0 };
                for a in 0..block {
                    grad[j * block + a] += resid * u(i, a);
                }
                for l in 0..k - 1 {
                    let wgt = pi[(i, j)] * (if j == l { 1.0 } else { 0.0 } - pi[(i, l)]);
                    for a in 0..block {
                        for b in 0..block {
                            hess[(j * block + a, l * block + b)] += wgt * u(i, a) * u(i, b);
                        }
                    }
                }
            }
        }

        if grad.amax() < 1e-10 {
            let probabilities = softmax_rows(&theta_of(&beta));
            return Some(NewtonFit { deviance: 2.0 * nll, probabilities });
        }

        let step = hess.lu().solve(&(-&grad))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &beta + lambda * &step;
            let cand_nll = nll_of(&candidate);
            if cand_nll <= nll + 1e-12 {
                beta = candidate;
                nll = cand_nll;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted || beta.amax() > 50.0 {
            return None;
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Random profile problems
// ---------------------------------------------------------------------------

/// One synthetic dataset plus the design it was generated under.
pub struct Problem {
    pub g: Observations,
    pub d: DesignSet,
    pub s: usize,
}

/// Knobs for [`random_profile_problem`]. The defaults stay inside the
/// envelope the property suites assume (K ≤ 16, P ≤ 5, Q ≤ 7).
pub struct ProblemShape {
    pub max_n: usize,
    /// Restrict Z to main-effect terms only (no response interactions).
    pub mains_only_z: bool,
    /// Force the fitted rank to be at least 1.
    pub positive_rank: bool,
}

impl Default for ProblemShape {
    fn default() -> Self {
        ProblemShape { max_n: 200, mains_only_z: false, positive_rank: false }
    }
}

/// Generates a random profile-structured problem: R ∈ 1..=4 binary responses
/// (K = 2^R ≤ 16), P ∈ 1..=5 continuous predictors, a hierarchical pair of
/// term sets with Q ≤ 7, and data sampled from a randomly parameterized
/// instance of the model itself.
pub fn random_profile_problem(seed: u64, shape: &ProblemShape) -> Problem {
    let mut rng = StdRng::seed_from_u64(seed);
    let r = rng.gen_range(1..=4usize);
    let coding = ProfileCoding::new(r).unwrap();
    let k = coding.num_profiles();

    // W always carries every main effect; pairs join with probability ½.
    let mut w_vec: Vec<Term> = (1..=r).map(|v| Term::new(&[v]).unwrap()).collect();
    for a in 1..=r {
        for b in (a + 1)..=r {
            if rng.gen_bool(0.5) {
                w_vec.push(Term::new(&[a, b]).unwrap());
            }
        }
    }
    let w_terms = TermSet::new(w_vec.clone()).unwrap();

    // Z is a nonempty subset of W (hierarchy by construction), capped at 7
    // columns; optionally restricted to the main effects.
    let z_pool: Vec<Term> = if shape.mains_only_z {
        w_vec.iter().filter(|t| t.order() == 1).cloned().collect()
    } else {
        w_vec.clone()
    };
    let mut z_vec: Vec<Term> = z_pool.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
    if z_vec.is_empty() {
        z_vec.push(z_pool[rng.gen_range(0..z_pool.len())].clone());
    }
    z_vec.truncate(7);
    let z_terms = TermSet::new(z_vec).unwrap();

    let n = rng.gen_range(40..=shape.max_n.max(40));
    let p = rng.gen_range(1..=5usize);
    let q = z_terms.len();
    let t = w_terms.len();

    let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
    let labels: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    let d = DesignSet::from_profile(coding, z_terms, w_terms, x, labels).unwrap();

    let s_max = p.min(q);
    let s_lo = usize::from(shape.positive_rank && s_max > 0);
    let s = rng.gen_range(s_lo..=s_max);

    // Sample data from the model at random tame parameters (rank = fitted s,
    // so there is real signal at the rank being estimated).
    let b_w = Array1::from_shape_fn(t, |_| rng.gen_range(-1.0..1.0));
    let b_x = Array2::from_shape_fn((p, s), |_| rng.gen_range(-1.0..1.0));
    let b_z = Array2::from_shape_fn((q, s), |_| rng.gen_range(-1.0..1.0));
    let m = d.w.dot(&b_w);
    let mut theta = d.x.dot(&b_x).dot(&b_z.t()).dot(&d.z.t());
    theta += &m;
    let pi = softmax_rows(&theta);

    let indices: Vec<usize> = (0..n)
        .map(|i| sample_category(&pi.row(i).to_vec(), &mut rng))
        .collect();
    let g = Observations::from_indices(&indices, k).unwrap();

    Problem { g, d, s }
}

/// A saturated category design for `k` arbitrary categories: indicator
/// columns for the first `k − 1` of them. Together with the implicit
/// intercept this spans every intercept vector, which is what "saturated"
/// means for a non-profile category set.
pub fn saturated_indicator(k: usize) -> Array2<f64> {
    Array2::from_shape_fn((k, k - 1), |(row, col)| if row == col { 1.0 } else { 0.0 })
}
