//! Turning fitted parameters into statements about odds.
//!
//! The linear predictor for row `i` and profile `k` is
//! `θ_ik = m_k + x_i'·A·z_k` with `A = B_x·B_z'`, so contrasts of `θ` across
//! profiles are log odds: a single-variable contrast gives the log odds of
//! that response being high, a double contrast across two variables gives
//! their log odds ratio, and each is an affine function of `x` whose slope is
//! `A` times the corresponding contrast of `Z` rows. Everything here is
//! invariant under the identification orbit, because only `m` and `A` enter.
//!
//! These helpers need the profile structure of the categories, so they
//! require a fit built from a profile design (not raw category matrices).

use ndarray::{Array1, Array2};

use crate::design::{build_profile_design, ProfileCoding, Term, TermSet};
use crate::error::{Error, Result};
use crate::fitter::FitResult;
use crate::model::probabilities;

/// The implied coefficient matrix `A = B_x·B_z'` (`P×Q`): row `p`, column `q`
/// is the effect of predictor `p` on the category-design column `q`. For a
/// profile design, columns for main-effect terms are per-unit-of-`x` log-odds
/// slopes and columns for interaction terms are log-odds-ratio slopes.
#[derive(Debug, Clone)]
pub struct ImpliedCoefficients {
    pub a: Array2<f64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

pub fn implied_coefficients(fit: &FitResult) -> ImpliedCoefficients {
    let a = fit.params.b_x.dot(&fit.params.b_z.t());
    let col_labels = match &fit.z_terms {
        Some(terms) => terms.iter().map(Term::to_string).collect(),
        None => (1..=a.ncols()).map(|q| format!("z{q}")).collect(),
    };
    ImpliedCoefficients { a, row_labels: fit.x_labels.clone(), col_labels }
}

/// What to contrast: a single response variable (log odds of high vs low) or
/// a pair (log odds ratio). Variables are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectTarget {
    Response(usize),
    Pair(usize, usize),
}

/// A log-odds query: predictor values (encoded units, length `P`), the
/// target, and optionally the levels at which the remaining response
/// variables are held (length `R`; default all low).
#[derive(Debug, Clone)]
pub struct EffectQuery {
    pub x: Array1<f64>,
    pub target: EffectTarget,
    pub holding: Option<Vec<bool>>,
}

/// An evaluated effect: `value = intercept_contrast + x'·slope`.
#[derive(Debug, Clone)]
pub struct Effect {
    pub value: f64,
    pub intercept_contrast: f64,
    /// Per-predictor slope (length `P`).
    pub slope: Array1<f64>,
}

fn require_profile(fit: &FitResult) -> Result<(ProfileCoding, &TermSet, &TermSet)> {
    match (fit.coding, &fit.z_terms, &fit.w_terms) {
        (Some(c), Some(z), Some(w)) => Ok((c, z, w)),
        _ => Err(Error::InvalidOptions(
            "log-odds interpretation needs a fit built from a profile design".into(),
        )),
    }
}

fn resolve_holding(holding: &Option<Vec<bool>>, r: usize) -> Result<Vec<bool>> {
    match holding {
        None => Ok(vec![false; r]),
        Some(h) if h.len() == r => Ok(h.clone()),
        Some(h) => Err(Error::dim(format!(
            "holding pattern has {} entries for {} response variables",
            h.len(),
            r
        ))),
    }
}

fn check_in_model(var: usize, coding: ProfileCoding, w_terms: &TermSet) -> Result<()> {
    if var == 0
        || var > coding.num_variables()
        || !w_terms.used_variables().contains(&var)
    {
        return Err(Error::TargetNotInModel { variable: var });
    }
    Ok(())
}

fn check_x(x: &Array1<f64>, p: usize) -> Result<()> {
    if x.len() != p {
        return Err(Error::dim(format!(
            "query has {} predictor values but the model has {p}",
            x.len()
        )));
    }
    Ok(())
}

/// Log odds that response variable `target` is high rather than low, with the
/// other responses held at the query's holding pattern. Fails with
/// `TargetNotInModel` when the variable does not appear in the intercept
/// design.
pub fn log_odds(fit: &FitResult, query: &EffectQuery) -> Result<Effect> {
    let (coding, z_terms, w_terms) = require_profile(fit)?;
    let var = match query.target {
        EffectTarget::Response(r) => r,
        EffectTarget::Pair(..) => {
            return Err(Error::InvalidOptions(
                "log_odds contrasts one variable; use log_odds_ratio for a pair".into(),
            ))
        }
    };
    check_in_model(var, coding, w_terms)?;
    check_x(&query.x, fit.params.b_x.nrows())?;
    let mut levels = resolve_holding(&query.holding, coding.num_variables())?;

    levels[var - 1] = true;
    let hi = coding.profile_of(&levels).expect("holding pattern length was checked");
    levels[var - 1] = false;
    let lo = coding.profile_of(&levels).expect("holding pattern length was checked");

    let z = build_profile_design(&coding, z_terms)?;
    let dz = &z.row(hi) - &z.row(lo);
    let a = fit.params.b_x.dot(&fit.params.b_z.t());
    let slope = a.dot(&dz);
    let intercept_contrast = fit.m[hi] - fit.m[lo];
    let value = intercept_contrast + query.x.dot(&slope);
    Ok(Effect { value, intercept_contrast, slope })
}

/// Log odds ratio between two response variables — the double contrast of `θ`
/// over their four level combinations, with the remaining responses held
/// fixed. A value of 0 means the two responses are conditionally independent
/// at that `x`.
pub fn log_odds_ratio(fit: &FitResult, query: &EffectQuery) -> Result<Effect> {
    let (coding, z_terms, w_terms) = require_profile(fit)?;
    let (r1, r2) = match query.target {
        EffectTarget::Pair(a, b) => (a, b),
        EffectTarget::Response(_) => {
            return Err(Error::InvalidOptions(
                "log_odds_ratio contrasts a pair of variables; use log_odds for one".into(),
            ))
        }
    };
    if r1 == r2 {
        return Err(Error::InvalidOptions(
            "log_odds_ratio needs two distinct response variables".into(),
        ));
    }
    check_in_model(r1, coding, w_terms)?;
    check_in_model(r2, coding, w_terms)?;
    check_x(&query.x, fit.params.b_x.nrows())?;
    let mut levels = resolve_holding(&query.holding, coding.num_variables())?;

    let mut profile_at = |l1: bool, l2: bool| {
        levels[r1 - 1] = l1;
        levels[r2 - 1] = l2;
        coding.profile_of(&levels).expect("holding pattern length was checked")
    };
    let hh = profile_at(true, true);
    let hl = profile_at(true, false);
    let lh = profile_at(false, true);
    let ll = profile_at(false, false);

    let z = build_profile_design(&coding, z_terms)?;
    let dz = &(&z.row(hh) - &z.row(hl)) - &(&z.row(lh) - &z.row(ll));
    let a = fit.params.b_x.dot(&fit.params.b_z.t());
    let slope = a.dot(&dz);
    let intercept_contrast = fit.m[hh] - fit.m[hl] - fit.m[lh] + fit.m[ll];
    let value = intercept_contrast + query.x.dot(&slope);
    Ok(Effect { value, intercept_contrast, slope })
}

/// An intercept-level association between two response variables: their log
/// odds ratio at `x = 0` with the other responses held low.
#[derive(Debug, Clone)]
pub struct Association {
    /// 1-based variable pair, smaller first.
    pub variables: (usize, usize),
    /// Display label, e.g. `"1:2"`.
    pub label: String,
    pub value: f64,
    /// Whether the pair term appears in the intercept design; when it does
    /// not (and no higher-order term covers the pair) the value is 0.
    pub in_w: bool,
}

/// Intercept-level associations for every response pair *not* modulated by
/// the predictors — pairs whose interaction term is absent from the category
/// design `Z`. Pairs in `Z` are omitted because their association varies with
/// `x` and lives in the implied coefficients instead.
pub fn intercept_associations(fit: &FitResult) -> Result<Vec<Association>> {
    let (coding, z_terms, w_terms) = require_profile(fit)?;
    let r = coding.num_variables();
    let mut out = Vec::new();
    for r1 in 1..=r {
        for r2 in (r1 + 1)..=r {
            let pair = Term::new(&[r1, r2])?;
            if z_terms.contains(&pair) {
                continue;
            }
            let mut levels = vec![false; r];
            let profile_at = |l1: bool, l2: bool, levels: &mut Vec<bool>| {
                levels[r1 - 1] = l1;
                levels[r2 - 1] = l2;
                coding.profile_of(levels).expect("levels vector has length R")
            };
            let hh = profile_at(true, true, &mut levels);
            let hl = profile_at(true, false, &mut levels);
            let lh = profile_at(false, true, &mut levels);
            let ll = profile_at(false, false, &mut levels);
            let value = fit.m[hh] - fit.m[hl] - fit.m[lh] + fit.m[ll];
            out.push(Association {
                variables: (r1, r2),
                label: pair.to_string(),
                value,
                in_w: w_terms.contains(&pair),
            });
        }
    }
    Ok(out)
}

/// Predicted probabilities for new predictor rows (encoded units, `M×P`).
#[derive(Debug, Clone)]
pub struct Prediction {
    /// `M×K`: probability of each response profile per row.
    pub profile_probabilities: Array2<f64>,
    /// `M×R`: probability that each response variable is high, per row.
    /// Present only for profile designs.
    pub marginal_response_probabilities: Option<Array2<f64>>,
}

pub fn predict(fit: &FitResult, x_new: &Array2<f64>) -> Result<Prediction> {
    let p = fit.params.b_x.nrows();
    if x_new.ncols() != p {
        return Err(Error::dim(format!(
            "prediction rows have {} predictors but the model has {p}",
            x_new.ncols()
        )));
    }
    for ((row, col), &val) in x_new.indexed_iter() {
        if !val.is_finite() {
            return Err(Error::NonFinite { column: fit.x_labels[col].clone(), row });
        }
    }
    let scores = x_new.dot(&fit.params.b_x);
    let mut theta = scores.dot(&fit.v.t());
    theta += &fit.m;
    let pi = probabilities(&theta);

    let marginals = fit.coding.map(|coding| {
        let r = coding.num_variables();
        Array2::from_shape_fn((x_new.nrows(), r), |(i, var)| {
            (0..coding.num_profiles())
                .filter(|&k| coding.is_high(k, var + 1))
                .map(|k| pi[(i, k)])
                .sum()
        })
    });

    Ok(Prediction { profile_probabilities: pi, marginal_response_probabilities: marginals })
}
