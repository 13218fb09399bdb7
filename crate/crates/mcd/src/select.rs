//! Model selection by AIC and percentile bootstrap intervals.
//!
//! The stepwise search mirrors how these models are pruned in practice, in
//! four ordered steps:
//!
//! 1. **Rank** — fit every `S` from 0 to `min(P, Q)` and keep the best AIC.
//! 2. **Category terms** — peel whole interaction-order blocks off `Z` from
//!    the highest order down, stopping at the first rejected drop; then try
//!    re-adding each dropped association term singly, plus one combined
//!    candidate holding every improving single.
//! 3. **Predictor columns** — greedy best-first deletion of non-forced
//!    columns of `X` until no single deletion improves the AIC.
//! 4. **Intercept terms** — peel interaction-order blocks off `W` (never
//!    main effects, never terms still needed by `Z`), highest order first,
//!    stopping at the first rejected drop.
//!
//! Every candidate a step evaluates is recorded — including infeasible ones,
//! which carry an error string instead of a deviance — so the whole search
//! can be reported as a table. AIC ties prefer fewer parameters, then the
//! earlier candidate; with equal parameter counts a drop is accepted on a
//! tie. Candidates within a step are fitted in parallel but merged in
//! candidate order, so results are deterministic.
//!
//! The bootstrap resamples rows with replacement, refits, and takes
//! percentile intervals of the implied coefficients and intercept weights.
//! Each replicate's RNG seed is drawn up front from the master seed, so runs
//! are reproducible bit for bit regardless of thread scheduling.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::design::{DesignSet, ProfileCoding, Term, TermSet};
use crate::error::{Error, Result};
use crate::fitter::{fit, FitOptions, FitResult};
use crate::model::Observations;

/// A model configuration the stepwise search can fit: rank, category terms,
/// intercept terms, and the retained predictor columns (indices into the full
/// predictor matrix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub s: usize,
    pub z_terms: TermSet,
    pub w_terms: TermSet,
    pub x_columns: Vec<usize>,
}

impl ModelSpec {
    /// `T + S·(P + Q − S)` for this configuration.
    pub fn npar(&self) -> usize {
        let p = self.x_columns.len();
        let q = self.z_terms.len();
        self.w_terms.len() + self.s * (p + q - self.s)
    }
}

/// One evaluated configuration. Infeasible candidates (rank out of range
/// after deletions, rank-deficient submatrix, non-finite fit) carry the error
/// text and no AIC, and are never chosen.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub spec: ModelSpec,
    pub deviance: Option<f64>,
    pub npar: usize,
    pub aic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Rank,
    CategoryTerms,
    PredictorColumns,
    InterceptTerms,
}

/// All candidates one step looked at, with the index of the configuration it
/// settled on (candidate 0 is always the incumbent carried into the step).
#[derive(Debug, Clone)]
pub struct SelectionStep {
    pub kind: StepKind,
    pub candidates: Vec<Candidate>,
    pub chosen: usize,
    pub chosen_aic: f64,
}

#[derive(Debug, Clone)]
pub struct StepwiseResult {
    pub steps: Vec<SelectionStep>,
    pub final_spec: ModelSpec,
    pub final_fit: FitResult,
}

#[derive(Debug, Clone, Default)]
pub struct StepwiseOptions {
    pub fit: FitOptions,
    /// Predictor columns (indices into the full matrix) that step 3 must keep.
    pub forced_x: Vec<usize>,
}

/// Akaike's criterion: deviance plus twice the parameter count.
pub fn aic(deviance: f64, npar: usize) -> f64 {
    deviance + 2.0 * npar as f64
}

struct SearchContext<'a> {
    g: &'a Observations,
    coding: ProfileCoding,
    x: &'a Array2<f64>,
    x_labels: &'a [String],
    fit_opts: FitOptions,
}

impl SearchContext<'_> {
    fn evaluate(&self, spec: ModelSpec) -> Candidate {
        let npar = spec.npar();
        let attempt = (|| -> Result<f64> {
            let x = self.x.select(Axis(1), &spec.x_columns);
            let labels: Vec<String> =
                spec.x_columns.iter().map(|&j| self.x_labels[j].clone()).collect();
            let d = DesignSet::from_profile(
                self.coding,
                spec.z_terms.clone(),
                spec.w_terms.clone(),
                x,
                labels,
            )?;
            let result = fit(self.g, &d, spec.s, &self.fit_opts)?;
            Ok(result.deviance())
        })();
        match attempt {
            Ok(deviance) => Candidate {
                npar,
                aic: Some(aic(deviance, npar)),
                deviance: Some(deviance),
                spec,
                error: None,
            },
            Err(e) => Candidate { spec, deviance: None, npar, aic: None, error: Some(e.to_string()) },
        }
    }

    fn evaluate_all(&self, specs: Vec<ModelSpec>) -> Vec<Candidate> {
        specs.into_par_iter().map(|spec| self.evaluate(spec)).collect()
    }
}

/// Index of the best candidate: lowest AIC, ties broken by fewer parameters,
/// then by earlier position. `None` when no candidate was feasible.
pub(crate) fn pick_best(candidates: &[Candidate]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, cand) in candidates.iter().enumerate() {
        let Some(a) = cand.aic else { continue };
        match best {
            None => best = Some(i),
            Some(b) => {
                let best_aic = candidates[b].aic.unwrap();
                if a < best_aic || (a == best_aic && cand.npar < candidates[b].npar) {
                    best = Some(i);
                }
            }
        }
    }
    best
}

/// Whether a candidate improves on the incumbent: strictly better AIC, or an
/// AIC tie in favor of fewer parameters.
fn improves(cand: &Candidate, incumbent_aic: f64, incumbent_npar: usize) -> bool {
    match cand.aic {
        Some(a) => a < incumbent_aic || (a == incumbent_aic && cand.npar < incumbent_npar),
        None => false,
    }
}

/// AIC-guided stepwise reduction. `x` must already be encoded; `z_terms` and
/// `w_terms` give the starting (largest) model, and the search only ever
/// removes structure from it, apart from re-adding dropped category terms in
/// step 2.
pub fn stepwise(
    g: &Observations,
    coding: ProfileCoding,
    z_terms: &TermSet,
    w_terms: &TermSet,
    x: &Array2<f64>,
    x_labels: &[String],
    opts: &StepwiseOptions,
) -> Result<StepwiseResult> {
    if x_labels.len() != x.ncols() {
        return Err(Error::dim(format!(
            "{} labels for {} predictor columns",
            x_labels.len(),
            x.ncols()
        )));
    }
    for &j in &opts.forced_x {
        if j >= x.ncols() {
            return Err(Error::InvalidOptions(format!(
                "forced predictor index {j} is out of range for {} columns",
                x.ncols()
            )));
        }
    }
    let ctx = SearchContext {
        g,
        coding,
        x,
        x_labels,
        fit_opts: FitOptions { trace: false, ..opts.fit.clone() },
    };

    let all_columns: Vec<usize> = (0..x.ncols()).collect();
    let mut steps = Vec::with_capacity(4);

    // Step 1: pick the rank.
    let max_s = x.ncols().min(z_terms.len());
    let rank_specs: Vec<ModelSpec> = (0..=max_s)
        .map(|s| ModelSpec {
            s,
            z_terms: z_terms.clone(),
            w_terms: w_terms.clone(),
            x_columns: all_columns.clone(),
        })
        .collect();
    let candidates = ctx.evaluate_all(rank_specs);
    let chosen = pick_best(&candidates).ok_or(Error::ConvergenceFailure)?;
    let mut current = candidates[chosen].clone();
    steps.push(SelectionStep {
        kind: StepKind::Rank,
        chosen,
        chosen_aic: current.aic.unwrap(),
        candidates,
    });

    // Step 2: prune the category design, then reconsider dropped terms.
    {
        let mut candidates = vec![current.clone()];
        let mut current_idx = 0usize;
        let mut dropped: Vec<Term> = Vec::new();

        // Phase A: drop whole order blocks, highest first, stop on rejection.
        while current.spec.z_terms.max_order() >= 2 {
            let order = current.spec.z_terms.max_order();
            let block: Vec<Term> = current
                .spec
                .z_terms
                .iter()
                .filter(|t| t.order() == order)
                .cloned()
                .collect();
            let reduced = current.spec.z_terms.without(&block);
            let s = current.spec.s.min(current.spec.x_columns.len().min(reduced.len()));
            let cand = ctx.evaluate(ModelSpec { z_terms: reduced, s, ..current.spec.clone() });
            let accept = improves(&cand, current.aic.unwrap(), current.npar);
            candidates.push(cand);
            if accept {
                current_idx = candidates.len() - 1;
                current = candidates[current_idx].clone();
                dropped.extend(block);
            } else {
                break;
            }
        }

        // Phase B: offer each dropped association term back, one at a time.
        dropped.retain(|t| t.order() >= 2);
        if !dropped.is_empty() {
            let readd = |set: &TermSet, t: &Term| {
                set.with(t.clone()).expect("re-added term cannot already be present")
            };
            let single_specs: Vec<ModelSpec> = dropped
                .iter()
                .map(|t| ModelSpec {
                    z_terms: readd(&current.spec.z_terms, t),
                    ..current.spec.clone()
                })
                .collect();
            let singles = ctx.evaluate_all(single_specs);
            let improving: Vec<&Term> = dropped
                .iter()
                .zip(&singles)
                .filter(|(_, c)| improves(c, current.aic.unwrap(), current.npar))
                .map(|(t, _)| t)
                .collect();
            let combined = if improving.len() >= 2 {
                let mut terms = current.spec.z_terms.clone();
                for t in &improving {
                    terms = readd(&terms, t);
                }
                Some(ctx.evaluate(ModelSpec { z_terms: terms, ..current.spec.clone() }))
            } else {
                None
            };
            candidates.extend(singles);
            if let Some(c) = combined {
                candidates.push(c);
            }
            if let Some(best) = pick_best(&candidates) {
                if improves(
                    &candidates[best],
                    current.aic.unwrap(),
                    current.npar,
                ) {
                    current_idx = best;
                    current = candidates[best].clone();
                }
            }
        }

        steps.push(SelectionStep {
            kind: StepKind::CategoryTerms,
            chosen: current_idx,
            chosen_aic: current.aic.unwrap(),
            candidates,
        });
    }

    // Step 3: greedy best-first deletion of predictor columns.
    {
        let mut candidates = vec![current.clone()];
        let mut current_idx = 0usize;
        loop {
            let droppable: Vec<usize> = current
                .spec
                .x_columns
                .iter()
                .copied()
                .filter(|j| !opts.forced_x.contains(j))
                .collect();
            if droppable.is_empty() {
                break;
            }
            let round_specs: Vec<ModelSpec> = droppable
                .iter()
                .map(|&j| {
                    let cols: Vec<usize> =
                        current.spec.x_columns.iter().copied().filter(|&c| c != j).collect();
                    ModelSpec { x_columns: cols, ..current.spec.clone() }
                })
                .collect();
            let round = ctx.evaluate_all(round_specs);
            let offset = candidates.len();
            candidates.extend(round);
            let round_slice = &candidates[offset..];
            let best_local = pick_best(round_slice).map(|i| i + offset);
            match best_local {
                Some(idx)
                    if improves(&candidates[idx], current.aic.unwrap(), current.npar) =>
                {
                    current_idx = idx;
                    current = candidates[idx].clone();
                }
                _ => break,
            }
        }
        steps.push(SelectionStep {
            kind: StepKind::PredictorColumns,
            chosen: current_idx,
            chosen_aic: current.aic.unwrap(),
            candidates,
        });
    }

    // Step 4: prune intercept-design orders, keeping anything Z still uses.
    {
        let mut candidates = vec![current.clone()];
        let mut current_idx = 0usize;
        while current.spec.w_terms.max_order() >= 2 {
            let order = current.spec.w_terms.max_order();
            let block: Vec<Term> = current
                .spec
                .w_terms
                .iter()
                .filter(|t| t.order() == order && !current.spec.z_terms.contains(t))
                .cloned()
                .collect();
            if block.is_empty() {
                break;
            }
            let reduced = current.spec.w_terms.without(&block);
            let cand = ctx.evaluate(ModelSpec { w_terms: reduced, ..current.spec.clone() });
            let accept = improves(&cand, current.aic.unwrap(), current.npar);
            candidates.push(cand);
            if accept {
                current_idx = candidates.len() - 1;
                current = candidates[current_idx].clone();
            } else {
                break;
            }
        }
        steps.push(SelectionStep {
            kind: StepKind::InterceptTerms,
            chosen: current_idx,
            chosen_aic: current.aic.unwrap(),
            candidates,
        });
    }

    // Refit the winner to return the full result object.
    let spec = current.spec.clone();
    let x_final = x.select(Axis(1), &spec.x_columns);
    let labels: Vec<String> = spec.x_columns.iter().map(|&j| x_labels[j].clone()).collect();
    let d = DesignSet::from_profile(
        coding,
        spec.z_terms.clone(),
        spec.w_terms.clone(),
        x_final,
        labels,
    )?;
    let final_fit = fit(g, &d, spec.s, &ctx.fit_opts)?;
    Ok(StepwiseResult { steps, final_spec: spec, final_fit })
}

#[derive(Debug, Clone)]
pub struct BootstrapOptions {
    pub replicates: usize,
    /// Two-sided confidence level in (0, 1), e.g. 0.95.
    pub level: f64,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions { replicates: 200, level: 0.95, seed: 0, fit: FitOptions::default() }
    }
}

/// Parameters retained from one successful replicate.
#[derive(Debug, Clone)]
pub struct Replicate {
    /// Implied coefficients `B_x·B_z'` (`P×Q`).
    pub a: Array2<f64>,
    pub b_w: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    /// The point fit on the full data.
    pub fit: FitResult,
    pub replicates: Vec<Replicate>,
    pub a_lower: Array2<f64>,
    pub a_upper: Array2<f64>,
    pub bw_lower: Array1<f64>,
    pub bw_upper: Array1<f64>,
    /// Replicates whose refit failed (rank-deficient resample, divergence);
    /// they are excluded from the intervals.
    pub failures: usize,
    pub level: f64,
    pub seed: u64,
}

/// Linear-interpolation sample quantile of `sorted` (ascending) at
/// probability `p` — the convention where the `j`-th order statistic sits at
/// probability `(j−1)/(n−1)`.
pub(crate) fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Case-resampling percentile bootstrap for the implied coefficients and
/// intercept weights. Rows of `(g, X)` are resampled jointly; the encoded
/// predictor matrix is reused as-is, without re-encoding per replicate, so
/// intervals describe the model fitted to this encoding.
pub fn bootstrap(
    g: &Observations,
    d: &DesignSet,
    s: usize,
    opts: &BootstrapOptions,
) -> Result<BootstrapResult> {
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::InvalidLevel { level: opts.level });
    }
    if opts.replicates == 0 {
        return Err(Error::InvalidOptions("bootstrap needs at least one replicate".into()));
    }
    let fit_opts = FitOptions { trace: false, ..opts.fit.clone() };
    let point = fit(g, d, s, &fit_opts)?;

    // Seeds are drawn up front so replicate r's stream is fixed by the master
    // seed alone, keeping results identical however rayon schedules the work.
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    let replicate_seeds: Vec<u64> = (0..opts.replicates).map(|_| master.gen()).collect();

    let n = d.n();
    let outcomes: Vec<Option<Replicate>> = replicate_seeds
        .par_iter()
        .map(|&rep_seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(rep_seed);
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let g_b = g.resample(&rows).ok()?;
            let x_b = d.x.select(Axis(0), &rows);
            let d_b = d.with_predictors(x_b, d.x_labels.clone()).ok()?;
            let result = fit(&g_b, &d_b, s, &fit_opts).ok()?;
            Some(Replicate {
                a: result.params.b_x.dot(&result.params.b_z.t()),
                b_w: result.params.b_w,
            })
        })
        .collect();

    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    let replicates: Vec<Replicate> = outcomes.into_iter().flatten().collect();
    if replicates.is_empty() {
        return Err(Error::InvalidOptions(format!(
            "all {} bootstrap replicates failed to fit",
            opts.replicates
        )));
    }

    let p_lo = (1.0 - opts.level) / 2.0;
    let p_hi = 1.0 - p_lo;
    let p = point.params.b_x.nrows();
    let q = point.params.b_z.nrows();
    let mut a_lower = Array2::zeros((p, q));
    let mut a_upper = Array2::zeros((p, q));
    for i in 0..p {
        for j in 0..q {
            let mut vals: Vec<f64> = replicates.iter().map(|r| r.a[(i, j)]).collect();
            vals.sort_by(f64::total_cmp);
            a_lower[(i, j)] = quantile_type7(&vals, p_lo);
            a_upper[(i, j)] = quantile_type7(&vals, p_hi);
        }
    }
    let t = point.params.b_w.len();
    let mut bw_lower = Array1::zeros(t);
    let mut bw_upper = Array1::zeros(t);
    for i in 0..t {
        let mut vals: Vec<f64> = replicates.iter().map(|r| r.b_w[i]).collect();
        vals.sort_by(f64::total_cmp);
        bw_lower[i] = quantile_type7(&vals, p_lo);
        bw_upper[i] = quantile_type7(&vals, p_hi);
    }

    Ok(BootstrapResult {
        fit: point,
        replicates,
        a_lower,
        a_upper,
        bw_lower,
        bw_upper,
        failures,
        level: opts.level,
        seed: opts.seed,
    })
}
