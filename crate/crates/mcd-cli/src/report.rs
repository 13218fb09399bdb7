//! Report rendering: aligned text for the terminal, CSV rows for files.
//!
//! Layout of the main coefficient table: one column per category-design (Z)
//! column, a first row labeled `1` with the intercept-level contrast of each
//! Z term, then one row per predictor with the implied coefficients
//! `A = B_x·B_z'`. Response-pair associations carried only by the intercepts
//! (pairs in W but not Z) follow as their own block. Category-mode fits have
//! no profile structure, so they get a plain category-intercepts block
//! instead of the contrast row.
//!
//! Numeric precision is split by audience: aligned text rounds to 2–4
//! decimals, CSV cells always carry 12 significant digits (`{:.11e}`), which
//! a reader can parse and reprint to recover the byte-identical cell.

use anyhow::{Context, Result};
use mcd::fitter::{FitOptions, FitResult, UpdateScheme};
use mcd::interpret::{implied_coefficients, intercept_associations, predict};
use mcd::ndarray::Array1;
use mcd::select::{aic, BootstrapResult, StepKind, StepwiseResult};
use mcd::{ProfileCoding, Term, TermSet};
use std::path::Path;

use crate::ingest::{term_display, Ingested};

/// 12 significant digits; the one format used for every CSV number.
pub fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn scheme_name(scheme: UpdateScheme) -> &'static str {
    match scheme {
        UpdateScheme::JointGsvd => "joint-gsvd",
        UpdateScheme::Alternating => "alternating",
        UpdateScheme::DimensionWise => "dimension-wise",
    }
}

/// Renders key–value rows with the keys padded to a common width and the
/// values left-aligned, one per line.
fn key_value(rows: &[(&str, String)], indent: &str) -> String {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (key, value) in rows {
        out.push_str(&format!("{indent}{key:<width$}  {value}\n"));
    }
    out
}

/// Renders rows as space-aligned columns: first column left-aligned, the
/// rest right-aligned, two spaces between columns, each line indented.
fn aligned(rows: &[Vec<String>], indent: &str) -> String {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; ncols];
    for row in rows {
        for (j, cell) in row.iter().enumerate() {
            widths[j] = widths[j].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        out.push_str(indent);
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                out.push_str("  ");
            }
            let pad = widths[j] - cell.chars().count();
            if j == 0 {
                out.push_str(cell);
                if j + 1 < row.len() {
                    out.push_str(&" ".repeat(pad));
                }
            } else {
                out.push_str(&" ".repeat(pad));
                out.push_str(cell);
            }
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    }
    out
}

/// Parameter count `T + S·(P + Q − S)` of a fitted model.
pub fn npar(fit: &FitResult) -> usize {
    let s = fit.params.s();
    let p = fit.params.b_x.nrows();
    let q = fit.params.b_z.nrows();
    fit.params.b_w.len() + s * (p + q - s)
}

/// Z/W display names derived from the fit itself (so reports stay correct
/// after selection drops terms), falling back to the ingestion-time names
/// for matrix-mode fits whose designs never change.
fn design_names(fit: &FitResult, ing: &Ingested) -> (Vec<String>, Vec<String>) {
    let map = |terms: &Option<TermSet>, fallback: &[String]| match terms {
        Some(terms) => terms.iter().map(|t| term_display(t, &ing.response_names)).collect(),
        None => fallback.to_vec(),
    };
    (map(&fit.z_terms, &ing.z_names), map(&fit.w_terms, &ing.w_names))
}

/// The alternating-sign contrast of the fitted intercepts `m` over the level
/// combinations of one term's variables, all other responses held low. For a
/// single variable this is a log odds, for a pair a log odds ratio, and so
/// on up the orders.
fn intercept_contrast(coding: ProfileCoding, m: &Array1<f64>, term: &Term) -> f64 {
    let vars = term.variables();
    let mut total = 0.0;
    for assignment in 0..(1u32 << vars.len()) {
        let mut levels = vec![false; coding.num_variables()];
        let mut lows = 0;
        for (j, &v) in vars.iter().enumerate() {
            let high = assignment >> j & 1 == 1;
            if !high {
                lows += 1;
            }
            levels[v - 1] = high;
        }
        let k = coding.profile_of(&levels).expect("levels vector matches the coding");
        let sign = if lows % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * m[k];
    }
    total
}

fn model_block(ing: &Ingested, fit: &FitResult) -> String {
    let (z_names, w_names) = design_names(fit, ing);
    let mut rows: Vec<(&str, String)> = Vec::new();
    if ing.response_names.is_empty() {
        rows.push(("categories", ing.category_labels.join(", ")));
    } else {
        rows.push(("responses", ing.response_names.join(", ")));
        rows.push(("profiles", fit.m.len().to_string()));
    }
    rows.push(("rows", ing.g.n().to_string()));
    rows.push(("rank S", fit.params.s().to_string()));
    rows.push(("Z columns", z_names.join(", ")));
    rows.push(("W columns", w_names.join(", ")));
    let predictors =
        if fit.x_labels.is_empty() { "(none)".to_string() } else { fit.x_labels.join(", ") };
    rows.push(("predictors", predictors));
    format!("Model\n{}", key_value(&rows, "  "))
}

fn fit_block(fit: &FitResult, opts: &FitOptions) -> String {
    let n = npar(fit);
    let rows: Vec<(&str, String)> = vec![
        ("deviance", format!("{:.2}", fit.deviance())),
        ("parameters", n.to_string()),
        ("AIC", format!("{:.2}", aic(fit.deviance(), n))),
        (
            "converged",
            if fit.converged {
                format!("yes ({} iterations)", fit.state.iterations)
            } else {
                format!("no (iteration cap {} reached)", opts.max_iterations)
            },
        ),
        ("scheme", scheme_name(opts.scheme).into()),
        ("tolerance", format!("{:e}", opts.tolerance)),
    ];
    format!("Fit\n{}", key_value(&rows, "  "))
}

/// Rows of the coefficient table: header, then `1` + implied-coefficient
/// rows, every number rendered through `fmt`.
fn coefficient_rows(fit: &FitResult, ing: &Ingested, fmt: &dyn Fn(f64) -> String) -> Vec<Vec<String>> {
    let (z_names, _) = design_names(fit, ing);
    let implied = implied_coefficients(fit);
    let mut rows = Vec::new();
    let mut header = vec!["term".to_string()];
    header.extend(z_names.iter().cloned());
    rows.push(header);
    if let (Some(coding), Some(z_terms)) = (fit.coding, &fit.z_terms) {
        let mut row = vec!["1".to_string()];
        for term in z_terms.iter() {
            row.push(fmt(intercept_contrast(coding, &fit.m, term)));
        }
        rows.push(row);
    }
    for (i, label) in fit.x_labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        for j in 0..implied.a.ncols() {
            row.push(fmt(implied.a[(i, j)]));
        }
        rows.push(row);
    }
    rows
}

fn coefficients_block(fit: &FitResult, ing: &Ingested) -> String {
    let rows = coefficient_rows(fit, ing, &|v| format!("{v:.4}"));
    format!("Coefficients (log-odds scale)\n{}", aligned(&rows, "  "))
}

/// Associations carried only by the intercepts, with term labels mapped to
/// response names. Empty for category-mode fits and for R = 1.
fn associations_block(fit: &FitResult, ing: &Ingested) -> Result<String> {
    if fit.coding.is_none() {
        return Ok(String::new());
    }
    let associations = intercept_associations(fit)?;
    if associations.is_empty() {
        return Ok(String::new());
    }
    let mut rows = Vec::new();
    for assoc in &associations {
        let (r1, r2) = assoc.variables;
        let name = format!("{}:{}", ing.response_names[r1 - 1], ing.response_names[r2 - 1]);
        let note = if assoc.in_w { "" } else { "(not in W: fixed at 0)" };
        rows.push(vec![name, format!("{:.4}", assoc.value), note.to_string()]);
    }
    Ok(format!("Intercept-only associations (log odds ratios)\n{}", aligned(&rows, "  ")))
}

fn category_intercepts_block(fit: &FitResult, ing: &Ingested) -> String {
    if fit.coding.is_some() {
        return String::new();
    }
    let mut rows = vec![vec!["category".to_string(), "m".to_string()]];
    for (k, label) in ing.category_labels.iter().enumerate() {
        rows.push(vec![label.clone(), format!("{:.4}", fit.m[k])]);
    }
    format!("Category intercepts\n{}", aligned(&rows, "  "))
}

/// The full fit report, blocks separated by blank lines.
pub fn fit_report(ing: &Ingested, fit: &FitResult, opts: &FitOptions) -> Result<String> {
    let mut blocks = vec![model_block(ing, fit), fit_block(fit, opts), coefficients_block(fit, ing)];
    let assoc = associations_block(fit, ing)?;
    if !assoc.is_empty() {
        blocks.push(assoc);
    }
    let cat = category_intercepts_block(fit, ing);
    if !cat.is_empty() {
        blocks.push(cat);
    }
    Ok(blocks.join("\n"))
}

/// CSV rows mirroring the coefficient table at full precision.
pub fn coefficients_csv(fit: &FitResult, ing: &Ingested) -> Vec<Vec<String>> {
    coefficient_rows(fit, ing, &sig12)
}

pub fn associations_csv(fit: &FitResult, ing: &Ingested) -> Result<Vec<Vec<String>>> {
    let mut rows = vec![vec!["pair".to_string(), "value".to_string(), "in_w".to_string()]];
    if fit.coding.is_none() {
        return Ok(rows);
    }
    for assoc in intercept_associations(fit)? {
        let (r1, r2) = assoc.variables;
        let name = format!("{}:{}", ing.response_names[r1 - 1], ing.response_names[r2 - 1]);
        rows.push(vec![name, sig12(assoc.value), assoc.in_w.to_string()]);
    }
    Ok(rows)
}

pub fn summary_csv(fit: &FitResult, opts: &FitOptions) -> Vec<Vec<String>> {
    let n = npar(fit);
    vec![
        vec!["key".into(), "value".into()],
        vec!["deviance".into(), sig12(fit.deviance())],
        vec!["npar".into(), n.to_string()],
        vec!["aic".into(), sig12(aic(fit.deviance(), n))],
        vec!["iterations".into(), fit.state.iterations.to_string()],
        vec!["converged".into(), fit.converged.to_string()],
        vec!["scheme".into(), scheme_name(opts.scheme).into()],
    ]
}

pub fn intercepts_csv(fit: &FitResult, ing: &Ingested) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["category".to_string(), "m".to_string()]];
    for (k, label) in ing.category_labels.iter().enumerate() {
        rows.push(vec![label.clone(), sig12(fit.m[k])]);
    }
    rows
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

fn step_kind_name(kind: StepKind) -> &'static str {
    match kind {
        StepKind::Rank => "rank",
        StepKind::CategoryTerms => "category terms (Z)",
        StepKind::PredictorColumns => "predictors (X)",
        StepKind::InterceptTerms => "intercept terms (W)",
    }
}

fn candidate_description(
    kind: StepKind,
    spec: &mcd::ModelSpec,
    ing: &Ingested,
) -> String {
    let names = |terms: &TermSet| {
        terms
            .iter()
            .map(|t| term_display(t, &ing.response_names))
            .collect::<Vec<_>>()
            .join(", ")
    };
    match kind {
        StepKind::Rank => format!("S={}", spec.s),
        StepKind::CategoryTerms => format!("Z = {{{}}}", names(&spec.z_terms)),
        StepKind::InterceptTerms => format!("W = {{{}}}", names(&spec.w_terms)),
        StepKind::PredictorColumns => {
            let labels: Vec<&str> =
                spec.x_columns.iter().map(|&j| ing.d.x_labels[j].as_str()).collect();
            if labels.is_empty() {
                "X = {} (none)".to_string()
            } else {
                format!("X = {{{}}}", labels.join(", "))
            }
        }
    }
}

pub fn selection_report(result: &StepwiseResult, ing: &Ingested) -> String {
    let mut out = String::from("Stepwise selection (AIC)\n");
    for (i, step) in result.steps.iter().enumerate() {
        out.push_str(&format!("\nStep {}: {}\n", i + 1, step_kind_name(step.kind)));
        let mut rows =
            vec![vec!["".to_string(), "candidate".into(), "npar".into(), "deviance".into(), "AIC".into()]];
        for (c, cand) in step.candidates.iter().enumerate() {
            let marker = if c == step.chosen { "*" } else { "" };
            let (dev, aic_text) = match (cand.deviance, cand.aic) {
                (Some(d), Some(a)) => (format!("{d:.2}"), format!("{a:.2}")),
                _ => ("-".to_string(), "-".to_string()),
            };
            let mut description = candidate_description(step.kind, &cand.spec, ing);
            if let Some(err) = &cand.error {
                description.push_str(&format!(" (infeasible: {err})"));
            }
            rows.push(vec![marker.to_string(), description, cand.npar.to_string(), dev, aic_text]);
        }
        out.push_str(&aligned(&rows, "  "));
    }
    out
}

pub fn selection_csv(result: &StepwiseResult, ing: &Ingested) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "step".to_string(),
        "kind".into(),
        "candidate".into(),
        "npar".into(),
        "deviance".into(),
        "aic".into(),
        "chosen".into(),
        "error".into(),
    ]];
    for (i, step) in result.steps.iter().enumerate() {
        for (c, cand) in step.candidates.iter().enumerate() {
            rows.push(vec![
                (i + 1).to_string(),
                step_kind_name(step.kind).to_string(),
                candidate_description(step.kind, &cand.spec, ing),
                cand.npar.to_string(),
                cand.deviance.map(sig12).unwrap_or_default(),
                cand.aic.map(sig12).unwrap_or_default(),
                (c == step.chosen).to_string(),
                cand.error.clone().unwrap_or_default(),
            ]);
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

/// Labels, point estimates, and bounds flattened to one row per parameter:
/// the implied coefficients cell by cell, then the intercept weights.
fn interval_rows(result: &BootstrapResult, ing: &Ingested) -> Vec<(String, f64, f64, f64)> {
    let (z_names, w_names) = design_names(&result.fit, ing);
    let a = implied_coefficients(&result.fit).a;
    let mut rows = Vec::new();
    for (i, x_label) in result.fit.x_labels.iter().enumerate() {
        for (j, z_name) in z_names.iter().enumerate() {
            rows.push((
                format!("{x_label}->{z_name}"),
                a[(i, j)],
                result.a_lower[(i, j)],
                result.a_upper[(i, j)],
            ));
        }
    }
    for (t, w_name) in w_names.iter().enumerate() {
        rows.push((
            format!("intercept[{w_name}]"),
            result.fit.params.b_w[t],
            result.bw_lower[t],
            result.bw_upper[t],
        ));
    }
    rows
}

pub fn bootstrap_report(result: &BootstrapResult, ing: &Ingested) -> String {
    let requested = result.replicates.len() + result.failures;
    let head: Vec<(&str, String)> = vec![
        ("replicates", format!("{requested} ({} failed)", result.failures)),
        ("level", format!("{}", result.level)),
        ("seed", result.seed.to_string()),
    ];
    let mut rows =
        vec![vec!["parameter".to_string(), "estimate".into(), "lower".into(), "upper".into()]];
    for (label, estimate, lower, upper) in interval_rows(result, ing) {
        rows.push(vec![
            label,
            format!("{estimate:.4}"),
            format!("{lower:.4}"),
            format!("{upper:.4}"),
        ]);
    }
    format!(
        "Bootstrap percentile intervals\n{}\n{}",
        key_value(&head, "  "),
        aligned(&rows, "  ")
    )
}

pub fn intervals_csv(result: &BootstrapResult, ing: &Ingested) -> Vec<Vec<String>> {
    let mut rows =
        vec![vec!["parameter".to_string(), "estimate".into(), "lower".into(), "upper".into()]];
    for (label, estimate, lower, upper) in interval_rows(result, ing) {
        rows.push(vec![label, sig12(estimate), sig12(lower), sig12(upper)]);
    }
    rows
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

/// Header + one row per input observation: profile (or category)
/// probabilities, then per-response marginal probabilities where the fit has
/// profile structure.
fn prediction_rows(
    fit: &FitResult,
    ing: &Ingested,
    fmt: &dyn Fn(f64) -> String,
) -> Result<Vec<Vec<String>>> {
    let prediction = predict(fit, &ing.d.x).context("computing predictions")?;
    let mut header = vec!["row".to_string()];
    for label in &ing.category_labels {
        header.push(format!("p[{label}]"));
    }
    if prediction.marginal_response_probabilities.is_some() {
        for name in &ing.response_names {
            header.push(format!("p_high[{name}]"));
        }
    }
    let mut rows = vec![header];
    let pp = &prediction.profile_probabilities;
    for i in 0..pp.nrows() {
        let mut row = vec![(i + 1).to_string()];
        for k in 0..pp.ncols() {
            row.push(fmt(pp[(i, k)]));
        }
        if let Some(marginals) = &prediction.marginal_response_probabilities {
            for v in 0..marginals.ncols() {
                row.push(fmt(marginals[(i, v)]));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn prediction_report(fit: &FitResult, ing: &Ingested) -> Result<String> {
    let rows = prediction_rows(fit, ing, &|v| format!("{v:.4}"))?;
    Ok(format!("Predicted probabilities\n{}", aligned(&rows, "  ")))
}

pub fn predictions_csv(fit: &FitResult, ing: &Ingested) -> Result<Vec<Vec<String>>> {
    prediction_rows(fit, ing, &sig12)
}

// ---------------------------------------------------------------------------
// Trace and file output
// ---------------------------------------------------------------------------

/// `iteration<TAB>deviance` lines, full precision, with a header line.
pub fn trace_tsv(trace: &[f64]) -> String {
    let mut out = String::from("iteration\tdeviance\n");
    for (t, dev) in trace.iter().enumerate() {
        out.push_str(&format!("{t}\t{}\n", sig12(*dev)));
    }
    out
}

pub fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for row in rows {
        writer.write_record(row).with_context(|| format!("writing {}", path.display()))?;
    }
    writer.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_round_trips_through_parse() {
        for &v in &[0.0, 1.0, -2.5, 6590.376458, 1.0e-12, -3.77e8, 0.4514] {
            let text = sig12(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(sig12(back), text);
        }
    }

    #[test]
    fn aligned_pads_columns() {
        let rows = vec![
            vec!["a".to_string(), "2.00".to_string()],
            vec!["long".to_string(), "10.55".to_string()],
        ];
        let text = aligned(&rows, "  ");
        assert_eq!(text, "  a      2.00\n  long  10.55\n");
    }
}
