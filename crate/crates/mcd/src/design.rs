//! Design matrices for response profiles and predictors.
//!
//! For `R` binary response variables the `K = 2^R` joint outcomes ("profiles")
//! are enumerated in a fixed order and coded ±½ per variable. Category design
//! matrices `Z` (predictor-to-response structure) and `W` (among-response
//! structure) are built from *terms*: a singleton term `{r}` is a main-effect
//! column with entries `y_r`, a pair `{r, r'}` an association column with
//! entries `y_r·y_r'`, and so on. Predictor data is encoded into `X`
//! (passthrough, centered, or standardized) with rank checks that name the
//! offending columns. [`DesignSet`] bundles the three matrices and their
//! metadata; arbitrary non-profile categories are supported through
//! [`DesignSet::from_matrices`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::linalg::dependent_columns;

/// Low/high codes for one binary response variable.
pub const LOW: f64 = -0.5;
pub const HIGH: f64 = 0.5;

/// Enumeration of the `K = 2^R` profiles of `R` binary response variables.
///
/// Profile 0 is all-low; variable 1 varies slowest and variable `R` fastest
/// as the profile index increases. Equality of enumerations and codes makes
/// every matrix built from the same `R` byte-identical across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileCoding {
    r: usize,
}

impl ProfileCoding {
    /// Coding for `r` binary response variables (`1 ≤ r ≤ 16`).
    pub fn new(r: usize) -> Result<Self> {
        if r < 1 || r > 16 {
            return Err(Error::InvalidOptions(format!(
                "number of binary response variables must be in 1..=16, got {r}"
            )));
        }
        Ok(ProfileCoding { r })
    }

    pub fn num_variables(&self) -> usize {
        self.r
    }

    /// `K = 2^R`.
    pub fn num_profiles(&self) -> usize {
        1 << self.r
    }

    /// Whether variable `variable` (1-based) takes its high value in `profile`.
    pub fn is_high(&self, profile: usize, variable: usize) -> bool {
        debug_assert!(profile < self.num_profiles());
        debug_assert!((1..=self.r).contains(&variable));
        profile >> (self.r - variable) & 1 == 1
    }

    /// The ±½ code of `variable` in `profile`.
    pub fn value(&self, profile: usize, variable: usize) -> f64 {
        if self.is_high(profile, variable) {
            HIGH
        } else {
            LOW
        }
    }

    /// Profile index for a high/low assignment of all `R` variables.
    pub fn profile_of(&self, highs: &[bool]) -> Result<usize> {
        if highs.len() != self.r {
            return Err(Error::dim(format!(
                "profile assignment has {} entries for {} response variables",
                highs.len(),
                self.r
            )));
        }
        let mut k = 0;
        for &h in highs {
            k = k << 1 | usize::from(h);
        }
        Ok(k)
    }
}

/// One design-matrix term: a nonempty set of response variables (1-based).
///
/// Displayed and parsed in the colon-joined mini-language: `"2"`, `"1:3"`,
/// `"1:2:3"`. Variable order within a term is irrelevant; `"3:1"` equals
/// `"1:3"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    vars: Vec<usize>,
}

impl Term {
    pub fn new(vars: &[usize]) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::InvalidTerm {
                text: String::new(),
                reason: "a term must name at least one variable".into(),
            });
        }
        let mut sorted = vars.to_vec();
        sorted.sort_unstable();
        if sorted[0] == 0 {
            return Err(Error::InvalidTerm {
                text: format!("{vars:?}"),
                reason: "variables are numbered from 1".into(),
            });
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidTerm {
                text: format!("{vars:?}"),
                reason: "a variable appears more than once".into(),
            });
        }
        Ok(Term { vars: sorted })
    }

    /// Number of variables in the term (1 = main effect, 2 = pairwise
    /// association, …).
    pub fn order(&self) -> usize {
        self.vars.len()
    }

    /// Sorted 1-based variable indices.
    pub fn variables(&self) -> &[usize] {
        &self.vars
    }

    pub fn contains(&self, variable: usize) -> bool {
        self.vars.binary_search(&variable).is_ok()
    }

    pub fn max_variable(&self) -> usize {
        *self.vars.last().expect("terms are nonempty")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.vars {
            if !first {
                write!(f, ":")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut vars = Vec::new();
        for piece in s.split(':') {
            let piece = piece.trim();
            let v: usize = piece.parse().map_err(|_| Error::InvalidTerm {
                text: s.into(),
                reason: format!("{piece:?} is not a variable index"),
            })?;
            vars.push(v);
        }
        Term::new(&vars).map_err(|e| match e {
            Error::InvalidTerm { reason, .. } => Error::InvalidTerm { text: s.into(), reason },
            other => other,
        })
    }
}

/// An ordered, duplicate-free list of terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermSet {
    terms: Vec<Term>,
}

impl TermSet {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for t in &terms {
            if !seen.insert(t.clone()) {
                return Err(Error::DuplicateTerm { term: t.to_string() });
            }
        }
        Ok(TermSet { terms })
    }

    /// Parses a list of mini-language term strings, keeping their order.
    pub fn parse<S: AsRef<str>>(specs: &[S]) -> Result<Self> {
        let terms = specs
            .iter()
            .map(|s| s.as_ref().parse())
            .collect::<Result<Vec<Term>>>()?;
        TermSet::new(terms)
    }

    /// All main-effect terms `{1}, …, {R}`.
    pub fn main_effects(r: usize) -> Self {
        let terms = (1..=r).map(|v| Term { vars: vec![v] }).collect();
        TermSet { terms }
    }

    /// Every nonempty subset of `{1..R}`, ordered by term order and then
    /// lexicographically: for `R = 3` that is 1, 2, 3, 1:2, 1:3, 2:3, 1:2:3.
    pub fn saturated(r: usize) -> Self {
        let mut terms: Vec<Term> = (1u32..1 << r)
            .map(|mask| Term {
                vars: (1..=r).filter(|v| mask >> (v - 1) & 1 == 1).collect(),
            })
            .collect();
        terms.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.vars.cmp(&b.vars)));
        TermSet { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Term> {
        self.terms.iter()
    }

    pub fn contains(&self, term: &Term) -> bool {
        self.terms.contains(term)
    }

    pub fn index_of(&self, term: &Term) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    /// Largest term order present; 0 for an empty set.
    pub fn max_order(&self) -> usize {
        self.terms.iter().map(Term::order).max().unwrap_or(0)
    }

    /// Sorted variables appearing in at least one term.
    pub fn used_variables(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.terms.iter().flat_map(|t| t.vars.iter().copied()).collect();
        set.into_iter().collect()
    }

    /// A new set without the given terms (order of the rest preserved).
    pub fn without(&self, drop: &[Term]) -> Self {
        TermSet {
            terms: self.terms.iter().filter(|t| !drop.contains(t)).cloned().collect(),
        }
    }

    /// A new set with `term` appended.
    pub fn with(&self, term: Term) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.push(term);
        TermSet::new(terms)
    }
}

/// Builds the `K×|terms|` profile design matrix: the column for term `t` has
/// entries `∏_{r∈t} y_r` under the ±½ coding, rows in enumeration order.
pub fn build_profile_design(coding: &ProfileCoding, terms: &TermSet) -> Result<Array2<f64>> {
    if terms.is_empty() {
        return Err(Error::EmptyTermSet);
    }
    for t in terms.iter() {
        if t.max_variable() > coding.num_variables() {
            return Err(Error::TermOutOfRange {
                term: t.to_string(),
                variable: t.max_variable(),
                r: coding.num_variables(),
            });
        }
    }
    let k = coding.num_profiles();
    let mut d = Array2::zeros((k, terms.len()));
    for (j, t) in terms.iter().enumerate() {
        for row in 0..k {
            d[(row, j)] = t.variables().iter().map(|&v| coding.value(row, v)).product();
        }
    }
    Ok(d)
}

/// Outcome of a hierarchy check: which Z terms are missing from W.
#[derive(Debug, Clone)]
pub struct HierarchyReport {
    pub missing: Vec<Term>,
}

impl HierarchyReport {
    pub fn is_ok(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Checks the hierarchy requirement that every Z term also appears in W.
pub fn validate_hierarchy(z_terms: &TermSet, w_terms: &TermSet) -> HierarchyReport {
    HierarchyReport {
        missing: z_terms.iter().filter(|t| !w_terms.contains(t)).cloned().collect(),
    }
}

/// Per-column predictor encoding directive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Use the raw values.
    Passthrough,
    /// Subtract the column mean.
    Center,
    /// Subtract the mean and divide by the sample standard deviation
    /// (the `N−1` denominator).
    Standardize,
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "passthrough" => Ok(Encoding::Passthrough),
            "center" => Ok(Encoding::Center),
            "standardize" => Ok(Encoding::Standardize),
            other => Err(Error::InvalidOptions(format!(
                "unknown encoding {other:?}; expected passthrough, center, or standardize"
            ))),
        }
    }
}

/// Encodes a raw predictor table into `X`, applying one directive per column
/// and verifying full column rank.
///
/// Standardized columns come out with mean 0 and sample standard deviation 1.
/// Returns the encoded matrix together with the (unchanged) column labels.
pub fn encode_predictors(
    table: &Array2<f64>,
    labels: &[String],
    directives: &[Encoding],
) -> Result<(Array2<f64>, Vec<String>)> {
    let (n, p) = table.dim();
    if labels.len() != p || directives.len() != p {
        return Err(Error::dim(format!(
            "{p} predictor columns but {} labels and {} directives",
            labels.len(),
            directives.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidOptions(format!(
            "predictor encoding needs at least two rows, got {n}"
        )));
    }
    for j in 0..p {
        for i in 0..n {
            if !table[(i, j)].is_finite() {
                return Err(Error::NonFinite { column: labels[j].clone(), row: i });
            }
        }
    }

    let mut x = table.to_owned();
    for (j, directive) in directives.iter().enumerate() {
        if *directive == Encoding::Passthrough {
            continue;
        }
        let mut col = x.column_mut(j);
        let mean = col.sum() / n as f64;
        col.mapv_inplace(|v| v - mean);
        if *directive == Encoding::Standardize {
            let (lo, hi) = table
                .column(j)
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if lo == hi {
                return Err(Error::ZeroVariance { column: labels[j].clone() });
            }
            let sd = (col.iter().map(|v| v * v).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            col.mapv_inplace(|v| v / sd);
        }
    }

    let dependent = dependent_columns(&x);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient {
            name: "predictor matrix X".into(),
            columns: dependent.iter().map(|&j| labels[j].clone()).collect(),
        });
    }
    Ok((x, labels.to_vec()))
}

/// The three design matrices of one model plus their metadata.
///
/// `x` is `N×P` (full column rank, no intercept column — the intercept role is
/// carried by `W`), `z` is `K×Q`, and `w` is `K×T`. Profile-built sets carry
/// their coding and term lists; sets from raw matrices
/// ([`DesignSet::from_matrices`]) leave those `None`, which disables the
/// term-based interpretation helpers but none of the fitting machinery.
#[derive(Debug, Clone)]
pub struct DesignSet {
    pub x: Array2<f64>,
    pub z: Array2<f64>,
    pub w: Array2<f64>,
    pub x_labels: Vec<String>,
    pub coding: Option<ProfileCoding>,
    pub z_terms: Option<TermSet>,
    pub w_terms: Option<TermSet>,
}

impl DesignSet {
    /// Builds Z and W from profile terms and validates everything: term
    /// ranges, the Z ⊆ W hierarchy, X rank, and absence of constant X
    /// columns.
    pub fn from_profile(
        coding: ProfileCoding,
        z_terms: TermSet,
        w_terms: TermSet,
        x: Array2<f64>,
        x_labels: Vec<String>,
    ) -> Result<Self> {
        let report = validate_hierarchy(&z_terms, &w_terms);
        if !report.is_ok() {
            return Err(Error::HierarchyViolation {
                missing: report.missing.iter().map(Term::to_string).collect(),
            });
        }
        let z = build_profile_design(&coding, &z_terms)?;
        let w = build_profile_design(&coding, &w_terms)?;
        check_category_design(&z, "Z", |j| z_terms.terms()[j].to_string())?;
        check_category_design(&w, "W", |j| w_terms.terms()[j].to_string())?;
        check_predictor_matrix(&x, &x_labels)?;
        Ok(DesignSet {
            x,
            z,
            w,
            x_labels,
            coding: Some(coding),
            z_terms: Some(z_terms),
            w_terms: Some(w_terms),
        })
    }

    /// Accepts user-supplied Z and W for arbitrary categories (no profile
    /// structure), enforcing the same rank checks.
    pub fn from_matrices(
        x: Array2<f64>,
        x_labels: Vec<String>,
        z: Array2<f64>,
        w: Array2<f64>,
    ) -> Result<Self> {
        if z.nrows() != w.nrows() {
            return Err(Error::dim(format!(
                "Z has {} rows but W has {}; both must have one row per category",
                z.nrows(),
                w.nrows()
            )));
        }
        if z.nrows() < 2 {
            return Err(Error::InvalidOptions(format!(
                "need at least two categories, got {}",
                z.nrows()
            )));
        }
        check_category_design(&z, "Z", |j| format!("z{}", j + 1))?;
        check_category_design(&w, "W", |j| format!("w{}", j + 1))?;
        check_predictor_matrix(&x, &x_labels)?;
        Ok(DesignSet { x, z, w, x_labels, coding: None, z_terms: None, w_terms: None })
    }

    /// The same category structure with different predictor rows — used when
    /// refitting on resampled data.
    pub fn with_predictors(&self, x: Array2<f64>, x_labels: Vec<String>) -> Result<Self> {
        check_predictor_matrix(&x, &x_labels)?;
        Ok(DesignSet { x, x_labels, ..self.clone() })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of predictor columns.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Number of categories.
    pub fn k(&self) -> usize {
        self.z.nrows()
    }

    /// Number of Z columns.
    pub fn q(&self) -> usize {
        self.z.ncols()
    }

    /// Number of W columns.
    pub fn t(&self) -> usize {
        self.w.ncols()
    }
}

fn check_category_design(
    m: &Array2<f64>,
    name: &str,
    column_name: impl Fn(usize) -> String,
) -> Result<()> {
    if m.ncols() == 0 {
        return Err(Error::EmptyTermSet);
    }
    let dependent = dependent_columns(m);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient {
            name: format!("category design {name}"),
            columns: dependent.iter().map(|&j| column_name(j)).collect(),
        });
    }
    Ok(())
}

fn check_predictor_matrix(x: &Array2<f64>, labels: &[String]) -> Result<()> {
    let (n, p) = x.dim();
    if labels.len() != p {
        return Err(Error::dim(format!("{p} predictor columns but {} labels", labels.len())));
    }
    if n < 2 {
        return Err(Error::InvalidOptions(format!("need at least two observations, got {n}")));
    }
    for j in 0..p {
        let col = x.column(j);
        for (i, &v) in col.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { column: labels[j].clone(), row: i });
            }
        }
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo == hi {
            return Err(Error::ConstantPredictor { column: labels[j].clone() });
        }
    }
    let dependent = dependent_columns(x);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient {
            name: "predictor matrix X".into(),
            columns: dependent.iter().map(|&j| labels[j].clone()).collect(),
        });
    }
    Ok(())
}

/// Selects a subset of columns of `x` (used by the stepwise search and the
/// command-line layer when predictors are dropped from a model).
pub fn select_columns(x: &Array2<f64>, columns: &[usize]) -> Array2<f64> {
    x.select(Axis(1), columns)
}
