//! Data ingestion: CSV file + config → observations and design matrices.
//!
//! The flow is deliberately plain: read every record up front, locate the
//! configured columns in the header, turn response cells into category
//! indices (joint high/low profiles in profile mode, sorted distinct labels
//! in category mode), parse predictor cells as numbers, and hand everything
//! to the library's design builders, which enforce rank, hierarchy, and
//! encoding rules. Every data error names the offending row (1-based, not
//! counting the header) and column, so a message like `row 3, column
//! "alcohol": unknown response label "maybe"` points at the cell to fix.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use csv::{ReaderBuilder, StringRecord, Trim};
use mcd::ndarray::Array2;
use mcd::{DesignSet, Observations, ProfileCoding, TermSet};

use crate::config::{Config, Mode};

/// Everything a command needs after ingestion.
pub struct Ingested {
    pub g: Observations,
    pub d: DesignSet,
    /// Response column names in variable order (profile mode; empty otherwise).
    pub response_names: Vec<String>,
    /// One display label per category: joined response values in profile
    /// mode (`"yes.no.yes"`), the sorted labels in category mode.
    pub category_labels: Vec<String>,
    /// Display names for the Z columns (term names through the response
    /// columns in profile mode, category or `z1..` labels otherwise).
    pub z_names: Vec<String>,
    /// Display names for the W columns, same conventions as `z_names`.
    pub w_names: Vec<String>,
    /// Predictor indices the config marks as `forced = true`.
    pub forced_x: Vec<usize>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<StringRecord>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open data file {}", path.display()))?;
    let header: Vec<String> =
        reader.headers().context("reading the header row")?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading data row {}", i + 1))?;
        rows.push(record);
    }
    if rows.len() < 2 {
        bail!("the data file has {} data row(s); at least 2 are needed", rows.len());
    }
    Ok(Table { header, rows })
}

fn find_column(table: &Table, name: &str) -> Result<usize> {
    table
        .header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| anyhow!("column {:?} is not in the data header {:?}", name, table.header))
}

fn cell<'a>(table: &'a Table, row: usize, col: usize) -> &'a str {
    table.rows[row].get(col).unwrap_or("")
}

fn numeric_cell(table: &Table, row: usize, col: usize) -> Result<f64> {
    let text = cell(table, row, col);
    let value: f64 = text.parse().map_err(|_| {
        anyhow!(
            "row {}, column {:?}: cannot parse {text:?} as a number",
            row + 1,
            table.header[col]
        )
    })?;
    if !value.is_finite() {
        bail!("row {}, column {:?}: non-finite value {text:?}", row + 1, table.header[col]);
    }
    Ok(value)
}

/// Builds the predictor matrix from the configured columns and applies the
/// per-column encoding directives.
fn build_predictors(
    table: &Table,
    config: &Config,
) -> Result<(Array2<f64>, Vec<String>, Vec<usize>)> {
    let n = table.rows.len();
    let p = config.predictors.len();
    let mut raw = Array2::zeros((n, p));
    let mut labels = Vec::with_capacity(p);
    let mut directives = Vec::with_capacity(p);
    let mut forced = Vec::new();
    for (j, predictor) in config.predictors.iter().enumerate() {
        let col = find_column(table, &predictor.column)?;
        for i in 0..n {
            raw[(i, j)] = numeric_cell(table, i, col)?;
        }
        labels.push(predictor.column.clone());
        directives.push(predictor.encoding()?);
        if predictor.forced {
            forced.push(j);
        }
    }
    let (x, labels) = mcd::design::encode_predictors(&raw, &labels, &directives)
        .context("encoding the predictor columns")?;
    Ok((x, labels, forced))
}

/// Maps a term label like `"1:3"` to response-column names, `"alcohol:marijuana"`.
pub fn term_display(term: &mcd::Term, response_names: &[String]) -> String {
    term.variables()
        .iter()
        .map(|&v| response_names[v - 1].as_str())
        .collect::<Vec<_>>()
        .join(":")
}

fn ingest_profile(table: &Table, config: &Config) -> Result<Ingested> {
    let response_names: Vec<String> = config.response_columns().to_vec();
    let high = config.responses.high.as_deref().expect("validated by config::load");
    let low = config.responses.low.as_deref().expect("validated by config::load");
    let coding = ProfileCoding::new(response_names.len())?;

    let response_cols: Vec<usize> = response_names
        .iter()
        .map(|name| find_column(table, name))
        .collect::<Result<_>>()?;

    let mut indices = Vec::with_capacity(table.rows.len());
    let mut highs = vec![false; response_names.len()];
    for i in 0..table.rows.len() {
        for (v, &col) in response_cols.iter().enumerate() {
            let text = cell(table, i, col);
            highs[v] = if text == high {
                true
            } else if text == low {
                false
            } else {
                bail!(
                    "row {}, column {:?}: unknown response label {text:?} (expected {high:?} or {low:?})",
                    i + 1,
                    response_names[v]
                );
            };
        }
        indices.push(coding.profile_of(&highs)?);
    }
    let g = Observations::from_indices(&indices, coding.num_profiles())?;

    let z_terms = TermSet::parse(config.model.z.as_deref().expect("validated by config::load"))
        .context("[model] z")?;
    let w_terms = TermSet::parse(config.model.w.as_deref().expect("validated by config::load"))
        .context("[model] w")?;
    let z_names = z_terms.iter().map(|t| term_display(t, &response_names)).collect();
    let w_names = w_terms.iter().map(|t| term_display(t, &response_names)).collect();

    let (x, x_labels, forced_x) = build_predictors(table, config)?;
    let d = DesignSet::from_profile(coding, z_terms, w_terms, x, x_labels)
        .context("building the design matrices")?;

    let category_labels = (0..coding.num_profiles())
        .map(|k| {
            (1..=coding.num_variables())
                .map(|v| if coding.is_high(k, v) { high } else { low })
                .collect::<Vec<_>>()
                .join(".")
        })
        .collect();

    Ok(Ingested {
        g,
        d,
        response_names,
        category_labels,
        z_names,
        w_names,
        forced_x,
    })
}

/// Reads a headerless numeric CSV as a matrix; every row must have the same
/// number of fields.
fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .trim(Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open matrix file {}", path.display()))?;
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading row {} of the matrix", i + 1))?;
        let width = record.len();
        if *ncols.get_or_insert(width) != width {
            bail!(
                "row {} of {} has {} fields where earlier rows have {}",
                i + 1,
                path.display(),
                width,
                ncols.unwrap()
            );
        }
        for (j, text) in record.iter().enumerate() {
            let value: f64 = text.parse().map_err(|_| {
                anyhow!(
                    "row {}, field {} of {}: cannot parse {text:?} as a number",
                    i + 1,
                    j + 1,
                    path.display()
                )
            })?;
            values.push(value);
        }
        nrows += 1;
    }
    let ncols = ncols.unwrap_or(0);
    Array2::from_shape_vec((nrows, ncols), values).context("assembling the matrix")
}

/// `K×(K−1)` indicator contrasts against the first (reference) category:
/// column `j` is 1 on category `j+1` and 0 elsewhere.
fn indicator_contrasts(k: usize) -> Array2<f64> {
    Array2::from_shape_fn((k, k - 1), |(i, j)| if i == j + 1 { 1.0 } else { 0.0 })
}

fn ingest_category(table: &Table, config: &Config, config_dir: &Path) -> Result<Ingested> {
    let response = config.responses.column.as_deref().expect("validated by config::load");
    let col = find_column(table, response)?;

    let labels: BTreeSet<&str> = (0..table.rows.len()).map(|i| cell(table, i, col)).collect();
    if labels.iter().any(|l| l.is_empty()) {
        let row = (0..table.rows.len()).find(|&i| cell(table, i, col).is_empty()).unwrap();
        bail!("row {}, column {response:?}: empty response cell", row + 1);
    }
    let labels: Vec<String> = labels.into_iter().map(String::from).collect();
    let k = labels.len();
    if k < 2 {
        bail!("response column {response:?} has {k} distinct label(s); at least 2 are needed");
    }

    let indices: Vec<usize> = (0..table.rows.len())
        .map(|i| {
            let text = cell(table, i, col);
            labels.binary_search_by(|l| l.as_str().cmp(text)).expect("label set was built from these cells")
        })
        .collect();
    let g = Observations::from_indices(&indices, k)?;

    let (z, w, z_names, w_names) = match (&config.model.z_matrix, &config.model.w_matrix) {
        (Some(z_path), Some(w_path)) => {
            let z = read_matrix(&config_dir.join(z_path))?;
            let w = read_matrix(&config_dir.join(w_path))?;
            for (name, m) in [("z_matrix", &z), ("w_matrix", &w)] {
                if m.nrows() != k {
                    bail!(
                        "{name} has {} rows but the response column has {k} categories",
                        m.nrows()
                    );
                }
            }
            let z_names = (1..=z.ncols()).map(|q| format!("z{q}")).collect();
            let w_names = (1..=w.ncols()).map(|t| format!("w{t}")).collect();
            (z, w, z_names, w_names)
        }
        _ => {
            // Default: indicator contrasts against the first sorted label,
            // for both the category scores and the intercepts.
            let z = indicator_contrasts(k);
            let names: Vec<String> = labels[1..].to_vec();
            (z.clone(), z, names.clone(), names)
        }
    };

    let (x, x_labels, forced_x) = build_predictors(table, config)?;
    let d = DesignSet::from_matrices(x, x_labels, z, w)
        .context("building the design matrices")?;

    Ok(Ingested {
        g,
        d,
        response_names: Vec::new(),
        category_labels: labels,
        z_names,
        w_names,
        forced_x,
    })
}

/// Reads and validates the data file against the config. `config_dir`
/// anchors any relative matrix-file paths mentioned by the config.
pub fn ingest(data_path: &Path, config: &Config, config_dir: &Path) -> Result<Ingested> {
    let table = read_table(data_path)?;
    match config.mode {
        Mode::Profile => ingest_profile(&table, config),
        Mode::Category => ingest_category(&table, config, config_dir),
    }
}
