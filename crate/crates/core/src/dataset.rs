//! Observational data ingestion and typed views.
//!
//! A [`Dataset`] holds one treatment column `x`, one outcome column `y`, and
//! a `d`-dimensional covariate vector per record. Categorical covariates are
//! integer-coded at load time; real-data strata are handled by exact
//! filtering before any fitting, so the kernel machinery only ever sees
//! numeric columns.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// How a covariate column is interpreted during ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Declares which CSV columns play which role.
///
/// The on-disk form is a small TOML document:
///
/// ```toml
/// treatment = "bmi"
/// outcome = "charges"
/// covariates = ["age", "sex:categorical", "smoker:categorical", "children"]
/// binary_treatment = false
///
/// [categories]
/// sex = ["female", "male"]   # optional explicit code order (code = index)
/// ```
///
/// Covariate entries are `name` (numeric) or `name:categorical`. Categorical
/// columns without an explicit `categories` entry are coded by the sorted
/// order of the distinct values observed in the file.
#[derive(Debug, Clone)]
pub struct SchemaConfig {
    pub treatment_column: String,
    pub outcome_column: String,
    pub covariate_columns: Vec<(String, ColumnKind)>,
    /// Explicit value -> code orderings for categorical columns.
    pub categories: BTreeMap<String, Vec<String>>,
    /// Declares that the treatment is binary; every `x` must then be 0 or 1.
    pub binary_treatment: bool,
}

#[derive(Debug, Deserialize)]
struct SchemaFile {
    treatment: String,
    outcome: String,
    covariates: Vec<String>,
    #[serde(default)]
    categories: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    binary_treatment: bool,
}

impl SchemaConfig {
    pub fn new(
        treatment: impl Into<String>,
        outcome: impl Into<String>,
        covariates: Vec<(String, ColumnKind)>,
    ) -> Result<Self> {
        let cfg = SchemaConfig {
            treatment_column: treatment.into(),
            outcome_column: outcome.into(),
            covariate_columns: covariates,
            categories: BTreeMap::new(),
            binary_treatment: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_binary_treatment(mut self, binary: bool) -> Self {
        self.binary_treatment = binary;
        self
    }

    pub fn with_categories(mut self, categories: BTreeMap<String, Vec<String>>) -> Self {
        self.categories = categories;
        self
    }

    /// Parses the TOML schema grammar documented on this type.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SchemaFile =
            toml::from_str(text).map_err(|e| Error::Schema(format!("schema file: {e}")))?;
        let mut covariates = Vec::with_capacity(file.covariates.len());
        for entry in &file.covariates {
            let (name, kind) = match entry.split_once(':') {
                None => (entry.as_str(), ColumnKind::Numeric),
                Some((name, "numeric")) => (name, ColumnKind::Numeric),
                Some((name, "categorical")) => (name, ColumnKind::Categorical),
                Some((_, other)) => {
                    return Err(Error::Schema(format!(
                        "covariate kind `{other}` is not `numeric` or `categorical`"
                    )))
                }
            };
            covariates.push((name.to_string(), kind));
        }
        let cfg = SchemaConfig {
            treatment_column: file.treatment,
            outcome_column: file.outcome,
            covariate_columns: covariates,
            categories: file.categories,
            binary_treatment: file.binary_treatment,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = vec![self.treatment_column.as_str(), self.outcome_column.as_str()];
        names.extend(self.covariate_columns.iter().map(|(n, _)| n.as_str()));
        for (i, a) in names.iter().enumerate() {
            if names[i + 1..].contains(a) {
                return Err(Error::Schema(format!(
                    "column `{a}` is assigned more than one role"
                )));
            }
        }
        Ok(())
    }
}

/// Column-wise equality / range constraints used to carve out a stratum.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Equal(f64),
    Between(f64, f64),
}

impl Constraint {
    fn matches(&self, v: f64) -> bool {
        match *self {
            Constraint::Equal(target) => v == target,
            Constraint::Between(lo, hi) => lo <= v && v <= hi,
        }
    }
}

/// A conjunction of per-column constraints.
#[derive(Debug, Clone, Default)]
pub struct RowFilter {
    pub clauses: Vec<(String, Constraint)>,
}

impl RowFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn equal(mut self, column: impl Into<String>, value: f64) -> Self {
        self.clauses.push((column.into(), Constraint::Equal(value)));
        self
    }

    pub fn between(mut self, column: impl Into<String>, lo: f64, hi: f64) -> Self {
        self.clauses.push((column.into(), Constraint::Between(lo, hi)));
        self
    }
}

/// Immutable observational records: `n` rows of `(x, y, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Row-major `n x d` covariate matrix.
    w: Vec<f64>,
    d: usize,
    treatment_name: String,
    outcome_name: String,
    covariate_names: Vec<String>,
    /// Known outcome domain, if declared.
    y_bounds: Option<(f64, f64)>,
    binary_treatment: bool,
    /// Rows discarded during ingestion (missing or unparsable cells).
    dropped_rows: usize,
    /// value -> code orderings for categorical columns (code = index).
    encodings: BTreeMap<String, Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from columns, validating the invariants.
    #[allow(clippy::too_many_arguments)]
    pub fn from_columns(
        x: Vec<f64>,
        y: Vec<f64>,
        w: Vec<f64>,
        d: usize,
        treatment_name: impl Into<String>,
        outcome_name: impl Into<String>,
        covariate_names: Vec<String>,
        binary_treatment: bool,
    ) -> Result<Self> {
        let n = x.len();
        if y.len() != n || w.len() != n * d || covariate_names.len() != d {
            return Err(Error::Invalid(format!(
                "column lengths disagree: x={}, y={}, w={} (d={d})",
                n,
                y.len(),
                w.len()
            )));
        }
        if x.iter().chain(&y).chain(&w).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite value in dataset".into()));
        }
        if binary_treatment && x.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Invalid(
                "treatment declared binary but a value outside {0,1} is present".into(),
            ));
        }
        Ok(Dataset {
            x,
            y,
            w,
            d,
            treatment_name: treatment_name.into(),
            outcome_name: outcome_name.into(),
            covariate_names,
            y_bounds: None,
            binary_treatment,
            dropped_rows: 0,
            encodings: BTreeMap::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn w_flat(&self) -> &[f64] {
        &self.w
    }

    pub fn w_row(&self, i: usize) -> &[f64] {
        &self.w[i * self.d..(i + 1) * self.d]
    }

    pub fn treatment_name(&self) -> &str {
        &self.treatment_name
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn binary_treatment(&self) -> bool {
        self.binary_treatment
    }

    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn y_bounds(&self) -> Option<(f64, f64)> {
        self.y_bounds
    }

    /// Declares a known outcome domain `[a, b]`.
    pub fn with_y_bounds(mut self, a: f64, b: f64) -> Result<Self> {
        if a >= b || a.is_nan() || b.is_nan() {
            return Err(Error::Invalid(format!("y bounds must satisfy a < b, got [{a}, {b}]")));
        }
        if self.y.iter().any(|&v| v < a || v > b) {
            return Err(Error::Invalid(format!(
                "an outcome value lies outside the declared bounds [{a}, {b}]"
            )));
        }
        self.y_bounds = Some((a, b));
        Ok(self)
    }

    /// Resolves a categorical value to its integer code, if the column has an
    /// encoding.
    pub fn code_for(&self, column: &str, value: &str) -> Option<f64> {
        self.encodings
            .get(column)
            .and_then(|values| values.iter().position(|v| v == value))
            .map(|i| i as f64)
    }

    pub fn encodings(&self) -> &BTreeMap<String, Vec<String>> {
        &self.encodings
    }

    fn column(&self, name: &str) -> Result<Column> {
        if name == self.treatment_name {
            return Ok(Column::Treatment);
        }
        if name == self.outcome_name {
            return Ok(Column::Outcome);
        }
        match self.covariate_names.iter().position(|c| c == name) {
            Some(j) => Ok(Column::Covariate(j)),
            None => Err(Error::UnknownColumn(name.to_string())),
        }
    }

    fn value_at(&self, col: &Column, i: usize) -> f64 {
        match *col {
            Column::Treatment => self.x[i],
            Column::Outcome => self.y[i],
            Column::Covariate(j) => self.w[i * self.d + j],
        }
    }

    /// Returns the subset of rows matching every clause, preserving order.
    /// The result may be empty; callers decide whether that is an error.
    pub fn filter_covariates(&self, filter: &RowFilter) -> Result<Dataset> {
        let cols: Vec<(Column, &Constraint)> = filter
            .clauses
            .iter()
            .map(|(name, c)| Ok((self.column(name)?, c)))
            .collect::<Result<_>>()?;
        let keep: Vec<usize> = (0..self.n())
            .filter(|&i| cols.iter().all(|(col, c)| c.matches(self.value_at(col, i))))
            .collect();
        let out = Dataset {
            x: keep.iter().map(|&i| self.x[i]).collect(),
            y: keep.iter().map(|&i| self.y[i]).collect(),
            w: keep
                .iter()
                .flat_map(|&i| self.w_row(i).iter().copied())
                .collect(),
            d: self.d,
            treatment_name: self.treatment_name.clone(),
            outcome_name: self.outcome_name.clone(),
            covariate_names: self.covariate_names.clone(),
            y_bounds: self.y_bounds,
            binary_treatment: self.binary_treatment,
            dropped_rows: 0,
            encodings: self.encodings.clone(),
        };
        Ok(out)
    }

    /// Infers an outcome domain `[a, b]` containing every observed `y`.
    ///
    /// `a = min(y) - margin * range`, `b = max(y) + margin * range`; a
    /// degenerate (constant) outcome expands by one unit on each side.
    pub fn infer_y_bounds(&self, margin_fraction: f64) -> Result<(f64, f64)> {
        if self.y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if margin_fraction < 0.0 {
            return Err(Error::Invalid("margin_fraction must be >= 0".into()));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.y {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo == hi {
            return Ok((lo - 1.0, hi + 1.0));
        }
        let range = hi - lo;
        Ok((lo - margin_fraction * range, hi + margin_fraction * range))
    }
}

enum Column {
    Treatment,
    Outcome,
    Covariate(usize),
}

/// Loads a CSV file (RFC-4180, header row required, `#` comment lines
/// allowed) under the given schema.
///
/// Rows with a missing or unparsable cell in any used column are dropped and
/// counted in [`Dataset::dropped_rows`]. An empty result is an error.
pub fn load_csv(path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    load_csv_reader(file, schema)
}

/// As [`load_csv`], reading from any source.
pub fn load_csv_reader(reader: impl std::io::Read, schema: &SchemaConfig) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let index_of = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
    };
    let xi = index_of(&schema.treatment_column)?;
    let yi = index_of(&schema.outcome_column)?;
    let wi: Vec<(usize, ColumnKind)> = schema
        .covariate_columns
        .iter()
        .map(|(name, kind)| Ok((index_of(name)?, *kind)))
        .collect::<Result<_>>()?;

    // Two passes over the in-memory records: collect category values first so
    // the coding does not depend on row order.
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    let mut encodings: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for ((name, kind), (col, _)) in schema.covariate_columns.iter().zip(&wi) {
        if *kind != ColumnKind::Categorical {
            continue;
        }
        if let Some(explicit) = schema.categories.get(name) {
            encodings.insert(name.clone(), explicit.clone());
            continue;
        }
        let mut values: Vec<String> = records
            .iter()
            .filter_map(|r| r.get(*col))
            .filter(|v| !v.is_empty())
            .map(|v| v.to_string())
            .collect();
        values.sort();
        values.dedup();
        encodings.insert(name.clone(), values);
    }

    let d = schema.covariate_columns.len();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    let mut dropped = 0usize;

    'rows: for record in &records {
        let parse = |col: usize| -> Option<f64> {
            record
                .get(col)
                .filter(|v| !v.is_empty())
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
        };
        let Some(xv) = parse(xi) else {
            dropped += 1;
            continue;
        };
        let Some(yv) = parse(yi) else {
            dropped += 1;
            continue;
        };
        let mut row = Vec::with_capacity(d);
        for ((name, kind), (col, _)) in schema.covariate_columns.iter().zip(&wi) {
            let value = match kind {
                ColumnKind::Numeric => parse(*col),
                ColumnKind::Categorical => {
                    let cell = record.get(*col).filter(|v| !v.is_empty());
                    match cell {
                        None => None,
                        Some(v) => match encodings[name].iter().position(|c| c == v) {
                            Some(code) => Some(code as f64),
                            None => {
                                return Err(Error::Schema(format!(
                                    "value `{v}` of column `{name}` has no declared code"
                                )))
                            }
                        },
                    }
                }
            };
            match value {
                Some(v) => row.push(v),
                None => {
                    dropped += 1;
                    continue 'rows;
                }
            }
        }
        x.push(xv);
        y.push(yv);
        w.extend(row);
    }

    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if schema.binary_treatment && x.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Schema(format!(
            "column `{}` declared binary but contains other values",
            schema.treatment_column
        )));
    }

    Ok(Dataset {
        x,
        y,
        w,
        d,
        treatment_name: schema.treatment_column.clone(),
        outcome_name: schema.outcome_column.clone(),
        covariate_names: schema.covariate_columns.iter().map(|(n, _)| n.clone()).collect(),
        y_bounds: None,
        binary_treatment: schema.binary_treatment,
        dropped_rows: dropped,
        encodings,
    })
}
