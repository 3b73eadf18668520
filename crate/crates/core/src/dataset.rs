//! County profiles and daily case series: ingestion, name normalization,
//! correlation pruning and min-max scaling.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::stats::pearson;

/// A county name together with its merge key.
///
/// Equality, ordering and hashing only look at the normalized key, so two
/// spellings of the same county compare equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountyKey {
    pub raw_name: String,
    pub normalized: String,
}

impl CountyKey {
    pub fn as_str(&self) -> &str {
        &self.normalized
    }

    /// Key with spaces replaced by underscores, for per-county file names.
    pub fn file_stem(&self) -> String {
        self.normalized.replace(' ', "_")
    }
}

impl PartialEq for CountyKey {
    fn eq(&self, other: &Self) -> bool {
        self.normalized == other.normalized
    }
}

impl Eq for CountyKey {}

impl Hash for CountyKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.normalized.hash(state);
    }
}

impl PartialOrd for CountyKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CountyKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.normalized.cmp(&other.normalized)
    }
}

impl fmt::Display for CountyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.normalized)
    }
}

/// Builds the merge key for a county name.
///
/// Accented letters are decomposed and their combining marks removed, ASCII
/// letters are lowercased and runs of whitespace collapse to one space.
/// Hyphens survive; any other character (apostrophes, punctuation, letters
/// with no ASCII base) is dropped.
pub fn normalize_name(raw: &str) -> Result<CountyKey> {
    let mut normalized = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.nfd() {
        if is_combining_mark(c) {
            continue;
        }
        if c.is_whitespace() {
            pending_space = !normalized.is_empty();
            continue;
        }
        let c = c.to_ascii_lowercase();
        if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' {
            if pending_space {
                normalized.push(' ');
                pending_space = false;
            }
            normalized.push(c);
        }
    }
    if normalized.is_empty() {
        return Err(Error::EmptyName);
    }
    Ok(CountyKey {
        raw_name: raw.trim().to_string(),
        normalized,
    })
}

/// Per-county numeric features, one row per county.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    county_keys: Vec<CountyKey>,
    feature_names: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(
        county_keys: Vec<CountyKey>,
        feature_names: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if county_keys.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} county keys for {} rows",
                county_keys.len(),
                values.len()
            )));
        }
        if let Some(row) = values.iter().find(|r| r.len() != feature_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "row of width {} in a matrix with {} features",
                row.len(),
                feature_names.len()
            )));
        }
        let mut seen = HashSet::with_capacity(county_keys.len());
        for key in &county_keys {
            if !seen.insert(key.normalized.as_str()) {
                return Err(Error::DuplicateCounty(key.normalized.clone()));
            }
        }
        Ok(Self {
            county_keys,
            feature_names,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn county_keys(&self) -> &[CountyKey] {
        &self.county_keys
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    pub fn position(&self, key: &CountyKey) -> Option<usize> {
        self.county_keys.iter().position(|k| k == key)
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            county_keys: self.county_keys.clone(),
            feature_names: columns.iter().map(|&j| self.feature_names[j].clone()).collect(),
            values: self
                .values
                .iter()
                .map(|r| columns.iter().map(|&j| r[j]).collect())
                .collect(),
        }
    }
}

/// Which column holds the county name, and optionally which numeric columns
/// to keep (all others when `None`).
#[derive(Debug, Clone)]
pub struct ProfileSchema {
    pub name_col: String,
    pub columns: Option<Vec<String>>,
}

impl ProfileSchema {
    pub fn new(name_col: impl Into<String>) -> Self {
        Self {
            name_col: name_col.into(),
            columns: None,
        }
    }
}

pub fn load_profiles(path: impl AsRef<Path>, schema: &ProfileSchema) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_profiles(file, schema)
}

pub fn read_profiles<R: Read>(reader: R, schema: &ProfileSchema) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let name_idx = header
        .iter()
        .position(|h| h == schema.name_col)
        .ok_or_else(|| Error::MissingNameColumn(schema.name_col.clone()))?;

    let numeric: Vec<(usize, String)> = match &schema.columns {
        Some(wanted) => wanted
            .iter()
            .map(|w| {
                header
                    .iter()
                    .position(|h| h == w)
                    .map(|j| (j, w.clone()))
                    .ok_or_else(|| Error::Parse {
                        row: 1,
                        column: w.clone(),
                        detail: "column missing from header".into(),
                    })
            })
            .collect::<Result<_>>()?,
        None => header
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != name_idx)
            .map(|(j, h)| (j, h.to_string()))
            .collect(),
    };

    let mut keys = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // line 1 is the header
        let row = i + 2;
        let name = record.get(name_idx).unwrap_or_default();
        let key = normalize_name(name).map_err(|_| Error::Parse {
            row,
            column: schema.name_col.clone(),
            detail: "empty county name".into(),
        })?;
        let parsed = numeric
            .iter()
            .map(|(j, col)| {
                let cell = record.get(*j).unwrap_or_default();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        row,
                        column: col.clone(),
                        detail: format!("`{cell}` is not a number"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        keys.push(key);
        values.push(parsed);
    }
    FeatureMatrix::new(keys, numeric.into_iter().map(|(_, c)| c).collect(), values)
}

/// Merges profile tables given in priority order (highest first).
///
/// Rows are the counties present in every table, in the order of the first
/// table. When several tables carry a column of the same name the value from
/// the highest-priority table wins. Returns the merged matrix and the keys
/// that were dropped because some table lacked them.
pub fn merge_profiles(tables: &[FeatureMatrix]) -> Result<(FeatureMatrix, Vec<CountyKey>)> {
    let Some(first) = tables.first() else {
        return Err(Error::EmptyMatrix);
    };
    let lookups: Vec<HashMap<&CountyKey, usize>> = tables
        .iter()
        .map(|t| t.county_keys.iter().enumerate().map(|(i, k)| (k, i)).collect())
        .collect();

    // (table, column) source for each output column
    let mut names = Vec::new();
    let mut sources = Vec::new();
    let mut seen = HashSet::new();
    for (t, table) in tables.iter().enumerate() {
        for (j, name) in table.feature_names.iter().enumerate() {
            if seen.insert(name.clone()) {
                names.push(name.clone());
                sources.push((t, j));
            }
        }
    }

    let mut keys = Vec::new();
    let mut dropped = Vec::new();
    let mut values = Vec::new();
    for key in &first.county_keys {
        let rows: Option<Vec<usize>> = lookups.iter().map(|l| l.get(key).copied()).collect();
        match rows {
            Some(rows) => {
                keys.push(key.clone());
                values.push(
                    sources
                        .iter()
                        .map(|&(t, j)| tables[t].values[rows[t]][j])
                        .collect(),
                );
            }
            None => dropped.push(key.clone()),
        }
    }
    Ok((FeatureMatrix::new(keys, names, values)?, dropped))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub matrix: FeatureMatrix,
    /// Columns removed for exceeding the correlation threshold.
    pub dropped: Vec<String>,
    /// Zero-variance columns, removed before the correlation scan.
    pub degenerate: Vec<String>,
}

/// Greedy correlation pruning in column order: a column is dropped when its
/// absolute Pearson correlation with any already retained column exceeds
/// `threshold`. Zero-variance columns are dropped up front and reported.
pub fn prune_correlated(m: &FeatureMatrix, threshold: f64) -> Result<PruneOutcome> {
    if m.n_cols() < 2 {
        return Err(Error::TooFewColumns {
            needed: 2,
            got: m.n_cols(),
        });
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "correlation threshold {threshold} outside (0, 1]"
        )));
    }
    let columns: Vec<Vec<f64>> = (0..m.n_cols()).map(|j| m.column(j)).collect();
    let mut degenerate = Vec::new();
    let mut dropped = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        if is_constant(col) {
            degenerate.push(m.feature_names[j].clone());
            continue;
        }
        let collides = kept.iter().any(|&a| pearson(&columns[a], col).abs() > threshold);
        if collides {
            dropped.push(m.feature_names[j].clone());
        } else {
            kept.push(j);
        }
    }
    Ok(PruneOutcome {
        matrix: m.select_columns(&kept),
        dropped,
        degenerate,
    })
}

fn is_constant(col: &[f64]) -> bool {
    col.windows(2).all(|w| w[0] == w[1])
}

/// Removes zero-variance columns, returning their names.
pub fn drop_constant_columns(m: &FeatureMatrix) -> (FeatureMatrix, Vec<String>) {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..m.n_cols() {
        if is_constant(&m.column(j)) {
            dropped.push(m.feature_names[j].clone());
        } else {
            kept.push(j);
        }
    }
    (m.select_columns(&kept), dropped)
}

/// Maps every column onto [0, 1] with `(x - min) / (max - min)`.
pub fn minmax_scale(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    let mut bounds = Vec::with_capacity(m.n_cols());
    for j in 0..m.n_cols() {
        let col = m.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // also catches NaN bounds
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(Error::DegenerateColumn(m.feature_names[j].clone()));
        }
        bounds.push((lo, hi - lo));
    }
    let values = m
        .values
        .iter()
        .map(|r| {
            r.iter()
                .zip(&bounds)
                .map(|(x, (lo, span))| (x - lo) / span)
                .collect()
        })
        .collect();
    Ok(FeatureMatrix {
        county_keys: m.county_keys.clone(),
        feature_names: m.feature_names.clone(),
        values,
    })
}

/// An inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidPeriod(format!("{start} is after {end}")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for Period {
    type Err = Error;

    /// Parses `YYYY-MM-DD..YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .trim()
            .split_once("..")
            .ok_or_else(|| Error::InvalidPeriod(format!("`{s}` lacks `..`")))?;
        let parse = |d: &str| {
            NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d")
                .map_err(|e| Error::InvalidPeriod(format!("`{d}`: {e}")))
        };
        Period::new(parse(a)?, parse(b)?)
    }
}

/// Parses a comma-separated list of periods.
pub fn parse_periods(s: &str) -> Result<Vec<Period>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// One county's gap-free daily counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSeries {
    pub county: CountyKey,
    pub dates: Vec<NaiveDate>,
    pub new_cases: Vec<u64>,
    pub new_deaths: Vec<u64>,
    pub cumulative_cases: Vec<u64>,
}

impl CaseSeries {
    /// Builds a series from daily counts starting at `start`, with
    /// cumulative totals counted from zero.
    pub fn from_daily(
        county: CountyKey,
        start: NaiveDate,
        new_cases: Vec<u64>,
        new_deaths: Vec<u64>,
    ) -> Result<Self> {
        Self::with_offset(county, start, new_cases, new_deaths, 0)
    }

    fn with_offset(
        county: CountyKey,
        start: NaiveDate,
        new_cases: Vec<u64>,
        new_deaths: Vec<u64>,
        base: u64,
    ) -> Result<Self> {
        if new_cases.is_empty() {
            return Err(Error::EmptySeries(county.normalized));
        }
        if new_cases.len() != new_deaths.len() {
            return Err(Error::InvalidArgument(
                "case and death vectors differ in length".into(),
            ));
        }
        let dates = (0..new_cases.len() as u64)
            .map(|i| {
                start
                    .checked_add_days(Days::new(i))
                    .ok_or(Error::DateRange(start))
            })
            .collect::<Result<Vec<_>>>()?;
        let cumulative_cases = new_cases
            .iter()
            .scan(base, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            county,
            dates,
            new_cases,
            new_deaths,
            cumulative_cases,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn start(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn end(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    pub fn total_cases(&self) -> u64 {
        self.cumulative_cases.last().copied().unwrap_or(0)
    }

    pub fn total_deaths(&self) -> u64 {
        self.new_deaths.iter().sum()
    }

    /// Daily new cases as reals, the input to the forecasting models.
    pub fn daily_cases_f64(&self) -> Vec<f64> {
        self.new_cases.iter().map(|&c| c as f64).collect()
    }
}

/// Restricts a series to `period`. Cumulative totals keep their original
/// values (they continue from the first included day's total).
pub fn slice_period(s: &CaseSeries, p: &Period) -> Result<CaseSeries> {
    let first = s.dates.iter().position(|d| p.contains(*d));
    let Some(lo) = first else {
        return Err(Error::EmptySlice);
    };
    let hi = s.dates.iter().rposition(|d| p.contains(*d)).unwrap_or(lo) + 1;
    let base = s.cumulative_cases[lo] - s.new_cases[lo];
    CaseSeries::with_offset(
        s.county.clone(),
        s.dates[lo],
        s.new_cases[lo..hi].to_vec(),
        s.new_deaths[lo..hi].to_vec(),
        base,
    )
}

/// A non-fatal data issue found while loading case counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadWarning {
    pub county: String,
    pub date: NaiveDate,
    pub kind: WarningKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    NegativeCasesClamped,
    NegativeDeathsClamped,
    GapFilled,
    DuplicateDateSummed,
}

#[derive(Debug, Clone, Default)]
pub struct CaseLoad {
    pub series: BTreeMap<CountyKey, CaseSeries>,
    pub report: Vec<LoadWarning>,
}

impl CaseLoad {
    /// Writes the load report as JSON lines.
    pub fn write_report<W: Write>(&self, mut w: W) -> Result<()> {
        for warning in &self.report {
            serde_json::to_writer(&mut w, warning)?;
            w.write_all(b"\n").map_err(|e| Error::io("<load report>", e))?;
        }
        Ok(())
    }
}

pub fn load_case_series(path: impl AsRef<Path>) -> Result<CaseLoad> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_case_series(file)
}

#[derive(Debug, Deserialize)]
struct CaseRow {
    date: String,
    county: String,
    new_cases: String,
    new_deaths: String,
}

/// Reads the long-format case file (`date,county,new_cases,new_deaths`).
///
/// Missing days are filled with zeros, negative counts are clamped to zero
/// and repeated `(county, date)` rows are summed; each of these is recorded
/// in the load report.
pub fn read_case_series<R: Read>(reader: R) -> Result<CaseLoad> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut raw: BTreeMap<CountyKey, BTreeMap<NaiveDate, (i64, i64)>> = BTreeMap::new();
    let mut report = Vec::new();

    for (i, rec) in rdr.deserialize::<CaseRow>().enumerate() {
        let row = i + 2;
        let rec = rec?;
        let parse_err = |column: &str, detail: String| Error::Parse {
            row,
            column: column.into(),
            detail,
        };
        let date = NaiveDate::parse_from_str(&rec.date, "%Y-%m-%d")
            .map_err(|e| parse_err("date", format!("`{}`: {e}", rec.date)))?;
        let county = normalize_name(&rec.county).map_err(|_| parse_err("county", "empty name".into()))?;
        let cases: i64 = rec
            .new_cases
            .parse()
            .map_err(|_| parse_err("new_cases", format!("`{}` is not an integer", rec.new_cases)))?;
        let deaths: i64 = rec
            .new_deaths
            .parse()
            .map_err(|_| parse_err("new_deaths", format!("`{}` is not an integer", rec.new_deaths)))?;
        let days = raw.entry(county.clone()).or_default();
        if let Some(slot) = days.get_mut(&date) {
            report.push(LoadWarning {
                county: county.normalized.clone(),
                date,
                kind: WarningKind::DuplicateDateSummed,
                detail: format!("row {row} repeats this date"),
            });
            slot.0 += cases;
            slot.1 += deaths;
        } else {
            days.insert(date, (cases, deaths));
        }
    }

    let mut series = BTreeMap::new();
    for (county, days) in raw {
        let (Some(&start), Some(&end)) = (days.keys().next(), days.keys().next_back()) else {
            return Err(Error::EmptySeries(county.normalized));
        };
        let mut cases = Vec::new();
        let mut deaths = Vec::new();
        let mut date = start;
        while date <= end {
            let (c, d) = match days.get(&date) {
                Some(&v) => v,
                None => {
                    report.push(LoadWarning {
                        county: county.normalized.clone(),
                        date,
                        kind: WarningKind::GapFilled,
                        detail: "missing day filled with zero counts".into(),
                    });
                    (0, 0)
                }
            };
            if c < 0 {
                report.push(LoadWarning {
                    county: county.normalized.clone(),
                    date,
                    kind: WarningKind::NegativeCasesClamped,
                    detail: format!("new_cases {c} clamped to 0"),
                });
            }
            if d < 0 {
                report.push(LoadWarning {
                    county: county.normalized.clone(),
                    date,
                    kind: WarningKind::NegativeDeathsClamped,
                    detail: format!("new_deaths {d} clamped to 0"),
                });
            }
            cases.push(c.max(0) as u64);
            deaths.push(d.max(0) as u64);
            date = date.succ_opt().ok_or(Error::DateRange(date))?;
        }
        let s = CaseSeries::from_daily(county.clone(), start, cases, deaths)?;
        series.insert(county, s);
    }
    Ok(CaseLoad { series, report })
}
