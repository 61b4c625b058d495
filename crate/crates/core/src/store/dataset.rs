use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::allocation::{DistrictTiers, TierFeatures, TierKind, TierTriple};
use crate::diagnostics::FeatureColumn;
use crate::forecast::{ForecastError, TimeSeries};

use super::{validate_id, StoreError, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    TimeSeries,
    FeatureTable,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TimeSeries => "time_series",
            Self::FeatureTable => "feature_table",
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "time_series" | "time-series" => Ok(Self::TimeSeries),
            "feature_table" | "feature-table" => Ok(Self::FeatureTable),
            other => Err(StoreError::Validation(format!("unknown dataset kind {other:?}"))),
        }
    }
}

/// Named rows by named numeric columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct FeatureTable {
    row_labels: Vec<String>,
    columns: Vec<FeatureColumn>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    row_labels: Vec<String>,
    columns: Vec<FeatureColumn>,
}

impl TryFrom<RawTable> for FeatureTable {
    type Error = StoreError;

    fn try_from(r: RawTable) -> Result<Self, Self::Error> {
        FeatureTable::new(r.row_labels, r.columns)
    }
}

impl From<FeatureTable> for RawTable {
    fn from(t: FeatureTable) -> Self {
        RawTable {
            row_labels: t.row_labels,
            columns: t.columns,
        }
    }
}

impl FeatureTable {
    pub fn new(row_labels: Vec<String>, columns: Vec<FeatureColumn>) -> Result<Self, StoreError> {
        if columns.is_empty() {
            return Err(StoreError::Validation("feature table has no columns".into()));
        }
        if row_labels.is_empty() {
            return Err(StoreError::Validation("feature table has no rows".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(StoreError::Validation(format!("duplicate column {:?}", c.name)));
            }
            if c.len() != row_labels.len() {
                return Err(StoreError::Validation(format!(
                    "column {:?} has {} values for {} rows",
                    c.name,
                    c.len(),
                    row_labels.len()
                )));
            }
            if let Some(i) = c.values().iter().position(|v| !v.is_finite()) {
                return Err(StoreError::Validation(format!(
                    "column {:?} row {i} is not finite",
                    c.name
                )));
            }
        }
        Ok(Self { row_labels, columns })
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&FeatureColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    /// Reads the table as CenH/ComH/HC rows with NoR, TC, NoS, Cost columns.
    pub fn to_district_tiers(&self) -> Result<DistrictTiers, StoreError> {
        let mut tiers: [Option<TierFeatures>; 3] = [None; 3];
        for (r, label) in self.row_labels.iter().enumerate() {
            let Some(pos) = TierKind::ALL.iter().position(|k| k.label() == label) else {
                return Err(StoreError::Validation(format!("row {label:?} is not a tier")));
            };
            let map: BTreeMap<String, f64> = self
                .columns
                .iter()
                .map(|c| (c.name.clone(), c.values()[r]))
                .collect();
            tiers[pos] = Some(
                TierFeatures::from_map(&map).map_err(|e| StoreError::Validation(e.to_string()))?,
            );
        }
        let [a, b, c] = tiers;
        match (a, b, c) {
            (Some(a), Some(b), Some(c)) => Ok(TierTriple::from_array([a, b, c])),
            _ => Err(StoreError::Validation(
                "table needs exactly one CenH, ComH and HC row".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum DatasetPayload {
    TimeSeries(TimeSeries),
    FeatureTable(FeatureTable),
}

impl DatasetPayload {
    pub fn kind(&self) -> DatasetKind {
        match self {
            Self::TimeSeries(_) => DatasetKind::TimeSeries,
            Self::FeatureTable(_) => DatasetKind::FeatureTable,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::TimeSeries(s) => s.len(),
            Self::FeatureTable(t) => t.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A stored input table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset", into = "RawDataset")]
pub struct Dataset {
    pub id: String,
    pub payload: DatasetPayload,
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    #[serde(default = "default_schema")]
    schema_version: u32,
    id: String,
    #[serde(flatten)]
    payload: DatasetPayload,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl TryFrom<RawDataset> for Dataset {
    type Error = StoreError;

    fn try_from(r: RawDataset) -> Result<Self, Self::Error> {
        if r.schema_version != SCHEMA_VERSION {
            return Err(StoreError::UnsupportedSchema(r.schema_version));
        }
        validate_id(&r.id)?;
        Ok(Dataset {
            id: r.id,
            payload: r.payload,
        })
    }
}

impl From<Dataset> for RawDataset {
    fn from(d: Dataset) -> Self {
        RawDataset {
            schema_version: SCHEMA_VERSION,
            id: d.id,
            payload: d.payload,
        }
    }
}

impl Dataset {
    pub fn new(id: impl Into<String>, payload: DatasetPayload) -> Result<Self, StoreError> {
        let id = id.into();
        validate_id(&id)?;
        Ok(Self { id, payload })
    }

    pub fn kind(&self) -> DatasetKind {
        self.payload.kind()
    }

    pub fn time_series(&self) -> Option<&TimeSeries> {
        match &self.payload {
            DatasetPayload::TimeSeries(s) => Some(s),
            DatasetPayload::FeatureTable(_) => None,
        }
    }

    pub fn feature_table(&self) -> Option<&FeatureTable> {
        match &self.payload {
            DatasetPayload::FeatureTable(t) => Some(t),
            DatasetPayload::TimeSeries(_) => None,
        }
    }

    /// Non-fatal data issues, such as a falling cumulative count.
    pub fn warnings(&self) -> Vec<String> {
        match &self.payload {
            DatasetPayload::TimeSeries(s) => s
                .decreasing_steps()
                .into_iter()
                .map(|i| format!("cumulative value decreases on {}", s.dates()[i]))
                .collect(),
            DatasetPayload::FeatureTable(_) => Vec::new(),
        }
    }
}

/// Lower-cased file stem with anything outside `[a-z0-9_-]` replaced by `-`.
pub fn id_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    let mut id: String = stem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '-' })
        .take(64)
        .collect();
    if id.is_empty() {
        id.push_str("dataset");
    }
    id
}

/// Reads a CSV file as `kind`, with the file stem as id.
pub fn import_csv(path: &Path, kind: DatasetKind) -> Result<Dataset, StoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let payload = parse_csv(&text, kind)?;
    Dataset::new(id_from_path(path), payload)
}

/// Parses CSV text. Line numbers in errors are 1-based and count the header.
pub fn parse_csv(text: &str, kind: DatasetKind) -> Result<DatasetPayload, StoreError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(&e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((line, record.iter().map(str::to_string).collect::<Vec<_>>()));
    }
    match kind {
        DatasetKind::TimeSeries => parse_series(&headers, &rows).map(DatasetPayload::TimeSeries),
        DatasetKind::FeatureTable => parse_table(&headers, &rows).map(DatasetPayload::FeatureTable),
    }
}

fn csv_error(e: &csv::Error) -> StoreError {
    let line = e.position().map_or(0, |p| p.line());
    StoreError::Parse {
        line,
        message: e.to_string(),
    }
}

fn parse_number(line: u64, field: &str, column: &str) -> Result<f64, StoreError> {
    let v: f64 = field.parse().map_err(|_| StoreError::Parse {
        line,
        message: format!("{column}: {field:?} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(StoreError::Parse {
            line,
            message: format!("{column}: {field:?} is not finite"),
        });
    }
    Ok(v)
}

fn parse_series(headers: &[String], rows: &[(u64, Vec<String>)]) -> Result<TimeSeries, StoreError> {
    let lower: Vec<String> = headers.iter().map(|h| h.to_lowercase()).collect();
    if lower != ["date", "cumulative"] {
        return Err(StoreError::Parse {
            line: 1,
            message: format!("time series header must be date,cumulative; got {}", headers.join(",")),
        });
    }
    let mut dates = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        let date = NaiveDate::parse_from_str(&fields[0], "%Y-%m-%d").map_err(|e| StoreError::Parse {
            line: *line,
            message: format!("date {:?}: {e}", fields[0]),
        })?;
        dates.push(date);
        values.push(parse_number(*line, &fields[1], "cumulative")?);
    }
    TimeSeries::new(dates, values).map_err(|e| match e {
        ForecastError::InvalidSeries { index, reason } => StoreError::Row {
            line: rows.get(index).map_or(0, |r| r.0),
            message: reason,
        },
        other => StoreError::Validation(other.to_string()),
    })
}

fn parse_table(headers: &[String], rows: &[(u64, Vec<String>)]) -> Result<FeatureTable, StoreError> {
    if rows.is_empty() {
        return Err(StoreError::Validation("feature table has no rows".into()));
    }
    // a leading column holding any non-number is taken as row labels
    let labelled = rows.iter().any(|(_, f)| f[0].parse::<f64>().is_err());
    let first = usize::from(labelled);
    if headers.len() <= first {
        return Err(StoreError::Parse {
            line: 1,
            message: "feature table needs at least one numeric column".into(),
        });
    }
    let row_labels = if labelled {
        rows.iter().map(|(_, f)| f[0].clone()).collect()
    } else {
        (1..=rows.len()).map(|i| format!("row{i}")).collect()
    };
    let mut columns = Vec::new();
    for (c, name) in headers.iter().enumerate().skip(first) {
        let values = rows
            .iter()
            .map(|(line, f)| parse_number(*line, &f[c], name))
            .collect::<Result<Vec<_>, _>>()?;
        columns.push(FeatureColumn::new(name.clone(), values).map_err(|e| StoreError::Validation(e.to_string()))?);
    }
    FeatureTable::new(row_labels, columns)
}
