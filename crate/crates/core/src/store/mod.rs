//! File-backed persistence for scenarios and datasets.
//!
//! Layout under the store root:
//!
//! ```text
//! index.json            ids and summaries of every stored object
//! scenarios/<id>.json
//! datasets/<id>.json
//! .lock                 advisory lock: shared for reads, exclusive for writes
//! ```
//!
//! Every document carries `schema_version`; anything but 1 is rejected.
//! Objects and the index are replaced by rename, so readers never see a
//! partial file. Bundled examples are served from memory and are read-only.

mod bundled;
mod dataset;
mod scenario;

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahp::AhpError;
use crate::allocation::AllocationError;

pub use bundled::{bundled_datasets, bundled_examples, published_matrix, SYNTHETIC_DATASET_ID};
pub use dataset::{
    id_from_path, import_csv, parse_csv, Dataset, DatasetKind, DatasetPayload, FeatureTable,
};
pub use scenario::{ResolvedWeights, Scenario, ScenarioAllocation, WeightSource};

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_ID_LEN: usize = 64;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("invalid id {0:?}: use 1-64 characters from [a-z0-9_-]")]
    InvalidId(String),
    #[error("unsupported schema_version {0} (expected 1)")]
    UnsupportedSchema(u32),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Ahp(#[from] AhpError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
}

pub fn validate_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id.len() <= MAX_ID_LEN
        && id
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-');
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub id: String,
    pub district: String,
    pub bundled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modified_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub kind: DatasetKind,
    pub len: usize,
    pub bundled: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Index {
    schema_version: u32,
    scenarios: BTreeMap<String, ScenarioSummary>,
    datasets: BTreeMap<String, DatasetSummary>,
}

/// Single-writer, multi-reader store rooted at one directory.
#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

struct LockGuard(File);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes via a sibling temp file and rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| StoreError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn read_optional(path: &Path) -> Result<Option<Vec<u8>>, StoreError> {
    match fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("store documents serialize");
    out.push(b'\n');
    out
}

fn parse_doc<T: for<'de> Deserialize<'de>>(path: &Path, bytes: &[u8]) -> Result<T, StoreError> {
    serde_json::from_slice(bytes).map_err(|e| StoreError::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl Store {
    /// Opens `root`, creating the layout if it does not exist yet.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let store = Self { root: root.into() };
        for dir in [store.root.clone(), store.scenarios_dir(), store.datasets_dir()] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        let _lock = store.lock(true)?;
        let index = store.index_path();
        if read_optional(&index)?.is_none() {
            store.write_index(&Index {
                schema_version: SCHEMA_VERSION,
                ..Default::default()
            })?;
        } else {
            store.read_index()?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn scenarios_dir(&self) -> PathBuf {
        self.root.join("scenarios")
    }

    fn datasets_dir(&self) -> PathBuf {
        self.root.join("datasets")
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    fn scenario_path(&self, id: &str) -> PathBuf {
        self.scenarios_dir().join(format!("{id}.json"))
    }

    fn dataset_path(&self, id: &str) -> PathBuf {
        self.datasets_dir().join(format!("{id}.json"))
    }

    fn lock(&self, exclusive: bool) -> Result<LockGuard, StoreError> {
        let path = self.root.join(".lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(io_err(&path))?;
        if exclusive {
            file.lock().map_err(io_err(&path))?;
        } else {
            file.lock_shared().map_err(io_err(&path))?;
        }
        Ok(LockGuard(file))
    }

    fn read_index(&self) -> Result<Index, StoreError> {
        let path = self.index_path();
        let bytes = read_optional(&path)?.unwrap_or_default();
        if bytes.is_empty() {
            return Ok(Index {
                schema_version: SCHEMA_VERSION,
                ..Default::default()
            });
        }
        let index: Index = parse_doc(&path, &bytes)?;
        if index.schema_version != SCHEMA_VERSION {
            return Err(StoreError::UnsupportedSchema(index.schema_version));
        }
        Ok(index)
    }

    fn write_index(&self, index: &Index) -> Result<(), StoreError> {
        write_atomic(&self.index_path(), &to_json(index))
    }

    /// Writes one object and the index; restores the previous object if
    /// the index update fails.
    fn commit(
        &self,
        path: &Path,
        bytes: &[u8],
        update: impl FnOnce(&mut Index),
    ) -> Result<(), StoreError> {
        let mut index = self.read_index()?;
        let previous = read_optional(path)?;
        write_atomic(path, bytes)?;
        update(&mut index);
        if let Err(e) = self.write_index(&index) {
            let _ = match previous {
                Some(old) => write_atomic(path, &old),
                None => fs::remove_file(path).map_err(io_err(path)),
            };
            return Err(e);
        }
        Ok(())
    }

    pub fn list_scenarios(&self) -> Result<Vec<ScenarioSummary>, StoreError> {
        let _lock = self.lock(false)?;
        let index = self.read_index()?;
        let mut out: Vec<ScenarioSummary> = bundled_examples()
            .into_iter()
            .map(|s| ScenarioSummary {
                id: s.id,
                district: s.district,
                bundled: true,
                modified_at: None,
            })
            .collect();
        out.extend(index.scenarios.into_values());
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    fn is_bundled_scenario(id: &str) -> bool {
        bundled_examples().iter().any(|s| s.id == id)
    }

    fn is_bundled_dataset(id: &str) -> bool {
        bundled_datasets().iter().any(|d| d.id == id)
    }

    /// Bundled scenarios resolve without touching the disk.
    pub fn load_scenario(&self, id: &str) -> Result<Scenario, StoreError> {
        validate_id(id)?;
        if let Some(s) = bundled_examples().into_iter().find(|s| s.id == id) {
            return Ok(s);
        }
        let _lock = self.lock(false)?;
        let s = self.read_scenario(id)?;
        self.check_references(&s)?;
        Ok(s)
    }

    fn read_scenario(&self, id: &str) -> Result<Scenario, StoreError> {
        let path = self.scenario_path(id);
        let bytes = read_optional(&path)?.ok_or_else(|| StoreError::NotFound {
            kind: "scenario",
            id: id.to_string(),
        })?;
        let s: Scenario = parse_doc(&path, &bytes)?;
        if s.id != id {
            return Err(StoreError::Integrity(format!(
                "{} holds scenario {:?}",
                path.display(),
                s.id
            )));
        }
        Ok(s)
    }

    fn check_references(&self, s: &Scenario) -> Result<(), StoreError> {
        if let Some(d) = &s.dataset_id {
            if !Self::is_bundled_dataset(d) && !self.dataset_path(d).exists() {
                return Err(StoreError::Integrity(format!(
                    "scenario {:?} refers to missing dataset {d:?}",
                    s.id
                )));
            }
        }
        Ok(())
    }

    fn scenario_exists(&self, id: &str) -> bool {
        Self::is_bundled_scenario(id) || self.scenario_path(id).exists()
    }

    /// Inserts or replaces. Missing timestamps are set to now; given ones
    /// are kept, so a load returns exactly what was saved.
    pub fn save_scenario(&self, s: &Scenario) -> Result<Scenario, StoreError> {
        let _lock = self.lock(true)?;
        self.write_scenario(s)
    }

    /// Inserts a new scenario; an existing id is a conflict.
    pub fn create_scenario(&self, s: &Scenario) -> Result<Scenario, StoreError> {
        let _lock = self.lock(true)?;
        if self.scenario_exists(&s.id) {
            return Err(StoreError::Conflict(format!("scenario {:?} already exists", s.id)));
        }
        self.write_scenario(s)
    }

    /// Full replacement of an existing scenario. `created_at` is carried
    /// over and `modified_at` set to now.
    pub fn replace_scenario(&self, id: &str, s: &Scenario) -> Result<Scenario, StoreError> {
        validate_id(id)?;
        if s.id != id {
            return Err(StoreError::Validation(format!(
                "body id {:?} does not match path id {id:?}",
                s.id
            )));
        }
        let _lock = self.lock(true)?;
        if Self::is_bundled_scenario(id) {
            return Err(StoreError::Conflict(format!("scenario {id:?} is bundled and read-only")));
        }
        let existing = self.read_scenario(id)?;
        let mut next = s.clone();
        next.created_at = existing.created_at;
        next.modified_at = Some(Utc::now());
        self.write_scenario(&next)
    }

    fn write_scenario(&self, s: &Scenario) -> Result<Scenario, StoreError> {
        s.validate()?;
        if Self::is_bundled_scenario(&s.id) {
            return Err(StoreError::Conflict(format!(
                "scenario {:?} is bundled and read-only",
                s.id
            )));
        }
        self.check_references(s)?;
        let mut stored = s.clone();
        let now = Utc::now();
        stored.created_at.get_or_insert(now);
        stored.modified_at.get_or_insert(now);
        let summary = ScenarioSummary {
            id: stored.id.clone(),
            district: stored.district.clone(),
            bundled: false,
            modified_at: stored.modified_at,
        };
        self.commit(&self.scenario_path(&s.id), &to_json(&stored), |index| {
            index.scenarios.insert(summary.id.clone(), summary);
        })?;
        Ok(stored)
    }

    pub fn list_datasets(&self) -> Result<Vec<DatasetSummary>, StoreError> {
        let _lock = self.lock(false)?;
        let index = self.read_index()?;
        let mut out: Vec<DatasetSummary> = bundled_datasets()
            .into_iter()
            .map(|d| DatasetSummary {
                kind: d.kind(),
                len: d.payload.len(),
                id: d.id,
                bundled: true,
            })
            .collect();
        out.extend(index.datasets.into_values());
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    pub fn load_dataset(&self, id: &str) -> Result<Dataset, StoreError> {
        validate_id(id)?;
        if let Some(d) = bundled_datasets().into_iter().find(|d| d.id == id) {
            return Ok(d);
        }
        let _lock = self.lock(false)?;
        let path = self.dataset_path(id);
        let bytes = read_optional(&path)?.ok_or_else(|| StoreError::NotFound {
            kind: "dataset",
            id: id.to_string(),
        })?;
        let d: Dataset = parse_doc(&path, &bytes)?;
        if d.id != id {
            return Err(StoreError::Integrity(format!(
                "{} holds dataset {:?}",
                path.display(),
                d.id
            )));
        }
        Ok(d)
    }

    /// Inserts or replaces a dataset.
    pub fn save_dataset(&self, d: &Dataset) -> Result<(), StoreError> {
        validate_id(&d.id)?;
        if Self::is_bundled_dataset(&d.id) {
            return Err(StoreError::Conflict(format!(
                "dataset {:?} is bundled and read-only",
                d.id
            )));
        }
        let _lock = self.lock(true)?;
        let summary = DatasetSummary {
            id: d.id.clone(),
            kind: d.kind(),
            len: d.payload.len(),
            bundled: false,
        };
        self.commit(&self.dataset_path(&d.id), &to_json(d), |index| {
            index.datasets.insert(summary.id.clone(), summary);
        })
    }
}
