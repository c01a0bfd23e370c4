//! Uploaded datasets and stored profiles, persisted as plain files:
//!
//! ```text
//! <data dir>/index.json
//! <data dir>/datasets/<dataset id>.csv
//! <data dir>/profiles/<profile id>.json
//! ```
//!
//! The index is rewritten (via a temporary file and a rename) after the
//! files it points to are in place, so a crash never leaves it dangling.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use tripplan_core::auxmetrics::{build_overlay, AuxDataset, AuxOverlay};
use tripplan_core::geodata::MapGraph;
use tripplan_core::mode::Mode;
use tripplan_core::pcf::CoefficientProfile;

use crate::io::parse_aux_csv;
use crate::plan::profile_from_answers;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub name: String,
    pub point_count: usize,
    pub radius: f64,
    /// Seconds since the Unix epoch.
    pub uploaded_at: u64,
    /// Starts at 1 and grows with every upload under the same name.
    pub overlay_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub id: String,
    pub alpha: BTreeMap<String, f64>,
    pub beta_time: f64,
    pub beta_aux: BTreeMap<String, f64>,
    /// The answers the coefficients were derived from.
    pub answers: Value,
}

impl ProfileDoc {
    pub fn new(id: String, profile: &CoefficientProfile, answers: Value) -> Self {
        ProfileDoc {
            id,
            alpha: Mode::ALL.iter().map(|&m| (m.name().to_string(), profile.alpha(m))).collect(),
            beta_time: profile.beta_time,
            beta_aux: profile.beta_aux.clone(),
            answers,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Index {
    datasets: Vec<DatasetRecord>,
    profiles: Vec<String>,
    next_profile: u64,
}

/// A consistent view of the active datasets and stored profiles. Plans
/// take a snapshot; uploads publish a new one.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    /// Current record per dataset name.
    pub datasets: BTreeMap<String, DatasetRecord>,
    pub overlays: BTreeMap<String, Arc<AuxOverlay>>,
    pub profiles: BTreeMap<String, (ProfileDoc, CoefficientProfile)>,
    next_profile: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn corrupt(path: &Path, message: impl ToString) -> StoreError {
    StoreError::Corrupt {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Dataset names double as constraint identifiers.
pub fn valid_dataset_name(name: &str) -> bool {
    let mut bytes = name.bytes();
    bytes.next().is_some_and(|b| b.is_ascii_alphabetic())
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: &Path) -> Result<Self, StoreError> {
        for dir in [root.join("datasets"), root.join("profiles")] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(Store {
            root: root.to_path_buf(),
        })
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    pub fn dataset_path(&self, id: &str) -> PathBuf {
        self.root.join("datasets").join(format!("{id}.csv"))
    }

    fn profile_path(&self, id: &str) -> PathBuf {
        self.root.join("profiles").join(format!("{id}.json"))
    }

    /// Rebuilds the registry from disk, recomputing every overlay.
    pub fn load(&self, graph: &MapGraph) -> Result<Registry, StoreError> {
        let path = self.index_path();
        let index: Index = match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| corrupt(&path, e))?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Index::default(),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let mut reg = Registry {
            next_profile: index.next_profile,
            ..Registry::default()
        };
        for record in index.datasets {
            let path = self.dataset_path(&record.id);
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let points = parse_aux_csv(&text).map_err(|e| corrupt(&path, e))?;
            let dataset = AuxDataset::new(&record.id, &record.name, points, record.radius).map_err(|e| corrupt(&path, e))?;
            let overlay = build_overlay(graph, &dataset, record.radius).map_err(|e| corrupt(&path, e))?;
            reg.overlays.insert(record.name.clone(), Arc::new(overlay));
            reg.datasets.insert(record.name.clone(), record);
        }
        for id in index.profiles {
            let path = self.profile_path(&id);
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let doc: ProfileDoc = serde_json::from_str(&text).map_err(|e| corrupt(&path, e))?;
            let profile = profile_from_answers(&doc.answers).map_err(|e| corrupt(&path, e))?;
            reg.profiles.insert(id, (doc, profile));
        }
        Ok(reg)
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
        fs::rename(&tmp, path).map_err(io_err(path))
    }

    fn write_index(&self, reg: &Registry) -> Result<(), StoreError> {
        let index = Index {
            datasets: reg.datasets.values().cloned().collect(),
            profiles: reg.profiles.keys().cloned().collect(),
            next_profile: reg.next_profile,
        };
        let text = serde_json::to_vec_pretty(&index).expect("index serializes");
        self.write_atomic(&self.index_path(), &text)
    }

    /// Id and overlay version the next upload under `name` gets.
    pub fn next_dataset_id(reg: &Registry, name: &str) -> (String, u32) {
        let version = reg.datasets.get(name).map_or(1, |r| r.overlay_version + 1);
        (format!("{name}-v{version}"), version)
    }

    /// Stores a dataset's CSV and returns the registry that includes it.
    pub fn add_dataset(
        &self,
        reg: &Registry,
        record: DatasetRecord,
        csv: &[u8],
        overlay: AuxOverlay,
    ) -> Result<Registry, StoreError> {
        let mut next = reg.clone();
        self.write_atomic(&self.dataset_path(&record.id), csv)?;
        next.overlays.insert(record.name.clone(), Arc::new(overlay));
        next.datasets.insert(record.name.clone(), record);
        self.write_index(&next)?;
        Ok(next)
    }

    /// Stores a profile under a fresh id.
    pub fn add_profile(
        &self,
        reg: &Registry,
        profile: CoefficientProfile,
        answers: Value,
    ) -> Result<(Registry, ProfileDoc), StoreError> {
        let mut next = reg.clone();
        next.next_profile += 1;
        let id = format!("p{}", next.next_profile);
        let doc = ProfileDoc::new(id.clone(), &profile, answers);
        let text = serde_json::to_vec_pretty(&doc).expect("profiles serialize");
        self.write_atomic(&self.profile_path(&id), &text)?;
        next.profiles.insert(id, (doc.clone(), profile));
        self.write_index(&next)?;
        Ok((next, doc))
    }
}
