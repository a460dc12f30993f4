//! Project documents: one canonical JSON file holding the dataset
//! reference, model tree, findings, exchange cache and a hash-chained audit
//! log.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charts::Chart;
use crate::graph::{GraphError, ModelTree};
use crate::hash::{canonical_json, content_hash, FieldHasher};
use crate::ids::Id;
use crate::ingest::{Dataset, IngestError, Kind, RawTable};
use crate::llm::Exchange;
use crate::prompts::Level;
use crate::sem::FitResult;

pub const SCHEMA_VERSION: u32 = 1;

/// File suffix for project documents.
pub const EXTENSION: &str = ".causalproj.json";

/// `prev_hash` of the first audit entry.
pub const GENESIS: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at byte {offset} (line {line}, column {column}): {message}")]
    Parse {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    UnsupportedSchema { found: u64 },
    #[error("invalid project: {0}")]
    Invalid(String),
    #[error("audit entry {0} does not match its hash chain")]
    AuditTampered(usize),
    #[error("dataset fingerprint mismatch: project has {expected}, file has {found}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("project has no dataset")]
    NoDataset,
    #[error("project is locked by another process ({0})")]
    Locked(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Where the data lives and what it looked like when ingested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRef {
    /// Relative paths resolve against the project file's directory.
    pub path: String,
    pub fingerprint: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub schema_hints: BTreeMap<String, Kind>,
}

impl DatasetRef {
    pub fn resolve(&self, base: &Path) -> PathBuf {
        let p = Path::new(&self.path);
        if p.is_absolute() {
            p.to_owned()
        } else {
            base.join(p)
        }
    }

    /// Re-reads the data file.
    pub fn ingest(&self, base: &Path) -> Result<Dataset, StoreError> {
        let path = self.resolve(base);
        let table = RawTable::from_path(&path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_owned());
        Ok(Dataset::from_table(&name, &table, &self.schema_hints)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Debate,
    Environment,
    Latent,
}

/// A chart produced for an edge or variable, with the exchanges behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub model: Id,
    /// Edge id for debate and environment findings, variable id for latent.
    pub subject: Id,
    pub kind: FindingKind,
    pub cause_level: Level,
    pub effect_level: Level,
    pub exchange_keys: Vec<String>,
    pub chart: Chart,
}

impl Finding {
    pub fn key(&self) -> (&Id, &Id, FindingKind, Level, Level) {
        (&self.model, &self.subject, self.kind, self.cause_level, self.effect_level)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    /// RFC 3339, seconds precision.
    pub timestamp: String,
    pub actor: String,
    pub operation: String,
    pub payload_hash: String,
    pub prev_hash: String,
    pub hash: String,
}

impl AuditEntry {
    fn compute_hash(&self) -> String {
        let mut h = FieldHasher::new();
        h.field(self.seq.to_le_bytes())
            .field(&self.timestamp)
            .field(&self.actor)
            .field(&self.operation)
            .field(&self.payload_hash)
            .field(&self.prev_hash);
        h.finish()
    }
}

/// Checks every link of the chain; returns the first bad index.
pub fn verify_audit(entries: &[AuditEntry]) -> Result<(), usize> {
    let mut prev = GENESIS;
    for (i, e) in entries.iter().enumerate() {
        if e.seq != i as u64 || e.prev_hash != prev || e.hash != e.compute_hash() {
            return Err(i);
        }
        prev = &e.hash;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub schema: u32,
    pub id: Id,
    pub name: String,
    /// Domain hint for prompt personas; empty lets the model infer it.
    #[serde(default)]
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetRef>,
    pub tree: ModelTree,
    #[serde(default)]
    pub findings: Vec<Finding>,
    #[serde(default)]
    pub exchanges: BTreeMap<String, Exchange>,
    /// Latest fit per model.
    #[serde(default)]
    pub fits: BTreeMap<Id, FitResult>,
    #[serde(default)]
    pub audit: Vec<AuditEntry>,
}

impl Project {
    pub fn new(name: &str, domain: &str, tree: ModelTree) -> Self {
        Project {
            schema: SCHEMA_VERSION,
            id: Id::generate(),
            name: name.to_owned(),
            domain: domain.to_owned(),
            dataset: None,
            tree,
            findings: Vec::new(),
            exchanges: BTreeMap::new(),
            fits: BTreeMap::new(),
            audit: Vec::new(),
        }
    }

    /// Appends an audit entry for `operation` with the hash of `payload`.
    pub fn record<T: Serialize + ?Sized>(&mut self, actor: &str, operation: &str, payload: &T) {
        let prev_hash = self
            .audit
            .last()
            .map_or_else(|| GENESIS.to_owned(), |e| e.hash.clone());
        let mut entry = AuditEntry {
            seq: self.audit.len() as u64,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            actor: actor.to_owned(),
            operation: operation.to_owned(),
            payload_hash: content_hash(payload),
            prev_hash,
            hash: String::new(),
        };
        entry.hash = entry.compute_hash();
        self.audit.push(entry);
    }

    /// Stores the exchanges and replaces any finding with the same key.
    pub fn put_finding(&mut self, finding: Finding, exchanges: impl IntoIterator<Item = Exchange>) {
        for x in exchanges {
            self.exchanges.insert(x.key.clone(), x);
        }
        self.findings.retain(|f| f.key() != finding.key());
        self.findings.push(finding);
        self.findings.sort_by(|a, b| a.key().cmp(&b.key()));
    }

    pub fn fingerprint(&self) -> String {
        content_hash(self)
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.schema != SCHEMA_VERSION {
            return Err(StoreError::UnsupportedSchema {
                found: u64::from(self.schema),
            });
        }
        self.tree.validate()?;
        for f in &self.findings {
            if self.tree.get(&f.model).is_none() {
                return Err(StoreError::Invalid(format!(
                    "finding references unknown model {}",
                    f.model
                )));
            }
            if let Some(k) = f.exchange_keys.iter().find(|k| !self.exchanges.contains_key(*k)) {
                return Err(StoreError::Invalid(format!(
                    "finding references unknown exchange {k}"
                )));
            }
        }
        let mut keys = BTreeSet::new();
        if let Some(f) = self.findings.iter().find(|f| !keys.insert(f.key())) {
            return Err(StoreError::Invalid(format!(
                "duplicate {:?} finding for {} in model {}",
                f.kind, f.subject, f.model
            )));
        }
        for (k, x) in &self.exchanges {
            if k != &x.key {
                return Err(StoreError::Invalid(format!("exchange stored under {k} has key {}", x.key)));
            }
        }
        if let Some(m) = self.fits.keys().find(|m| self.tree.get(m).is_none()) {
            return Err(StoreError::Invalid(format!("fit references unknown model {m}")));
        }
        verify_audit(&self.audit).map_err(StoreError::AuditTampered)
    }

    pub fn to_json(&self) -> String {
        canonical_json(self).expect("project serializes")
    }

    /// Writes canonical JSON via a temporary file and rename.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let text = self.to_json();
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
        tmp.write_all(text.as_bytes()).map_err(io_err(path))?;
        tmp.persist(path).map_err(|e| StoreError::Io {
            path: path.display().to_string(),
            source: e.error,
        })?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Project, StoreError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
        match value.get("schema").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(found) => return Err(StoreError::UnsupportedSchema { found }),
            None => {
                return Err(StoreError::Field {
                    path: "schema".into(),
                    message: "missing or not an integer".into(),
                })
            }
        }
        let p: Project = serde_path_to_error::deserialize(value).map_err(|e| StoreError::Field {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Project, StoreError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text)
    }

    /// Loads and re-ingests the dataset, failing if its fingerprint changed.
    pub fn load_strict(path: &Path) -> Result<(Project, Dataset), StoreError> {
        let p = Self::load(path)?;
        let ds = p.load_dataset(path, true)?;
        Ok((p, ds))
    }

    /// Re-ingests the dataset relative to the project file at `path`.
    pub fn load_dataset(&self, path: &Path, strict: bool) -> Result<Dataset, StoreError> {
        let r = self.dataset.as_ref().ok_or(StoreError::NoDataset)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let ds = r.ingest(base)?;
        let found = ds.fingerprint();
        if strict && found != r.fingerprint {
            return Err(StoreError::FingerprintMismatch {
                expected: r.fingerprint.clone(),
                found,
            });
        }
        Ok(ds)
    }
}

fn parse_error(text: &str, e: &serde_json::Error) -> StoreError {
    let (line, column) = (e.line(), e.column());
    let offset = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum::<usize>()
        + column;
    StoreError::Parse {
        offset: offset.min(text.len()),
        line,
        column,
        message: e.to_string(),
    }
}

/// Advisory lock: `<project>.lock`, removed on drop.
#[derive(Debug)]
pub struct ProjectLock {
    path: PathBuf,
}

impl ProjectLock {
    pub fn acquire(project: &Path) -> Result<Self, StoreError> {
        let mut name = project.as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(ProjectLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(StoreError::Locked(path.display().to_string()))
            }
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for ProjectLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
