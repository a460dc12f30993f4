use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::hash::canonical_json;

/// One recorded exchange on disk, `<key>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub prompt: String,
    pub response: String,
    pub model: String,
    pub temperature: f64,
}

/// Directory of fixtures. Files are never overwritten: re-recording with
/// different content fails, so new recordings go to a new directory.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn load(&self, key: &str) -> Result<Option<Fixture>, LlmError> {
        let path = self.path(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(LlmError::Fixture(format!("{}: {e}", path.display()))),
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, key: &str, fixture: &Fixture) -> Result<(), LlmError> {
        let io = |e: std::io::Error| LlmError::Fixture(e.to_string());
        fs::create_dir_all(&self.dir).map_err(io)?;
        let text = canonical_json(fixture).map_err(|e| LlmError::Fixture(e.to_string()))?;
        let path = self.path(key);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => f.write_all(text.as_bytes()).map_err(io),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                if fs::read_to_string(&path).map_err(io)? == text {
                    Ok(())
                } else {
                    Err(LlmError::FixtureExists(key.to_owned()))
                }
            }
            Err(e) => Err(io(e)),
        }
    }
}
