//! On-disk cache of fits and equilibrium states, keyed by content hashes.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::decomp::CorrelationFit;
use crate::error::Result;
use crate::heom::{read_checkpoint, write_checkpoint, AdoState, CheckpointHeader, HierarchySpace};
use crate::io::write_atomic;

/// Overrides the cache location.
pub const CACHE_ENV: &str = "SBHEOM_CACHE_DIR";

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

/// Relaxation record stored next to the equilibrium checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxRecord {
    pub record_dt: f64,
    pub m: Vec<f64>,
    pub drift: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// `$SBHEOM_CACHE_DIR`, else the user cache directory, else `.sbheom-cache`.
    pub fn from_env() -> Self {
        if let Some(dir) = std::env::var_os(CACHE_ENV).filter(|d| !d.is_empty()) {
            return Self::new(dir);
        }
        if let Some(dir) = std::env::var_os("XDG_CACHE_HOME").filter(|d| !d.is_empty()) {
            return Self::new(Path::new(&dir).join("sbheom"));
        }
        if let Some(home) = std::env::var_os("HOME").filter(|d| !d.is_empty()) {
            return Self::new(Path::new(&home).join(".cache").join("sbheom"));
        }
        Self::new(".sbheom-cache")
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{key}.{ext}"))
    }

    pub fn load_fit(&self, key: &str) -> Option<CorrelationFit> {
        let path = self.path(key, "fit.json");
        let text = fs::read_to_string(&path).ok()?;
        match CorrelationFit::from_document(&text) {
            Ok(fit) => Some(fit),
            Err(e) => {
                warn!("ignoring unreadable cache entry {}: {e}", path.display());
                None
            }
        }
    }

    pub fn store_fit(&self, key: &str, fit: &CorrelationFit) -> Result<()> {
        write_atomic(&self.path(key, "fit.json"), fit.to_document().as_bytes())
    }

    pub fn load_equilibrium(
        &self,
        key: &str,
        space: Arc<HierarchySpace>,
    ) -> Option<(AdoState, RelaxRecord)> {
        let record_path = self.path(key, "relax.json");
        let state_path = self.path(key, "ckpt");
        let text = fs::read_to_string(&record_path).ok()?;
        let bytes = fs::read(&state_path).ok()?;
        let record: RelaxRecord = match serde_json::from_str(&text) {
            Ok(r) => r,
            Err(e) => {
                warn!(
                    "ignoring unreadable cache entry {}: {e}",
                    record_path.display()
                );
                return None;
            }
        };
        match read_checkpoint(bytes.as_slice(), space) {
            Ok((_, state)) => Some((state, record)),
            Err(e) => {
                warn!(
                    "ignoring unreadable checkpoint {}: {e}",
                    state_path.display()
                );
                None
            }
        }
    }

    /// Stores the checkpoint first, so a reader that finds the record also finds the state.
    pub fn store_equilibrium(
        &self,
        key: &str,
        header: &CheckpointHeader,
        state: &AdoState,
        record: &RelaxRecord,
    ) -> Result<()> {
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, header, state)?;
        write_atomic(&self.path(key, "ckpt"), &bytes)?;
        let text = serde_json::to_string(record).expect("relax record serializes");
        write_atomic(&self.path(key, "relax.json"), text.as_bytes())
    }
}
