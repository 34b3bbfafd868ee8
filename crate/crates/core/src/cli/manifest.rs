//! Run manifests: the complete, canonical description of how an output was produced.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::Config;
use crate::decomp::{CorrelationFit, ResidualSummary};
use crate::error::{Error, Result};
use crate::series::Window;

pub const CSV_MARKER: &str = "# sbheom output";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub hash: String,
    pub n_real: usize,
    pub n_imag: usize,
    pub residual: ResidualSummary,
    pub meets_tolerance: bool,
    pub seed: u64,
}

impl FitSummary {
    pub fn of(fit: &CorrelationFit) -> Self {
        Self {
            hash: fit.hash(),
            n_real: fit.n_real(),
            n_imag: fit.n_imag(),
            residual: fit.residual,
            meets_tolerance: fit.meets_tolerance,
            seed: fit.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchySummary {
    pub n_real: usize,
    pub n_imag: usize,
    pub depth: usize,
    pub ado_count: u64,
    pub rescaled: bool,
}

/// Integrator settings in units of `1/Delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSummary {
    pub scheme: String,
    pub dt: f64,
    pub substeps: usize,
    pub record_dt: f64,
    /// Simulated spans: relaxation, then response when applicable.
    pub t_eq: f64,
    pub t_resp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub omega_c: f64,
    pub delta: f64,
    pub time: String,
    pub frequency: String,
}

/// Everything needed to regenerate an output. Carries no wall-clock time so that a
/// rerun reproduces the embedding file byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Config,
    pub units: Units,
    pub seed: u64,
    pub fit: Option<FitSummary>,
    pub hierarchy: Option<HierarchySummary>,
    pub integrator: Option<IntegratorSummary>,
    pub window: Option<Window>,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            units: Units {
                omega_c: 1.0,
                delta: config.delta(),
                time: "1/Delta".into(),
                frequency: "Delta".into(),
            },
            seed: config.fit.seed,
            fit: None,
            hierarchy: None,
            integrator: None,
            window: None,
        }
    }

    /// Compact JSON with keys in sorted order.
    pub fn canonical(&self) -> String {
        let value = serde_json::to_value(self).expect("manifest serializes");
        serde_json::to_string(&value).expect("manifest serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Comment block that opens every CSV output.
    pub fn csv_preamble(&self) -> String {
        format!(
            "{CSV_MARKER}\n# manifest_sha256: {}\n# manifest: {}\n",
            self.hash(),
            self.canonical()
        )
    }

    /// Adds `manifest` and `manifest_sha256` keys to a JSON document.
    pub fn embed_json(&self, mut doc: serde_json::Value) -> String {
        let map = doc.as_object_mut().expect("JSON outputs are objects");
        map.insert(
            "manifest".into(),
            serde_json::to_value(self).expect("manifest serializes"),
        );
        map.insert("manifest_sha256".into(), self.hash().into());
        let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
        text.push('\n');
        text
    }
}

pub fn looks_like_output(text: &str) -> bool {
    if text.starts_with(CSV_MARKER) {
        return true;
    }
    let trimmed = text.trim_start();
    trimmed.starts_with('{') && trimmed.contains("\"manifest\"")
}

/// Manifest embedded in a CSV or JSON output, with its hash checked.
pub fn extract(text: &str) -> Result<RunManifest> {
    let (value, recorded) = if text.starts_with(CSV_MARKER) {
        let mut json = None;
        let mut hash = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some(rest) = line.strip_prefix("# manifest: ") {
                json = Some(rest);
            } else if let Some(rest) = line.strip_prefix("# manifest_sha256: ") {
                hash = Some(rest.trim().to_string());
            }
        }
        let json = json.ok_or_else(|| Error::Format("output file has no manifest line".into()))?;
        let value: serde_json::Value =
            serde_json::from_str(json).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        (value, hash)
    } else {
        let doc: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("output document: {e}")))?;
        let value = doc
            .get("manifest")
            .cloned()
            .ok_or_else(|| Error::Format("document has no manifest".into()))?;
        let hash = doc
            .get("manifest_sha256")
            .and_then(|h| h.as_str())
            .map(str::to_string);
        (value, hash)
    };
    let manifest: RunManifest =
        serde_json::from_value(value).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    if let Some(recorded) = recorded {
        let actual = manifest.hash();
        if actual != recorded {
            return Err(Error::Format(format!(
                "manifest hash mismatch: recorded {recorded}, computed {actual}"
            )));
        }
    }
    Ok(manifest)
}
