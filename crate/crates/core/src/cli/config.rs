//! Run configuration.
//!
//! Times and frequencies are given in units of `1/Delta` and `Delta`; the fit horizon is
//! in units of `1/omega_c`. Internally `omega_c = 1` and `Delta = 1 / omega_c_over_delta`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decomp::{FitConfig, FitTemplate, Weighting};
use crate::error::{Error, Result};
use crate::heom::{Block, DEFAULT_ADO_BUDGET};
use crate::response::sigma_x_ground_state;
use crate::series::Window;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub bath: BathSection,
    pub fit: FitSection,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub hierarchy: HierarchySection,
    #[serde(default)]
    pub integration: IntegrationSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    /// Where files go. Not part of the manifest, so a rerun may write elsewhere.
    #[serde(default, skip_serializing)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub s: f64,
    pub alpha: f64,
    pub omega_c_over_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Existing fit document; when absent the fit is computed (and cached).
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default = "defaults::t_max_wc")]
    pub t_max_wc: f64,
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    #[serde(default)]
    pub n_real: Option<usize>,
    #[serde(default)]
    pub n_imag: Option<usize>,
    #[serde(default)]
    pub real_oscillatory_pairs: usize,
    #[serde(default = "defaults::one")]
    pub imag_oscillatory_pairs: usize,
    #[serde(default = "defaults::multistart")]
    pub multistart: usize,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::fit_tolerance")]
    pub tolerance: f64,
    #[serde(default = "defaults::max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "defaults::ridge")]
    pub ridge: f64,
    #[serde(default = "defaults::max_rate")]
    pub max_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default = "defaults::unit")]
    pub dipole: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self { dipole: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchySection {
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default = "defaults::ado_budget")]
    pub ado_budget: u64,
    #[serde(default)]
    pub rescaling: bool,
    #[serde(default)]
    pub filter: Option<f64>,
}

impl Default for HierarchySection {
    fn default() -> Self {
        Self {
            depth: None,
            ado_budget: defaults::ado_budget(),
            rescaling: false,
            filter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `|+><+|`, spin up.
    Plus,
    /// Ground state of `Delta sigma_x`.
    SigmaXGround,
}

impl InitialState {
    pub fn block(&self) -> Block {
        match self {
            InitialState::Plus => Block::plus_state(),
            InitialState::SigmaXGround => sigma_x_ground_state(),
        }
    }
}

impl Config {
    /// Kernel analysis needs the relaxation to start from M(0) = 1.
    pub fn require_plus_start(&self, command: &str) -> Result<()> {
        if self.integration.initial != InitialState::Plus {
            return Err(Error::config(
                "integration.initial",
                format!("{command} analyzes the relaxation from \"plus\"; set initial = \"plus\""),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    /// Spacing of recorded samples.
    #[serde(default = "defaults::record_dt")]
    pub record_dt: f64,
    /// RK4 steps per recorded sample; chosen from the generator's spectral radius when absent.
    #[serde(default)]
    pub substeps: Option<usize>,
    #[serde(default = "defaults::t_eq")]
    pub t_eq: f64,
    #[serde(default = "defaults::t_resp")]
    pub t_resp: f64,
    #[serde(default = "defaults::drift_threshold")]
    pub drift_threshold: f64,
    #[serde(default = "defaults::initial")]
    pub initial: InitialState,
}

impl Default for IntegrationSection {
    fn default() -> Self {
        Self {
            record_dt: defaults::record_dt(),
            substeps: None,
            t_eq: defaults::t_eq(),
            t_resp: defaults::t_resp(),
            drift_threshold: defaults::drift_threshold(),
            initial: defaults::initial(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "defaults::omega_max")]
    pub omega_max: f64,
    #[serde(default = "defaults::d_omega")]
    pub d_omega: f64,
    #[serde(default)]
    pub window: Window,
    #[serde(default = "defaults::min_prominence")]
    pub min_prominence: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            omega_max: defaults::omega_max(),
            d_omega: defaults::d_omega(),
            window: Window::default(),
            min_prominence: defaults::min_prominence(),
        }
    }
}

/// Rate-kernel and coherence settings shared by `kernel` and `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "defaults::kernel_tail_threshold")]
    pub kernel_tail_threshold: f64,
    #[serde(default = "defaults::tail_fraction")]
    pub tail_fraction: f64,
    #[serde(default = "defaults::delta_m_omega_max")]
    pub omega_max: f64,
    #[serde(default = "defaults::delta_m_d_omega")]
    pub d_omega: f64,
    #[serde(default)]
    pub window: Window,
    #[serde(default = "defaults::ci_threshold")]
    pub ci_threshold: f64,
    #[serde(default = "defaults::omega_floor")]
    pub omega_floor: f64,
    #[serde(default = "defaults::kappa_threshold")]
    pub kappa_threshold: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            kernel_tail_threshold: defaults::kernel_tail_threshold(),
            tail_fraction: defaults::tail_fraction(),
            omega_max: defaults::delta_m_omega_max(),
            d_omega: defaults::delta_m_d_omega(),
            window: Window::default(),
            ci_threshold: defaults::ci_threshold(),
            omega_floor: defaults::omega_floor(),
            kappa_threshold: defaults::kappa_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub s: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "defaults::output_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: defaults::output_dir(),
        }
    }
}

mod defaults {
    use super::*;

    pub fn t_max_wc() -> f64 {
        500.0
    }
    pub fn samples() -> usize {
        2000
    }
    pub fn one() -> usize {
        1
    }
    pub fn unit() -> f64 {
        1.0
    }
    pub fn multistart() -> usize {
        FitConfig::default().multistart
    }
    pub fn seed() -> u64 {
        FitConfig::default().seed
    }
    pub fn fit_tolerance() -> f64 {
        FitConfig::default().tolerance
    }
    pub fn max_iterations() -> usize {
        FitConfig::default().max_iterations
    }
    pub fn ridge() -> f64 {
        FitConfig::default().ridge
    }
    pub fn max_rate() -> f64 {
        FitConfig::default().max_rate
    }
    pub fn ado_budget() -> u64 {
        DEFAULT_ADO_BUDGET as u64
    }
    pub fn record_dt() -> f64 {
        0.05
    }
    pub fn t_eq() -> f64 {
        100.0
    }
    pub fn t_resp() -> f64 {
        100.0
    }
    pub fn drift_threshold() -> f64 {
        1e-3
    }
    pub fn initial() -> InitialState {
        InitialState::Plus
    }
    pub fn omega_max() -> f64 {
        4.0
    }
    pub fn d_omega() -> f64 {
        0.02
    }
    pub fn min_prominence() -> f64 {
        0.3
    }
    pub fn kernel_tail_threshold() -> f64 {
        0.05
    }
    pub fn tail_fraction() -> f64 {
        0.1
    }
    pub fn delta_m_omega_max() -> f64 {
        6.0
    }
    pub fn delta_m_d_omega() -> f64 {
        0.01
    }
    pub fn ci_threshold() -> f64 {
        0.02
    }
    pub fn omega_floor() -> f64 {
        0.2
    }
    pub fn kappa_threshold() -> f64 {
        0.02
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

impl Config {
    /// Parses a TOML document, reporting schema violations by field path.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let message = e.inner().message().to_string();
            path_error(&e.path().to_string(), message)
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Parses the JSON form stored in a manifest.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let config: Config = serde_path_to_error::deserialize(value).map_err(|e| {
            let message = e.inner().to_string();
            path_error(&e.path().to_string(), message)
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a TOML config, or the config embedded in any output file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if super::manifest::looks_like_output(&text) {
            let manifest = super::manifest::extract(&text)?;
            let mut config = manifest.config;
            config.output = OutputSection::default();
            return Ok(config);
        }
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |path: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(
                    path,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        let b = &self.bath;
        positive("bath.s", b.s)?;
        if !(b.alpha >= 0.0 && b.alpha.is_finite()) {
            return Err(Error::config(
                "bath.alpha",
                format!("must be non-negative, got {}", b.alpha),
            ));
        }
        positive("bath.omega_c_over_delta", b.omega_c_over_delta)?;
        let f = &self.fit;
        positive("fit.t_max_wc", f.t_max_wc)?;
        positive("fit.tolerance", f.tolerance)?;
        positive("fit.max_rate", f.max_rate)?;
        if f.samples < 10 {
            return Err(Error::config("fit.samples", "need at least 10 samples"));
        }
        if f.multistart == 0 {
            return Err(Error::config("fit.multistart", "need at least one start"));
        }
        if f.ridge < 0.0 {
            return Err(Error::config("fit.ridge", "must be non-negative"));
        }
        if f.file.is_none() {
            let n_real = f.n_real.ok_or_else(|| {
                Error::config("fit.n_real", "required when fit.file is not given")
            })?;
            let n_imag = f.n_imag.ok_or_else(|| {
                Error::config("fit.n_imag", "required when fit.file is not given")
            })?;
            if 2 * f.real_oscillatory_pairs > n_real {
                return Err(Error::config(
                    "fit.real_oscillatory_pairs",
                    "more functions than fit.n_real",
                ));
            }
            if 2 * f.imag_oscillatory_pairs > n_imag {
                return Err(Error::config(
                    "fit.imag_oscillatory_pairs",
                    "more functions than fit.n_imag",
                ));
            }
        }
        positive("system.dipole", self.system.dipole)?;
        if let Some(filter) = self.hierarchy.filter {
            positive("hierarchy.filter", filter)?;
        }
        let i = &self.integration;
        positive("integration.record_dt", i.record_dt)?;
        positive("integration.t_eq", i.t_eq)?;
        positive("integration.t_resp", i.t_resp)?;
        positive("integration.drift_threshold", i.drift_threshold)?;
        for (path, t) in [
            ("integration.t_eq", i.t_eq),
            ("integration.t_resp", i.t_resp),
        ] {
            let n = (t / i.record_dt).round();
            if (n * i.record_dt - t).abs() > 1e-9 * t || n < 6.0 {
                return Err(Error::config(
                    path,
                    format!(
                        "must be a multiple (at least 6x) of integration.record_dt = {}",
                        i.record_dt
                    ),
                ));
            }
        }
        if i.substeps == Some(0) {
            return Err(Error::config("integration.substeps", "must be at least 1"));
        }
        let sp = &self.spectrum;
        positive("spectrum.omega_max", sp.omega_max)?;
        positive("spectrum.d_omega", sp.d_omega)?;
        window_ok("spectrum.window", &sp.window)?;
        if !(sp.min_prominence >= 0.0) {
            return Err(Error::config(
                "spectrum.min_prominence",
                "must be non-negative",
            ));
        }
        let a = &self.analysis;
        positive("analysis.omega_max", a.omega_max)?;
        positive("analysis.d_omega", a.d_omega)?;
        positive("analysis.kernel_tail_threshold", a.kernel_tail_threshold)?;
        positive("analysis.ci_threshold", a.ci_threshold)?;
        positive("analysis.kappa_threshold", a.kappa_threshold)?;
        window_ok("analysis.window", &a.window)?;
        if !(a.tail_fraction > 0.0 && a.tail_fraction <= 1.0) {
            return Err(Error::config(
                "analysis.tail_fraction",
                "must lie in (0, 1]",
            ));
        }
        if !(a.omega_floor >= 0.0) {
            return Err(Error::config(
                "analysis.omega_floor",
                "must be non-negative",
            ));
        }
        if let Some(sw) = &self.sweep {
            for (path, grid) in [("sweep.s", &sw.s), ("sweep.alpha", &sw.alpha)] {
                if grid.is_empty() {
                    return Err(Error::config(path, "must not be empty"));
                }
                if grid.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::config(path, "must be strictly ascending"));
                }
            }
            if sw.s.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::config("sweep.s", "exponents must be positive"));
            }
            if sw.alpha.iter().any(|&a| !(a >= 0.0)) {
                return Err(Error::config(
                    "sweep.alpha",
                    "couplings must be non-negative",
                ));
            }
        }
        Ok(())
    }

    /// Tunneling amplitude in internal units.
    pub fn delta(&self) -> f64 {
        1.0 / self.bath.omega_c_over_delta
    }

    /// Hierarchy depth, required by every propagating command.
    pub fn depth(&self) -> Result<usize> {
        self.hierarchy
            .depth
            .ok_or_else(|| Error::config("hierarchy.depth", "required for propagation"))
    }

    /// Optimizer settings for the configured templates.
    pub fn fit_config(&self) -> FitConfig {
        let f = &self.fit;
        let template = |n: usize, pairs: usize| FitTemplate {
            decays: n - 2 * pairs,
            oscillatory_pairs: pairs,
            linear_pairs: 0,
        };
        FitConfig {
            real: template(f.n_real.unwrap_or(0), f.real_oscillatory_pairs),
            imag: template(f.n_imag.unwrap_or(0), f.imag_oscillatory_pairs),
            multistart: f.multistart,
            seed: f.seed,
            tolerance: f.tolerance,
            max_iterations: f.max_iterations,
            weighting: Weighting::Uniform,
            ridge: f.ridge,
            max_rate: f.max_rate,
        }
    }
}

fn window_ok(path: &str, window: &Window) -> Result<()> {
    match *window {
        Window::None => Ok(()),
        Window::Exponential { tau } if tau > 0.0 => Ok(()),
        Window::CosineTaper { fraction } if fraction > 0.0 && fraction <= 1.0 => Ok(()),
        _ => Err(Error::config(
            path,
            format!("invalid window {}", window.label()),
        )),
    }
}

/// Turns "missing field `x`" at `a.b` into a path `a.b.x`.
fn path_error(path: &str, message: String) -> Error {
    let base = if path == "." {
        String::new()
    } else {
        path.to_string()
    };
    if let Some(field) = message
        .strip_prefix("missing field `")
        .and_then(|r| r.split('`').next())
    {
        let full = if base.is_empty() {
            field.to_string()
        } else {
            format!("{base}.{field}")
        };
        return Error::config(full, "missing required key");
    }
    Error::config(
        if base.is_empty() {
            "<document>".to_string()
        } else {
            base
        },
        message,
    )
}
