//! Configured pipelines shared by the commands: fit, relax, respond, analyze.
//!
//! Results are returned in units of `Delta`: times in `1/Delta`, frequencies in `Delta`.

use std::sync::Arc;

use log::info;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::cache::{Cache, RelaxRecord};
use super::config::Config;
use super::manifest::{FitSummary, HierarchySummary, IntegratorSummary, RunManifest};
use crate::analysis::{
    delta_m_spectrum, detect_ci, extract_rate_kernel, integrated_rate, CiConfig, CiVerdict, DeltaM,
    DeltaMConfig, IntegratedRate, KernelConfig, PointRunner, RateKernel, RelaxOutcome, SweepConfig,
};
use crate::bath::{correlation_series, BathSpec, CorrelationSeries, SampleGrid};
use crate::decomp::{fit_correlation, CorrelationFit};
use crate::error::{Error, Result};
use crate::heom::{
    enumerate_space, AdoState, CheckpointHeader, Generator, Rescaling, SystemSpec,
    RK4_STABILITY_MARGIN,
};
use crate::response::{
    linear_response, relax_to_equilibrium, RelaxConfig, Response, ResponseConfig,
};
use crate::series::TimeSeries;

fn sha256_json(value: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(
        serde_json::to_string(value).expect("json").as_bytes(),
    ))
}

/// Samples of `C(t)` the fit is made against.
pub fn fit_target(config: &Config) -> Result<CorrelationSeries> {
    let spec = BathSpec::new(config.bath.s, config.bath.alpha)?;
    correlation_series(
        &SampleGrid::new(config.fit.t_max_wc, config.fit.samples),
        &spec,
    )
}

/// Loads the configured fit file, or fits (through the cache).
pub fn obtain_fit(config: &Config, cache: &Cache) -> Result<CorrelationFit> {
    if let Some(path) = &config.fit.file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("fit.file", format!("{}: {e}", path.display())))?;
        return CorrelationFit::from_document(&text);
    }
    if config.bath.alpha == 0.0 {
        return Ok(CorrelationFit::uncoupled());
    }
    let key = sha256_json(&json!({
        "kind": "fit",
        "version": env!("CARGO_PKG_VERSION"),
        "s": config.bath.s,
        "alpha": config.bath.alpha,
        "fit": config.fit,
    }));
    if let Some(fit) = cache.load_fit(&key) {
        info!("fit cache hit {key}");
        return Ok(fit);
    }
    let target = fit_target(config)?;
    let fit = fit_correlation(&target, &config.fit_config())?;
    cache.store_fit(&key, &fit)?;
    Ok(fit)
}

/// Bath fit plus hierarchy generator for one configuration.
pub struct Model {
    /// The configuration with every automatic choice resolved.
    pub config: Config,
    pub fit: CorrelationFit,
    pub generator: Generator,
}

/// Relaxation in units of Delta.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub state: AdoState,
    pub m: TimeSeries,
    pub drift: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub cache_hit: bool,
}

/// Kernel and coherence diagnostics of one M(t') record.
#[derive(Debug, Clone)]
pub struct MAnalysis {
    pub kernel: RateKernel,
    pub rate: IntegratedRate,
    pub delta_m: DeltaM,
    pub ci: CiVerdict,
}

impl Model {
    pub fn build(config: &Config, cache: &Cache) -> Result<Model> {
        let fit = obtain_fit(config, cache)?;
        Self::with_fit(config, fit)
    }

    pub fn with_fit(config: &Config, fit: CorrelationFit) -> Result<Model> {
        let depth = config.depth()?;
        let space = Arc::new(enumerate_space(
            fit.n_real(),
            fit.n_imag(),
            depth,
            config.hierarchy.ado_budget as u128,
        )?);
        let system = SystemSpec {
            delta: config.delta(),
            dipole: config.system.dipole,
        };
        let rescaling = Rescaling {
            enabled: config.hierarchy.rescaling,
            filter: config.hierarchy.filter,
        };
        let generator = Generator::new(space, &fit, system, rescaling)?;
        let mut config = config.clone();
        let scale = config.bath.omega_c_over_delta;
        if config.integration.substeps.is_none() {
            let record = config.integration.record_dt * scale;
            let stable =
                0.9 * RK4_STABILITY_MARGIN / generator.spectral_radius_estimate().max(1e-12);
            let substeps = (record / stable).ceil().max(1.0) as usize;
            info!("chose {substeps} RK4 steps per record interval from the spectral radius");
            config.integration.substeps = Some(substeps);
        }
        info!(
            "omega_c/Delta = {scale}: internal units omega_c = 1, Delta = {}; {} ADOs",
            config.delta(),
            generator.space().len()
        );
        Ok(Model {
            config,
            fit,
            generator,
        })
    }

    fn scale(&self) -> f64 {
        self.config.bath.omega_c_over_delta
    }

    fn substeps(&self) -> usize {
        self.config.integration.substeps.expect("resolved in build")
    }

    /// RK4 step in internal units.
    pub fn dt_internal(&self) -> f64 {
        self.config.integration.record_dt * self.scale() / self.substeps() as f64
    }

    pub fn manifest(&self, command: &str) -> RunManifest {
        let mut m = RunManifest::new(command, &self.config);
        let space = self.generator.space();
        m.fit = Some(FitSummary::of(&self.fit));
        m.hierarchy = Some(HierarchySummary {
            n_real: space.n_real(),
            n_imag: space.n_imag(),
            depth: space.depth(),
            ado_count: space.len() as u64,
            rescaled: self.config.hierarchy.rescaling,
        });
        let i = &self.config.integration;
        let responds = matches!(command, "respond" | "spectrum");
        m.integrator = Some(IntegratorSummary {
            scheme: "rk4".into(),
            dt: i.record_dt / self.substeps() as f64,
            substeps: self.substeps(),
            record_dt: i.record_dt,
            t_eq: i.t_eq,
            t_resp: responds.then_some(i.t_resp),
        });
        if command == "spectrum" {
            m.window = Some(self.config.spectrum.window);
        } else if matches!(command, "kernel" | "sweep") {
            m.window = Some(self.config.analysis.window);
        }
        m
    }

    fn equilibrium_key(&self) -> String {
        let c = &self.config;
        sha256_json(&json!({
            "kind": "equilibrium",
            "version": env!("CARGO_PKG_VERSION"),
            "fit": self.fit.hash(),
            "omega_c_over_delta": c.bath.omega_c_over_delta,
            "system": c.system,
            "hierarchy": c.hierarchy,
            "record_dt": c.integration.record_dt,
            "substeps": self.substeps(),
            "t_eq": c.integration.t_eq,
            "initial": c.integration.initial,
            "drift_threshold": c.integration.drift_threshold,
        }))
    }

    /// Relaxes from the configured factorized state, reusing a cached equilibrium.
    pub fn relax(&self, cache: &Cache) -> Result<Relaxation> {
        let key = self.equilibrium_key();
        let record_dt = self.config.integration.record_dt;
        if let Some((state, record)) = cache.load_equilibrium(&key, self.generator.space().clone())
        {
            info!("equilibrium cache hit {key}");
            return Ok(Relaxation {
                state,
                m: TimeSeries::from_real(0.0, record.record_dt, &record.m)?,
                drift: record.drift,
                converged: record.converged,
                warnings: record.warnings,
                cache_hit: true,
            });
        }
        let i = &self.config.integration;
        let relax_config = RelaxConfig {
            t_eq: i.t_eq * self.scale(),
            dt: self.dt_internal(),
            stride: self.substeps(),
            tail_fraction: 0.1,
            drift_threshold: i.drift_threshold,
        };
        let eq = relax_to_equilibrium(&self.generator, i.initial.block(), &relax_config)?;
        let m = eq.m.re();
        let record = RelaxRecord {
            record_dt,
            m: m.clone(),
            drift: eq.drift,
            converged: eq.converged,
            warnings: eq.warnings.clone(),
        };
        let header = CheckpointHeader::for_state(
            &eq.state,
            &self.fit.hash(),
            relax_config.t_eq,
            self.config.hierarchy.rescaling,
        );
        cache.store_equilibrium(&key, &header, &eq.state, &record)?;
        Ok(Relaxation {
            state: eq.state,
            m: TimeSeries::from_real(0.0, record_dt, &m)?,
            drift: eq.drift,
            converged: eq.converged,
            warnings: eq.warnings,
            cache_hit: false,
        })
    }

    /// Kubo response from an equilibrium state; `chi` is sampled in units of `1/Delta`.
    pub fn respond(&self, eq: &AdoState) -> Result<Response> {
        let i = &self.config.integration;
        let config = ResponseConfig {
            t_resp: i.t_resp * self.scale(),
            dt: self.dt_internal(),
            stride: self.substeps(),
        };
        let mut response = linear_response(eq, &self.generator, &config)?;
        response.chi = TimeSeries::from_real(0.0, i.record_dt, &response.chi.re())?;
        Ok(response)
    }
}

impl Config {
    /// Sweep thresholds and transforms from the analysis section.
    pub fn sweep_config(&self) -> SweepConfig {
        let a = &self.analysis;
        SweepConfig {
            kappa_threshold: a.kappa_threshold,
            kernel_tail_threshold: a.kernel_tail_threshold,
            delta_m: self.delta_m_config(),
            ci: CiConfig {
                threshold: a.ci_threshold,
                omega_floor: a.omega_floor,
            },
        }
    }

    fn delta_m_config(&self) -> DeltaMConfig {
        let a = &self.analysis;
        DeltaMConfig {
            tail_fraction: a.tail_fraction,
            m_inf: None,
            omega_max: a.omega_max,
            d_omega: a.d_omega,
            window: a.window,
        }
    }
}

/// Rate kernel, kappa_0, delta M and the coherence verdict of `m` (units of Delta).
pub fn analyze_m(m: &TimeSeries, config: &Config) -> Result<MAnalysis> {
    let kernel = extract_rate_kernel(m, &KernelConfig::default())?;
    let rate = integrated_rate(&kernel, config.analysis.kernel_tail_threshold);
    let delta_m = delta_m_spectrum(m, &config.delta_m_config())?;
    let sweep = config.sweep_config();
    let ci = detect_ci(&delta_m.spectrum, &sweep.ci);
    Ok(MAnalysis {
        kernel,
        rate,
        delta_m,
        ci,
    })
}

/// Configuration of one sweep point.
pub fn point_config(base: &Config, s: f64, alpha: f64) -> Config {
    let mut c = base.clone();
    c.bath.s = s;
    c.bath.alpha = alpha;
    c.sweep = None;
    c
}

/// Runs sweep points through the hierarchy solver.
pub struct HeomRunner<'a> {
    pub base: &'a Config,
    pub cache: &'a Cache,
}

impl PointRunner for HeomRunner<'_> {
    fn relax(&self, s: f64, alpha: f64) -> Result<RelaxOutcome> {
        let config = point_config(self.base, s, alpha);
        let model = Model::build(&config, self.cache)?;
        let relaxation = model.relax(self.cache)?;
        Ok(RelaxOutcome {
            m: relaxation.m,
            depth: model.generator.space().depth(),
            manifest_hash: model.manifest("relax").hash(),
        })
    }
}
