//! The subcommands. Each writes its files into the output directory and returns their paths.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;

use super::cache::Cache;
use super::config::Config;
use super::manifest::{extract, FitSummary, RunManifest};
use super::pipeline::{analyze_m, fit_target, obtain_fit, HeomRunner, Model};
use crate::analysis::{sweep_phase_boundary, SweepFile};
use crate::bath::{correlation_value, BathSpec};
use crate::decomp::fit_error_report;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::response::{absorption_spectrum, spectrum_peaks, PeakConfig, SpectrumConfig};
use crate::series::{Spectrum, TimeSeries};

/// Writes a CSV output: manifest preamble, extra comment lines, header, rows.
fn write_csv(
    path: &Path,
    manifest: &RunManifest,
    notes: &[String],
    header: &str,
    rows: &[String],
) -> Result<()> {
    let mut text = manifest.csv_preamble();
    for note in notes {
        for line in note.lines() {
            let _ = writeln!(text, "# {line}");
        }
    }
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

fn series_rows(series: &TimeSeries) -> Vec<String> {
    (0..series.len())
        .map(|i| format!("{},{:e}", series.time(i), series.values[i].re))
        .collect()
}

fn spectrum_rows(spec: &Spectrum) -> Vec<String> {
    spec.values
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{},{:e}", spec.omega(i), v))
        .collect()
}

pub fn fit_bath(config: &Config, out: &Path, cache: &Cache) -> Result<Vec<PathBuf>> {
    let fit = obtain_fit(config, cache)?;
    let target = fit_target(config)?;
    let report = fit_error_report(&fit, &target)?;
    let mut manifest = RunManifest::new("fit-bath", config);
    manifest.fit = Some(FitSummary::of(&fit));
    let mut notes = vec![format!(
        "residual max |dC_R| = {:e}, max |dC_I| = {:e} (units of omega_c^2)",
        report.summary.max_real, report.summary.max_imag
    )];
    if !fit.meets_tolerance {
        let msg = format!(
            "fit quality warning: residual exceeds tolerance {:e}",
            config.fit.tolerance
        );
        warn!("{msg}");
        notes.push(msg);
    }
    let fit_path = out.join("fit.json");
    let doc: serde_json::Value =
        serde_json::from_str(&fit.to_document()).expect("fit document is JSON");
    write_atomic(&fit_path, manifest.embed_json(doc).as_bytes())?;

    let residual_path = out.join("fit_residual.csv");
    let rows: Vec<String> = report
        .times
        .iter()
        .zip(report.delta_real.iter().zip(&report.delta_imag))
        .map(|(t, (r, i))| format!("{t},{r:e},{i:e}"))
        .collect();
    write_csv(
        &residual_path,
        &manifest,
        &notes,
        "t_wc,delta_c_real,delta_c_imag",
        &rows,
    )?;

    // log-spaced overlay from 0.01 to 10 t_max
    let spec = BathSpec::new(config.bath.s, config.bath.alpha)?;
    let t_max = config.fit.t_max_wc;
    let times: Vec<f64> = (0..=240)
        .map(|k| 0.01 * (1000.0 * t_max).powf(k as f64 / 240.0))
        .collect();
    let exact: Vec<_> = times
        .par_iter()
        .map(|&t| correlation_value(t, &spec))
        .collect::<Result<_>>()?;
    let rows: Vec<String> = times
        .iter()
        .zip(&exact)
        .map(|(&t, c)| {
            let f = fit.evaluate(t);
            format!(
                "{t},{:e},{:e},{:e},{:e}",
                c.re.abs(),
                c.im.abs(),
                f.re.abs(),
                f.im.abs()
            )
        })
        .collect();
    let loglog_path = out.join("fit_loglog.csv");
    write_csv(
        &loglog_path,
        &manifest,
        &["the fit extrapolates beyond t_max_wc".to_string()],
        "t_wc,abs_c_real,abs_c_imag,abs_fit_real,abs_fit_imag",
        &rows,
    )?;
    Ok(vec![fit_path, residual_path, loglog_path])
}

fn relaxation_notes(drift: f64, converged: bool, warnings: &[String]) -> Vec<String> {
    let mut notes = vec![format!(
        "equilibration drift: {drift:e} (converged: {converged})"
    )];
    notes.extend(warnings.iter().map(|w| format!("warning: {w}")));
    notes
}

pub fn relax(config: &Config, out: &Path, cache: &Cache) -> Result<Vec<PathBuf>> {
    let model = Model::build(config, cache)?;
    let r = model.relax(cache)?;
    let path = out.join("relax_m.csv");
    write_csv(
        &path,
        &model.manifest("relax"),
        &relaxation_notes(r.drift, r.converged, &r.warnings),
        "t,m",
        &series_rows(&r.m),
    )?;
    Ok(vec![path])
}

pub fn respond(config: &Config, out: &Path, cache: &Cache) -> Result<Vec<PathBuf>> {
    let model = Model::build(config, cache)?;
    let eq = model.relax(cache)?;
    if eq.cache_hit {
        info!("skipping relaxation: equilibrium state taken from the cache");
    }
    let response = model.respond(&eq.state)?;
    let mut notes = relaxation_notes(eq.drift, eq.converged, &eq.warnings);
    notes.push(format!(
        "imaginary residual of chi: {:e}",
        response.imaginary_residual
    ));
    notes.extend(response.warnings.iter().map(|w| format!("warning: {w}")));
    let path = out.join("chi.csv");
    write_csv(
        &path,
        &model.manifest("respond"),
        &notes,
        "t,chi",
        &series_rows(&response.chi),
    )?;
    Ok(vec![path])
}

pub fn spectrum(config: &Config, out: &Path, cache: &Cache) -> Result<Vec<PathBuf>> {
    let model = Model::build(config, cache)?;
    let eq = model.relax(cache)?;
    let response = model.respond(&eq.state)?;
    let sp = &config.spectrum;
    let absorption = absorption_spectrum(
        &response.chi,
        &SpectrumConfig {
            omega_max: sp.omega_max,
            d_omega: sp.d_omega,
            window: sp.window,
        },
    )?;
    for w in &absorption.warnings {
        warn!("{w}");
    }
    let manifest = model.manifest("spectrum");
    let mut notes = relaxation_notes(eq.drift, eq.converged, &eq.warnings);
    notes.extend(absorption.warnings.iter().map(|w| format!("warning: {w}")));
    let windowed = out.join("chi2.csv");
    let mut windowed_notes = notes.clone();
    windowed_notes.push(format!("window: {}", absorption.windowed.window.label()));
    write_csv(
        &windowed,
        &manifest,
        &windowed_notes,
        "omega,chi2",
        &spectrum_rows(&absorption.windowed),
    )?;
    let raw = out.join("chi2_raw.csv");
    let mut raw_notes = notes;
    raw_notes.push("window: none".to_string());
    write_csv(
        &raw,
        &manifest,
        &raw_notes,
        "omega,chi2",
        &spectrum_rows(&absorption.raw),
    )?;
    let peaks = spectrum_peaks(
        &absorption.windowed,
        &PeakConfig {
            min_prominence: sp.min_prominence,
        },
    );
    let rows: Vec<String> = peaks
        .iter()
        .map(|p| {
            let hw = p.half_width.map_or(String::new(), |h| h.to_string());
            format!("{},{:e},{hw},{:e}", p.location, p.height, p.prominence)
        })
        .collect();
    let peak_path = out.join("peaks.csv");
    write_csv(
        &peak_path,
        &manifest,
        &[],
        "location,height,half_width,prominence",
        &rows,
    )?;
    Ok(vec![windowed, raw, peak_path])
}

pub fn kernel(config: &Config, out: &Path, cache: &Cache) -> Result<Vec<PathBuf>> {
    config.require_plus_start("kernel")?;
    let model = Model::build(config, cache)?;
    let eq = model.relax(cache)?;
    let a = analyze_m(&eq.m, config)?;
    let manifest = model.manifest("kernel");
    let mut notes = relaxation_notes(eq.drift, eq.converged, &eq.warnings);
    notes.push(format!(
        "delta weight at t = 0: {:e}",
        a.kernel.delta_weight
    ));
    let kernel_path = out.join("kernel.csv");
    write_csv(
        &kernel_path,
        &manifest,
        &notes,
        "t,k",
        &series_rows(&a.kernel.series),
    )?;
    let dm_path = out.join("delta_m.csv");
    write_csv(
        &dm_path,
        &manifest,
        &[format!("m_inf: {:e}", a.delta_m.m_inf)],
        "omega,delta_m",
        &spectrum_rows(&a.delta_m.spectrum),
    )?;
    let rate_path = out.join("rate.json");
    let doc = json!({
        "kappa0": a.rate.kappa0,
        "tail_converged": a.rate.tail_converged,
        "delta_weight": a.kernel.delta_weight,
        "coherent": a.ci.coherent,
        "prominence": a.ci.prominence,
        "peak_location": a.ci.peak_location,
        "m_inf": a.delta_m.m_inf,
        "drift": a.delta_m.drift,
    });
    write_atomic(&rate_path, manifest.embed_json(doc).as_bytes())?;
    Ok(vec![kernel_path, dm_path, rate_path])
}

pub fn sweep(config: &Config, out: &Path, cache: &Cache) -> Result<Vec<PathBuf>> {
    let grid = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "the sweep command needs a [sweep] section"))?;
    config.depth()?;
    config.require_plus_start("sweep")?;
    let manifest = RunManifest::new("sweep", config);
    let csv = out.join("sweep.csv");
    std::fs::create_dir_all(out)?;
    let preamble = manifest.csv_preamble();
    let runner = HeomRunner {
        base: config,
        cache,
    };
    let outcome = sweep_phase_boundary(
        &grid.s,
        &grid.alpha,
        &runner,
        &config.sweep_config(),
        Some(SweepFile {
            path: &csv,
            preamble: &preamble,
        }),
    )?;
    let failed = outcome.records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        warn!("{failed} sweep points failed; see the status column");
    }
    let boundaries = out.join("boundaries.json");
    let doc = json!({
        "kappa_threshold": config.analysis.kappa_threshold,
        "ci_threshold": config.analysis.ci_threshold,
        "boundaries": outcome.boundaries,
    });
    write_atomic(&boundaries, manifest.embed_json(doc).as_bytes())?;
    Ok(vec![csv, boundaries])
}

/// Pretty-printed manifest of an output file, after checking its hash.
pub fn inspect(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path)?;
    let manifest = extract(&text)?;
    let pretty = serde_json::to_string_pretty(
        &serde_json::to_value(&manifest).expect("manifest serializes"),
    )
    .expect("json");
    Ok(format!(
        "{pretty}\nmanifest_sha256: {} (verified)\nrerun: sbheom {} {}\n",
        manifest.hash(),
        manifest.command,
        path.display()
    ))
}
