//! Resumable (s, alpha) scans and phase-boundary estimates.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coherence::{delta_m_spectrum, detect_ci, CiConfig, DeltaMConfig};
use super::kernel::{extract_rate_kernel, integrated_rate, KernelConfig};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Relaxation of one grid point. Times and rates are in units of Delta.
#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub m: TimeSeries,
    pub depth: usize,
    pub manifest_hash: String,
}

/// Produces M(t') for a grid point; implemented by the hierarchy solver and by test stubs.
pub trait PointRunner: Sync {
    fn relax(&self, s: f64, alpha: f64) -> Result<RelaxOutcome>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// The delocalized/localized cut on kappa_0 (units of Delta).
    pub kappa_threshold: f64,
    pub kernel_tail_threshold: f64,
    pub delta_m: DeltaMConfig,
    pub ci: CiConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kappa_threshold: 0.02,
            kernel_tail_threshold: 0.05,
            delta_m: DeltaMConfig::new(6.0, 0.01),
            ci: CiConfig::for_delta(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub s: f64,
    pub alpha: f64,
    /// `None` for failed points.
    pub kappa0: Option<f64>,
    pub coherent: bool,
    pub drift: f64,
    pub prominence: f64,
    pub depth: usize,
    pub status: String,
    pub manifest_hash: String,
}

pub const CSV_HEADER: &str = "s,alpha,kappa0,coherent,drift,prominence,depth,status,manifest_hash";

impl PhaseRecord {
    pub fn is_ok(&self) -> bool {
        self.status.starts_with("ok")
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.s,
            self.alpha,
            self.kappa0.map_or(String::new(), |k| k.to_string()),
            self.coherent,
            self.drift,
            self.prominence,
            self.depth,
            self.status.replace(',', ";"),
            self.manifest_hash
        )
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Format(format!(
                "sweep row has {} fields: {line}",
                f.len()
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("{s:?}: {e}")))
        };
        Ok(Self {
            s: num(f[0])?,
            alpha: num(f[1])?,
            kappa0: if f[2].is_empty() {
                None
            } else {
                Some(num(f[2])?)
            },
            coherent: f[3] == "true",
            drift: num(f[4])?,
            prominence: num(f[5])?,
            depth: f[6]
                .parse()
                .map_err(|e| Error::Format(format!("{}: {e}", f[6])))?,
            status: f[7].to_string(),
            manifest_hash: f[8].to_string(),
        })
    }
}

/// Estimate of a crossing along the alpha grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEstimate {
    /// Interpolated crossing, if bracketed by the grid.
    pub value: Option<f64>,
    /// Open-interval bounds when the crossing was not reached.
    pub above: Option<f64>,
    pub below: Option<f64>,
}

impl BoundaryEstimate {
    fn unresolved() -> Self {
        Self {
            value: None,
            above: None,
            below: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub s: f64,
    pub alpha_c: BoundaryEstimate,
    pub alpha_ci: BoundaryEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<PhaseRecord>,
    pub boundaries: Vec<Boundary>,
}

/// Tolerated excess of |M| over 1 before a relaxation counts as unphysical.
pub const UNPHYSICAL_SLACK: f64 = 1e-6;

/// Analyzes one relaxation into a phase record.
pub fn analyze_point(
    s: f64,
    alpha: f64,
    run: &RelaxOutcome,
    config: &SweepConfig,
) -> Result<PhaseRecord> {
    if let Some(i) = run
        .m
        .values
        .iter()
        .position(|v| v.re.abs() > 1.0 + UNPHYSICAL_SLACK)
    {
        return Err(Error::Divergence {
            time: run.m.time(i),
            detail: format!(
                "|M| = {:.3e} exceeds 1; the truncated hierarchy is unstable, raise the depth",
                run.m.values[i].re.abs()
            ),
        });
    }
    let kernel = extract_rate_kernel(&run.m, &KernelConfig::default())?;
    let rate = integrated_rate(&kernel, config.kernel_tail_threshold);
    let dm = delta_m_spectrum(&run.m, &config.delta_m)?;
    let ci = detect_ci(&dm.spectrum, &config.ci);
    let status = if rate.tail_converged {
        "ok"
    } else {
        "ok_unconverged_tail"
    };
    if !rate.kappa0.is_finite() {
        return Err(Error::Divergence {
            time: run.m.t_end(),
            detail: "kappa0 is not finite".into(),
        });
    }
    Ok(PhaseRecord {
        s,
        alpha,
        kappa0: Some(rate.kappa0),
        coherent: ci.coherent,
        drift: dm.drift,
        prominence: ci.prominence,
        depth: run.depth,
        status: status.into(),
        manifest_hash: run.manifest_hash.clone(),
    })
}

fn key(s: f64, alpha: f64) -> (u64, u64) {
    (s.to_bits(), alpha.to_bits())
}

/// Persistent record of a sweep: `#` comment lines followed by the CSV table.
#[derive(Debug, Clone, Copy)]
pub struct SweepFile<'a> {
    pub path: &'a Path,
    /// Comment block (each line starting with `#`) identifying the sweep. Resuming
    /// requires the existing file to carry the same block.
    pub preamble: &'a str,
}

impl<'a> SweepFile<'a> {
    pub fn new(path: &'a Path) -> Self {
        Self { path, preamble: "" }
    }
}

/// Runs every (s, alpha) point not already present in the sweep file, appending rows as
/// they complete, then rewrites the file sorted by (s, alpha).
pub fn sweep_phase_boundary(
    s_list: &[f64],
    alpha_grid: &[f64],
    runner: &dyn PointRunner,
    config: &SweepConfig,
    file: Option<SweepFile>,
) -> Result<SweepOutcome> {
    if let Some(f) = file {
        if f.preamble.lines().any(|l| !l.starts_with('#')) {
            return Err(Error::Domain(
                "sweep preamble lines must start with '#'".into(),
            ));
        }
    }
    let csv_path = file.map(|f| f.path);
    let preamble = file.map_or("", |f| f.preamble);
    for w in [s_list, alpha_grid] {
        if w.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(Error::Domain(
                "sweep grids must be strictly ascending".into(),
            ));
        }
    }
    let mut done: BTreeMap<(u64, u64), PhaseRecord> = BTreeMap::new();
    if let Some(path) = csv_path {
        if path.exists() {
            let text = fs::read_to_string(path)?;
            let existing: String = text
                .lines()
                .take_while(|l| l.starts_with('#'))
                .map(|l| format!("{l}\n"))
                .collect();
            if existing != preamble {
                return Err(Error::Mismatch(format!(
                    "{} was written by a different sweep configuration",
                    path.display()
                )));
            }
            for line in text.lines() {
                if line.starts_with('#') || line.starts_with("s,") || line.trim().is_empty() {
                    continue;
                }
                let r = PhaseRecord::from_csv(line)?;
                done.insert(key(r.s, r.alpha), r);
            }
            info!("resuming sweep with {} completed points", done.len());
        } else {
            fs::write(path, format!("{preamble}{CSV_HEADER}\n"))?;
        }
    }
    let pending: Vec<(f64, f64)> = s_list
        .iter()
        .flat_map(|&s| alpha_grid.iter().map(move |&a| (s, a)))
        .filter(|&(s, a)| !done.contains_key(&key(s, a)))
        .collect();
    let sink = csv_path
        .map(|p| fs::OpenOptions::new().append(true).open(p))
        .transpose()?
        .map(Mutex::new);
    let fresh: Vec<PhaseRecord> = pending
        .par_iter()
        .map(|&(s, alpha)| -> Result<PhaseRecord> {
            let record = match runner
                .relax(s, alpha)
                .and_then(|run| analyze_point(s, alpha, &run, config))
            {
                Ok(r) => r,
                Err(e) => {
                    warn!("sweep point s={s}, alpha={alpha} failed: {e}");
                    PhaseRecord {
                        s,
                        alpha,
                        kappa0: None,
                        coherent: false,
                        drift: 0.0,
                        prominence: 0.0,
                        depth: 0,
                        status: format!("failed: {e}"),
                        manifest_hash: String::new(),
                    }
                }
            };
            if let Some(sink) = &sink {
                let mut f = sink.lock().expect("sweep sink poisoned");
                writeln!(f, "{}", record.to_csv())?;
                f.flush()?;
            }
            Ok(record)
        })
        .collect::<Result<_>>()?;
    for r in fresh {
        done.insert(key(r.s, r.alpha), r);
    }
    // keep only points on the requested grid, ordered by (s, alpha)
    let mut records: Vec<PhaseRecord> = done
        .into_values()
        .filter(|r| s_list.contains(&r.s) && alpha_grid.contains(&r.alpha))
        .collect();
    records.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.alpha.total_cmp(&b.alpha)));
    if let Some(path) = csv_path {
        let mut text = format!("{preamble}{CSV_HEADER}\n");
        for r in &records {
            text.push_str(&r.to_csv());
            text.push('\n');
        }
        crate::io::write_atomic(path, text.as_bytes())?;
    }
    let boundaries = s_list
        .iter()
        .map(|&s| {
            let row: Vec<&PhaseRecord> = records.iter().filter(|r| r.s == s && r.is_ok()).collect();
            Boundary {
                s,
                alpha_c: crossing(
                    &row,
                    |r| r.kappa0.unwrap_or(f64::NAN),
                    config.kappa_threshold,
                ),
                alpha_ci: crossing(&row, |r| r.prominence, config.ci.threshold),
            }
        })
        .collect();
    Ok(SweepOutcome {
        records,
        boundaries,
    })
}

/// First downward crossing of `threshold` by `f` along ascending alpha, linearly interpolated.
fn crossing(
    rows: &[&PhaseRecord],
    f: impl Fn(&PhaseRecord) -> f64,
    threshold: f64,
) -> BoundaryEstimate {
    if rows.is_empty() {
        return BoundaryEstimate::unresolved();
    }
    let first = rows[0];
    if f(first) <= threshold {
        return BoundaryEstimate {
            value: None,
            above: None,
            below: Some(first.alpha),
        };
    }
    for w in rows.windows(2) {
        let (a, b) = (f(w[0]), f(w[1]));
        if a > threshold && b <= threshold {
            let frac = if a == b {
                0.0
            } else {
                (a - threshold) / (a - b)
            };
            return BoundaryEstimate {
                value: Some(w[0].alpha + frac * (w[1].alpha - w[0].alpha)),
                above: None,
                below: None,
            };
        }
    }
    BoundaryEstimate {
        value: None,
        above: Some(rows[rows.len() - 1].alpha),
        below: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let r = PhaseRecord {
            s: 0.1,
            alpha: 0.30000000000000004,
            kappa0: Some(1.0 / 3.0),
            coherent: true,
            drift: 1e-7,
            prominence: 2.5,
            depth: 6,
            status: "ok".into(),
            manifest_hash: "abc".into(),
        };
        assert_eq!(PhaseRecord::from_csv(&r.to_csv()).unwrap(), r);
    }

    #[test]
    fn grids_must_ascend() {
        struct Never;
        impl PointRunner for Never {
            fn relax(&self, _: f64, _: f64) -> Result<RelaxOutcome> {
                unreachable!()
            }
        }
        assert!(
            sweep_phase_boundary(&[0.5], &[0.2, 0.1], &Never, &SweepConfig::default(), None)
                .is_err()
        );
    }
}
