//! `delta M(omega)` and the coherent/incoherent side-peak criterion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::{tail_drift, weighted_transform};
use crate::series::{Spectrum, TimeSeries, Window};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaMConfig {
    /// Fraction of the record averaged for M(inf).
    pub tail_fraction: f64,
    /// Overrides the tail estimate of M(inf).
    pub m_inf: Option<f64>,
    pub omega_max: f64,
    pub d_omega: f64,
    pub window: Window,
}

impl DeltaMConfig {
    pub fn new(omega_max: f64, d_omega: f64) -> Self {
        Self {
            tail_fraction: 0.1,
            m_inf: None,
            omega_max,
            d_omega,
            window: Window::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeltaM {
    pub spectrum: Spectrum,
    pub m_inf: f64,
    /// Spread of M over the tail window.
    pub drift: f64,
}

/// `delta M(omega) = 2 int_0^T (M(t) - M(inf)) w(t) cos(omega t) dt`.
pub fn delta_m_spectrum(m: &TimeSeries, config: &DeltaMConfig) -> Result<DeltaM> {
    if !(config.d_omega > 0.0) || config.omega_max < 0.0 {
        return Err(Error::Domain(
            "frequency grid needs positive d_omega".into(),
        ));
    }
    let values = m.re();
    let n = values.len();
    let k = ((n as f64 * config.tail_fraction).ceil() as usize).clamp(1, n);
    let m_inf = config.m_inf.unwrap_or_else(|| {
        let tail = &values[n - k..];
        tail[0] + tail.iter().map(|v| v - tail[0]).sum::<f64>() / k as f64
    });
    let drift = tail_drift(&values, config.tail_fraction);
    let shifted = TimeSeries::from_real(
        m.t0,
        m.dt,
        &values.iter().map(|v| v - m_inf).collect::<Vec<_>>(),
    )?;
    let count = (config.omega_max / config.d_omega).round() as usize + 1;
    let spectrum: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| {
            let w = i as f64 * config.d_omega;
            2.0 * weighted_transform(&shifted, &config.window, |t| (w * (t - m.t0)).cos())
        })
        .collect();
    Ok(DeltaM {
        spectrum: Spectrum::new(0.0, config.d_omega, spectrum, config.window)?,
        m_inf,
        drift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiConfig {
    /// A side peak counts when its prominence, relative to |delta M(0)|, is at least this.
    pub threshold: f64,
    /// Maxima at or below this frequency are ignored.
    pub omega_floor: f64,
}

impl CiConfig {
    /// Defaults for a frequency axis in units of Delta.
    pub fn for_delta(delta: f64) -> Self {
        Self {
            threshold: 0.02,
            omega_floor: 0.2 * delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiVerdict {
    pub coherent: bool,
    /// Largest relative side-peak prominence (0 when there is no side peak).
    pub prominence: f64,
    pub peak_location: Option<f64>,
}

/// Looks for a finite-frequency maximum of `delta M(omega)`.
///
/// A maximum at grid point `i` has prominence `(v_i - min_{j < i} v_j) / |v_0|`, the
/// rise above the lowest point between zero frequency and the peak.
pub fn detect_ci(delta_m: &Spectrum, config: &CiConfig) -> CiVerdict {
    let v = &delta_m.values;
    let mut best: Option<(f64, f64)> = None;
    let base = v.first().map_or(0.0, |x| x.abs());
    let mut running_min = f64::INFINITY;
    for i in 0..v.len() {
        if i > 0
            && i + 1 < v.len()
            && delta_m.omega(i) > config.omega_floor
            && v[i] > v[i - 1]
            && v[i] >= v[i + 1]
        {
            let rise = v[i] - running_min;
            let p = if base > 0.0 {
                rise / base
            } else if rise > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if best.is_none_or(|(bp, _)| p > bp) {
                best = Some((p, delta_m.omega(i)));
            }
        }
        running_min = running_min.min(v[i]);
    }
    match best {
        Some((p, w)) => CiVerdict {
            coherent: p >= config.threshold,
            prominence: p,
            peak_location: Some(w),
        },
        None => CiVerdict {
            coherent: false,
            prominence: 0.0,
            peak_location: None,
        },
    }
}
