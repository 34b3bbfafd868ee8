//! Equilibration, Kubo linear response and absorption spectra.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heom::{commute_z, propagate, AdoState, Block, Generator, Role, Span, Trajectory};
use crate::series::{Spectrum, TimeSeries, Window};

/// Relaxation settings, in internal (omega_c = 1) units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxConfig {
    pub t_eq: f64,
    pub dt: f64,
    pub stride: usize,
    /// Fraction of the record used for the drift diagnostic.
    pub tail_fraction: f64,
    pub drift_threshold: f64,
}

impl RelaxConfig {
    pub fn new(t_eq: f64, dt: f64, stride: usize) -> Self {
        Self {
            t_eq,
            dt,
            stride,
            tail_fraction: 0.1,
            drift_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub state: AdoState,
    /// `M(t') = <sigma_z>` along the relaxation.
    pub m: TimeSeries,
    /// Largest deviation of M from its mean over the final tail of the run.
    pub drift: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// `<sigma_z>` of each recorded reduced density matrix.
pub fn magnetization(traj: &Trajectory) -> Result<TimeSeries> {
    let values: Vec<f64> = traj.rdm.iter().map(|b| b.expect_z().re).collect();
    TimeSeries::from_real(0.0, traj.dt(), &values)
}

/// Spread of `values` around their mean over the final `fraction` of the record.
pub fn tail_drift(values: &[f64], fraction: f64) -> f64 {
    let n = values.len();
    let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
    let tail = &values[n - k..];
    let mean = tail.iter().sum::<f64>() / k as f64;
    tail.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
}

/// Propagates the factorized state `rho0` (higher ADOs zero) to approximate equilibrium.
pub fn relax_to_equilibrium(
    gen: &Generator,
    rho0: Block,
    config: &RelaxConfig,
) -> Result<Equilibrium> {
    let state = AdoState::product(gen.space().clone(), rho0);
    let run = propagate(
        state,
        gen,
        &Span::new(config.t_eq, config.dt, config.stride),
    )?;
    let m = magnetization(&run.trajectory)?;
    let drift = tail_drift(&m.re(), config.tail_fraction);
    let converged = drift <= config.drift_threshold;
    let mut warnings = run.warnings;
    let peak = m.values.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    if peak > 1.0 + 1e-6 {
        warnings.push(format!(
            "|M| reaches {peak:.3e} > 1: unphysical, the truncated hierarchy is likely unstable"
        ));
    }
    if !converged {
        warnings.push(format!(
            "M drifts by {drift:.3e} over the final {:.0}% of the relaxation (threshold {:.1e})",
            100.0 * config.tail_fraction,
            config.drift_threshold
        ));
    }
    Ok(Equilibrium {
        state: run.state,
        m,
        drift,
        converged,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseConfig {
    pub t_resp: f64,
    pub dt: f64,
    pub stride: usize,
}

#[derive(Debug, Clone)]
pub struct Response {
    /// Real response function chi(t).
    pub chi: TimeSeries,
    /// Largest |Im chi| relative to the largest |Re chi|.
    pub imaginary_residual: f64,
    pub warnings: Vec<String>,
}

/// Kubo response `chi(t) = i mu^2 Tr{sigma_z e^{-Wt} [sigma_z, sigma_eq]}`.
pub fn linear_response(
    eq: &AdoState,
    gen: &Generator,
    config: &ResponseConfig,
) -> Result<Response> {
    if eq.role() != Role::Density {
        return Err(Error::Mismatch(
            "linear response needs a density-role equilibrium state".into(),
        ));
    }
    let quasi = commute_z(eq);
    let run = propagate(
        quasi,
        gen,
        &Span::new(config.t_resp, config.dt, config.stride),
    )?;
    let mu2 = gen.system().dipole * gen.system().dipole;
    let values: Vec<Complex64> = run
        .trajectory
        .rdm
        .iter()
        .map(|b| Complex64::i() * b.expect_z() * mu2)
        .collect();
    let peak = values.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let imag = values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let imaginary_residual = if peak > 0.0 { imag / peak } else { imag };
    let re: Vec<f64> = values.iter().map(|z| z.re).collect();
    Ok(Response {
        chi: TimeSeries::from_real(0.0, run.trajectory.dt(), &re)?,
        imaginary_residual,
        warnings: run.warnings,
    })
}

/// Frequency grid and window for a one-sided transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub omega_max: f64,
    pub d_omega: f64,
    pub window: Window,
}

#[derive(Debug, Clone)]
pub struct Absorption {
    pub windowed: Spectrum,
    /// Same transform without a window.
    pub raw: Spectrum,
    pub warnings: Vec<String>,
}

/// `int_0^T chi(t) w(t) sin(omega t) dt` by the trapezoidal rule.
///
/// For real, causal chi the imaginary part of its Fourier transform over the whole
/// line reduces to this one-sided sine transform, so the result is odd in omega.
pub fn sine_transform(chi: &TimeSeries, window: &Window, omega: f64) -> f64 {
    weighted_transform(chi, window, |t| (omega * t).sin())
}

pub(crate) fn weighted_transform(
    series: &TimeSeries,
    window: &Window,
    kernel: impl Fn(f64) -> f64,
) -> f64 {
    let n = series.len();
    let t_end = series.t_end();
    let mut acc = 0.0;
    for (i, v) in series.values.iter().enumerate() {
        let t = series.time(i);
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * v.re * window.weight(t, t_end) * kernel(t);
    }
    acc * series.dt
}

/// Absorption spectrum on `[0, omega_max]`, windowed and raw.
pub fn absorption_spectrum(chi: &TimeSeries, config: &SpectrumConfig) -> Result<Absorption> {
    if chi.t0 != 0.0 {
        return Err(Error::Domain("response record must start at t = 0".into()));
    }
    if !(config.d_omega > 0.0) || !(config.omega_max > 0.0) {
        return Err(Error::Domain(
            "frequency grid needs positive omega_max and d_omega".into(),
        ));
    }
    let mut warnings = Vec::new();
    let resolution = 2.0 * std::f64::consts::PI / chi.t_end();
    if config.d_omega < resolution {
        warnings.push(format!(
            "frequency step {} is finer than the record resolution 2pi/T = {resolution:.4}",
            config.d_omega
        ));
    }
    let n = (config.omega_max / config.d_omega).round() as usize + 1;
    let omegas: Vec<f64> = (0..n).map(|i| i as f64 * config.d_omega).collect();
    let eval = |window: &Window| -> Vec<f64> {
        omegas
            .par_iter()
            .map(|&w| sine_transform(chi, window, w))
            .collect()
    };
    Ok(Absorption {
        windowed: Spectrum::new(0.0, config.d_omega, eval(&config.window), config.window)?,
        raw: Spectrum::new(0.0, config.d_omega, eval(&Window::None), Window::None)?,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub location: f64,
    pub height: f64,
    /// Half width at half maximum, when both sides fall below half height inside the grid.
    pub half_width: Option<f64>,
    pub prominence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakConfig {
    /// Minimum prominence relative to the largest |value| of the spectrum.
    pub min_prominence: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            min_prominence: 0.3,
        }
    }
}

/// Interior local maxima with sufficient prominence, refined by a parabola through
/// the three nearest samples.
pub fn spectrum_peaks(spec: &Spectrum, config: &PeakConfig) -> Vec<Peak> {
    let v = &spec.values;
    let n = v.len();
    let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if n < 3 || scale == 0.0 {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(v[i] > v[i - 1] && v[i] >= v[i + 1]) {
            continue;
        }
        let prominence = prominence(v, i);
        if prominence < config.min_prominence * scale {
            continue;
        }
        let (y0, y1, y2) = (v[i - 1], v[i], v[i + 1]);
        let curv = y0 - 2.0 * y1 + y2;
        let shift = if curv != 0.0 {
            0.5 * (y0 - y2) / curv
        } else {
            0.0
        };
        let location = spec.omega(i) + shift * spec.d_omega;
        let height = y1 - 0.25 * (y0 - y2) * shift;
        peaks.push(Peak {
            location,
            height,
            half_width: half_width(spec, i, height),
            prominence,
        });
    }
    peaks
}

/// Height above the higher of the two minima separating `i` from taller terrain.
pub(crate) fn prominence(v: &[f64], i: usize) -> f64 {
    let peak = v[i];
    let mut left = peak;
    for j in (0..i).rev() {
        if v[j] > peak {
            break;
        }
        left = left.min(v[j]);
    }
    let mut right = peak;
    for &x in &v[i + 1..] {
        if x > peak {
            break;
        }
        right = right.min(x);
    }
    peak - left.max(right)
}

fn half_width(spec: &Spectrum, i: usize, height: f64) -> Option<f64> {
    let v = &spec.values;
    let half = 0.5 * height;
    let cross = |j: usize, k: usize| -> f64 {
        let (a, b) = (v[j], v[k]);
        let f = (a - half) / (a - b);
        spec.omega(j) + f * (spec.omega(k) - spec.omega(j))
    };
    let left = (1..=i)
        .rev()
        .find(|&j| v[j - 1] <= half)
        .map(|j| cross(j, j - 1));
    let right = (i..v.len() - 1)
        .find(|&j| v[j + 1] <= half)
        .map(|j| cross(j, j + 1));
    match (left, right) {
        (Some(l), Some(r)) => Some(0.5 * (r - l)),
        _ => None,
    }
}

/// Ground state `(1 - sigma_x) / 2` of `Delta sigma_x`.
pub fn sigma_x_ground_state() -> Block {
    Block::from_real([[0.5, -0.5], [-0.5, 0.5]])
}
