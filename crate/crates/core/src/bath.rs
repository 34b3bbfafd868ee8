//! Spectral density and bath correlation function of the bosonic environment.
//!
//! The bath enters only through
//!
//! ```text
//! J(w) = (pi/2) alpha w^s wc^(1-s) f(w/wc)
//! C(t) = (1/pi) int_0^inf dw J(w) [coth(beta w / 2) cos(w t) - i sin(w t)]
//! ```
//!
//! At zero temperature `C(t) = (1/pi) int J(w) exp(-i w t) dw` is the boundary value of
//! a function analytic in the lower half plane, so the integration ray is rotated to
//! `arg w = -pi/4`. The oscillation `exp(-i w t)` then turns into the decay
//! `exp(-w t / sqrt 2)` and large times cost no more than small ones. At finite
//! temperature the thermal part `n(w) exp(+i w t)` is rotated into the upper half plane
//! instead; the Bose poles sit on the imaginary axis and are never crossed.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::quadrature::{exp_sinh, QuadEstimate};
use crate::series::{SampledSignal, TimeSeries};

/// High-frequency cutoff function `f(x)`, `x = w / wc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// `1 / (1 + x^2)^2`
    Rational,
    /// `exp(-x)`; admitted by the interface, not validated.
    Exponential,
}

impl Cutoff {
    fn eval(self, x: f64) -> f64 {
        match self {
            Cutoff::Rational => {
                let d = 1.0 + x * x;
                1.0 / (d * d)
            }
            Cutoff::Exponential => (-x).exp(),
        }
    }

    fn eval_complex(self, x: Complex64) -> Complex64 {
        match self {
            Cutoff::Rational => {
                let d = Complex64::new(1.0, 0.0) + x * x;
                (d * d).inv()
            }
            Cutoff::Exponential => (-x).exp(),
        }
    }
}

/// Bath temperature. Zero is a distinct variant rather than a small float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Temperature {
    Zero,
    /// `k_B T` in the same energy unit as `omega_c`. Untested against reference data.
    Finite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub s: f64,
    pub alpha: f64,
    pub omega_c: f64,
    pub cutoff: Cutoff,
    pub temperature: Temperature,
}

impl BathSpec {
    /// Zero-temperature bath with the rational cutoff and `omega_c = 1`.
    pub fn new(s: f64, alpha: f64) -> Result<Self> {
        let spec = BathSpec {
            s,
            alpha,
            omega_c: 1.0,
            cutoff: Cutoff::Rational,
            temperature: Temperature::Zero,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::Domain(format!(
                "bath exponent s must be positive, got {}",
                self.s
            )));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Domain(format!(
                "Kondo parameter must be non-negative, got {}",
                self.alpha
            )));
        }
        if !(self.omega_c > 0.0) || !self.omega_c.is_finite() {
            return Err(Error::Domain(format!(
                "cutoff frequency must be positive, got {}",
                self.omega_c
            )));
        }
        if let Temperature::Finite(kt) = self.temperature {
            if !(kt > 0.0) || !kt.is_finite() {
                return Err(Error::Domain(format!(
                    "finite temperature must be positive, got {kt}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// True when results carry no validation against reference data
    /// (finite temperature, super-Ohmic exponent or non-rational cutoff).
    pub fn is_untested(&self) -> bool {
        matches!(self.temperature, Temperature::Finite(_))
            || self.s > 1.0
            || self.cutoff != Cutoff::Rational
    }

    /// `J(z) / pi` continued into the complex plane (principal branch of `z^s`).
    fn density_over_pi(&self, z: Complex64) -> Complex64 {
        let zs = (z.ln() * self.s).exp();
        zs * (0.5 * self.alpha * self.omega_c.powf(1.0 - self.s))
            * self.cutoff.eval_complex(z / self.omega_c)
    }

    fn bose(&self, z: Complex64) -> Complex64 {
        match self.temperature {
            Temperature::Zero => Complex64::new(0.0, 0.0),
            Temperature::Finite(kt) => ((z / kt).exp() - 1.0).inv(),
        }
    }
}

/// `J(w) = (pi/2) alpha w^s wc^(1-s) f(w/wc)`.
pub fn spectral_density(omega: f64, spec: &BathSpec) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!(
            "spectral density needs omega >= 0, got {omega}"
        )));
    }
    if omega == 0.0 {
        return Ok(0.0);
    }
    Ok(FRAC_PI_2
        * spec.alpha
        * omega.powf(spec.s)
        * spec.omega_c.powf(1.0 - spec.s)
        * spec.cutoff.eval(omega / spec.omega_c))
}

/// Options for [`correlation_value_with`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Relative tolerance on `|C(t)|`.
    pub tolerance: f64,
    /// Maximum number of step halvings.
    pub max_level: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            tolerance: 1e-8,
            max_level: 9,
        }
    }
}

/// `C(t) = C_R(t) + i C_I(t)` with the default tolerance of `1e-8`.
pub fn correlation_value(t: f64, spec: &BathSpec) -> Result<Complex64> {
    correlation_value_with(t, spec, QuadratureOptions::default()).map(|q| q.value)
}

/// `C(t)` together with the quadrature error estimate.
pub fn correlation_value_with(
    t: f64,
    spec: &BathSpec,
    opts: QuadratureOptions,
) -> Result<QuadEstimate> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "correlation function needs t >= 0, got {t}"
        )));
    }
    spec.validate()?;
    if spec.alpha == 0.0 {
        return Ok(QuadEstimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            evaluations: 0,
        });
    }
    let wc = spec.omega_c;
    let scale = 1.0 / (1.0 / wc + t);
    let tol = opts.tolerance * 0.1;
    // absolute floor well below anything a fit or a plot resolves
    let floor = 1e-16 * spec.alpha * wc * wc;
    let fail = |e: crate::quadrature::QuadFailure| Error::Quadrature {
        t,
        estimate: e.best.error,
        tolerance: opts.tolerance,
    };

    if t == 0.0 {
        // real axis; C(0) is real by construction
        let q = exp_sinh(
            |w| {
                let z = Complex64::new(w, 0.0);
                let coth = 1.0 + 2.0 * spec.bose(z).re;
                Complex64::new(spec.density_over_pi(z).re * coth, 0.0)
            },
            scale,
            tol,
            floor,
            opts.max_level,
        )
        .map_err(fail)?;
        return Ok(QuadEstimate {
            value: Complex64::new(q.value.re, 0.0),
            ..q
        });
    }

    let down = Complex64::from_polar(1.0, -FRAC_PI_4);
    let emission = exp_sinh(
        |y| {
            let z = down * y;
            let n1 = spec.bose(z) + 1.0;
            spec.density_over_pi(z) * n1 * (Complex64::new(0.0, -t) * z).exp() * down
        },
        scale,
        tol,
        floor,
        opts.max_level,
    )
    .map_err(fail)?;

    let mut total = emission;
    if let Temperature::Finite(_) = spec.temperature {
        let up = Complex64::from_polar(1.0, FRAC_PI_4);
        let absorption = exp_sinh(
            |y| {
                let z = up * y;
                spec.density_over_pi(z) * spec.bose(z) * (Complex64::new(0.0, t) * z).exp() * up
            },
            scale,
            tol,
            floor,
            opts.max_level,
        )
        .map_err(fail)?;
        total.value += absorption.value;
        total.error += absorption.error;
        total.evaluations += absorption.evaluations;
    }
    if total.error > (opts.tolerance * total.value.norm()).max(floor) {
        return Err(Error::Quadrature {
            t,
            estimate: total.error,
            tolerance: opts.tolerance,
        });
    }
    Ok(total)
}

/// Sampling grid for the fit target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub t_max: f64,
    pub n_samples: usize,
    /// Upper end of the log-spaced segment (in the same unit as `t_max`).
    pub log_until: f64,
}

impl SampleGrid {
    pub fn new(t_max: f64, n_samples: usize) -> Self {
        SampleGrid {
            t_max,
            n_samples,
            log_until: 10.0,
        }
    }

    /// `t = 0`, log-spaced points up to `log_until`, then uniform points to `t_max`.
    pub fn times(&self) -> Result<Vec<f64>> {
        let (t_max, n) = (self.t_max, self.n_samples);
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Domain(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        if n < 2 {
            return Err(Error::Domain(format!("need at least two samples, got {n}")));
        }
        if n == 2 {
            return Ok(vec![0.0, t_max]);
        }
        let knee = self.log_until.min(t_max);
        let rest = n - 1;
        let n_log = if knee >= t_max {
            rest
        } else {
            (rest / 4).max(1)
        };
        let n_lin = rest - n_log;
        let lo = knee * 1e-3;
        let mut times = Vec::with_capacity(n);
        times.push(0.0);
        for i in 0..n_log {
            let frac = if n_log == 1 {
                1.0
            } else {
                i as f64 / (n_log - 1) as f64
            };
            times.push(lo * (knee / lo).powf(frac));
        }
        for i in 1..=n_lin {
            times.push(knee + (t_max - knee) * i as f64 / n_lin as f64);
        }
        if let Some(last) = times.last_mut() {
            *last = t_max;
        }
        Ok(times)
    }
}

/// `C(t)` sampled on a (generally non-uniform) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl CorrelationSeries {
    pub fn real(&self) -> SampledSignal {
        SampledSignal {
            times: self.times.clone(),
            values: self.values.iter().map(|c| c.re).collect(),
        }
    }

    pub fn imag(&self) -> SampledSignal {
        SampledSignal {
            times: self.times.clone(),
            values: self.values.iter().map(|c| c.im).collect(),
        }
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Samples `C(t)` on the hybrid grid. Points are evaluated in parallel and assembled in
/// grid order.
pub fn correlation_series(grid: &SampleGrid, spec: &BathSpec) -> Result<CorrelationSeries> {
    let times = grid.times()?;
    let values = times
        .par_iter()
        .map(|&t| correlation_value(t, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationSeries { times, values })
}

/// `C(t)` on the uniform grid `i * t_max / (n - 1)`, for diagnostics and plots.
pub fn correlation_uniform(t_max: f64, n: usize, spec: &BathSpec) -> Result<TimeSeries> {
    if n < 2 || !(t_max > 0.0) {
        return Err(Error::Domain(
            "uniform grid needs n >= 2 and t_max > 0".into(),
        ));
    }
    let dt = t_max / (n - 1) as f64;
    let values = (0..n)
        .into_par_iter()
        .map(|i| correlation_value(i as f64 * dt, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries::new(0.0, dt, values)?.with_units("1/omega_c", "omega_c^2"))
}

/// Least-squares slope of `log|C|` against `log t` over `window`.
pub fn tail_exponent(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::Mismatch("times and values differ in length".into()));
    }
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!("invalid window [{lo}, {hi}]")));
    }
    let first = times.first().copied().unwrap_or(f64::NAN);
    let last = times.last().copied().unwrap_or(f64::NAN);
    if lo < first || hi > last {
        return Err(Error::Domain(format!(
            "window [{lo}, {hi}] lies outside the series [{first}, {last}]"
        )));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(&t, &v)| (t, v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Domain(
            "fewer than two samples inside the window".into(),
        ));
    }
    let sign = pts[0].1.signum();
    if pts.iter().any(|&(_, v)| v == 0.0 || v.signum() != sign) {
        return Err(Error::Domain(
            "samples change sign or vanish inside the window".into(),
        ));
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in &pts {
        let (x, y) = (t.ln(), v.abs().ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// `tail_exponent` on a uniform series.
pub fn tail_exponent_series(
    series: &TimeSeries,
    window: (f64, f64),
    imaginary: bool,
) -> Result<f64> {
    let times: Vec<f64> = series.times().collect();
    let values = if imaginary { series.im() } else { series.re() };
    tail_exponent(&times, &values, window)
}

/// `C_I(t) = -(pi/8) alpha wc^3 t exp(-wc t)`, exact for the Ohmic rational-cutoff bath at T = 0.
pub fn ohmic_imaginary_closed_form(t: f64, alpha: f64, omega_c: f64) -> f64 {
    -PI / 8.0 * alpha * omega_c.powi(3) * t * (-omega_c * t).exp()
}
