//! Uniformly and non-uniformly sampled signals shared across the pipeline.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled complex signal `values[i] = f(t0 + i * dt)`.
///
/// Real-valued signals are stored with identically zero imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
    /// Unit of the abscissa, e.g. `"1/omega_c"` or `"1/Delta"`.
    pub time_unit: String,
    /// Unit of the ordinate.
    pub value_unit: String,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if values.len() < 2 {
            return Err(Error::Domain(format!(
                "a time series needs at least two samples, got {}",
                values.len()
            )));
        }
        Ok(TimeSeries {
            t0,
            dt,
            values,
            time_unit: String::new(),
            value_unit: String::new(),
        })
    }

    pub fn from_real(t0: f64, dt: f64, values: &[f64]) -> Result<Self> {
        Self::new(
            t0,
            dt,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Samples `f` on `t0 + i*dt` for `i < n`.
    pub fn sample(t0: f64, dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..n).map(|i| f(t0 + i as f64 * dt)).collect();
        Self::from_real(t0, dt, &values)
    }

    pub fn with_units(mut self, time_unit: &str, value_unit: &str) -> Self {
        self.time_unit = time_unit.to_string();
        self.value_unit = value_unit.to_string();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.time(i))
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    /// Largest imaginary magnitude relative to the largest real magnitude.
    pub fn imaginary_residual(&self) -> f64 {
        let re = self.values.iter().fold(0.0f64, |m, v| m.max(v.re.abs()));
        let im = self.values.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        if re == 0.0 {
            im
        } else {
            im / re
        }
    }
}

/// A signal sampled on an arbitrary increasing grid (used for fit targets).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Mismatch(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(
                "sample times must be strictly increasing".into(),
            ));
        }
        Ok(SampledSignal { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Window applied to a record before a one-sided Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    None,
    /// `exp(-t / tau)`.
    Exponential {
        tau: f64,
    },
    /// Raised-cosine roll-off over the final `fraction` of the record.
    CosineTaper {
        fraction: f64,
    },
}

impl Default for Window {
    fn default() -> Self {
        Window::CosineTaper { fraction: 0.1 }
    }
}

impl Window {
    /// Weight at time `t` for a record spanning `[0, t_end]`.
    pub fn weight(&self, t: f64, t_end: f64) -> f64 {
        match *self {
            Window::None => 1.0,
            Window::Exponential { tau } => (-t / tau).exp(),
            Window::CosineTaper { fraction } => {
                let start = t_end * (1.0 - fraction);
                if t <= start || fraction <= 0.0 {
                    1.0
                } else {
                    let x = ((t - start) / (t_end - start)).min(1.0);
                    0.5 * (1.0 + (std::f64::consts::PI * x).cos())
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Window::None => "none".into(),
            Window::Exponential { tau } => format!("exponential(tau={tau})"),
            Window::CosineTaper { fraction } => format!("cosine_taper(fraction={fraction})"),
        }
    }
}

/// Real samples on a uniform frequency grid `omega0 + i * d_omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub omega0: f64,
    pub d_omega: f64,
    pub values: Vec<f64>,
    pub window: Window,
}

impl Spectrum {
    pub fn new(omega0: f64, d_omega: f64, values: Vec<f64>, window: Window) -> Result<Self> {
        if !(d_omega > 0.0) {
            return Err(Error::Domain(format!(
                "frequency step must be positive, got {d_omega}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("spectrum contains non-finite values".into()));
        }
        Ok(Spectrum {
            omega0,
            d_omega,
            values,
            window,
        })
    }

    pub fn omega(&self, i: usize) -> f64 {
        self.omega0 + i as f64 * self.d_omega
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Trapezoidal integral of uniformly spaced samples.
pub(crate) fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            dt * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_series() {
        assert!(TimeSeries::from_real(0.0, 0.0, &[1.0, 2.0]).is_err());
        assert!(TimeSeries::from_real(0.0, 0.1, &[1.0]).is_err());
        assert!(TimeSeries::from_real(0.0, 0.1, &[1.0, 2.0]).is_ok());
    }

    #[test]
    fn taper_rolls_off_in_final_fraction() {
        let w = Window::CosineTaper { fraction: 0.1 };
        assert_eq!(w.weight(0.5, 10.0), 1.0);
        assert_eq!(w.weight(9.0, 10.0), 1.0);
        assert!((w.weight(9.5, 10.0) - 0.5).abs() < 1e-12);
        assert!(w.weight(10.0, 10.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let v: Vec<f64> = (0..11).map(|i| 2.0 * i as f64 * 0.1 + 1.0).collect();
        assert!((trapezoid(&v, 0.1) - 2.0).abs() < 1e-12);
    }
}
