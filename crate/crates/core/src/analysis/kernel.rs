//! Rate kernel of the time-convoluted equation `M'(t) = -2 int_0^t k(t - tau) M(tau) dtau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{trapezoid, TimeSeries};

/// Kernel `k(t) = delta_weight * delta(t) + series(t)`.
///
/// A pure exponential `M = exp(-2 kappa t)` needs the singular part: its kernel is
/// `kappa * delta(t)` with the full weight inside the integral.
#[derive(Debug, Clone, PartialEq)]
pub struct RateKernel {
    pub delta_weight: f64,
    pub series: TimeSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Allowed |M(0) - 1|.
    pub m0_tolerance: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { m0_tolerance: 1e-6 }
    }
}

/// First derivative by fourth-order finite differences (one-sided near the ends).
pub fn derivative4(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(
        n >= 5,
        "fourth-order differences need at least five samples"
    );
    let mut d = vec![0.0; n];
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    }
    let m = n - 1;
    d[m - 1] =
        (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) / (12.0 * h);
    d[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4])
        / (12.0 * h);
    d
}

fn second_derivative_at_start(f: &[f64], h: f64) -> f64 {
    (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5])
        / (12.0 * h * h)
}

/// Solves for the kernel on the grid of `m`.
///
/// The singular weight and `k(0)` follow from `M'(0)` and `M''(0)`; later values come
/// from a trapezoidal discretization of the convolution, solved forward in time.
pub fn extract_rate_kernel(m: &TimeSeries, config: &KernelConfig) -> Result<RateKernel> {
    let values = m.re();
    let n = values.len();
    if n < 6 {
        return Err(Error::Domain(format!(
            "kernel extraction needs at least 6 samples, got {n}"
        )));
    }
    let m0 = values[0];
    if (m0 - 1.0).abs() > config.m0_tolerance {
        return Err(Error::Domain(format!(
            "M(0) = {m0} is not 1 within {}",
            config.m0_tolerance
        )));
    }
    let h = m.dt;
    let diag = 0.5 * h * m0;
    if !(diag.abs() > 1e-300) {
        return Err(Error::Domain("degenerate time step".into()));
    }
    let dm = derivative4(&values, h);
    let delta_weight = -dm[0] / (2.0 * m0);
    let ddm0 = second_derivative_at_start(&values, h);
    let mut k = vec![0.0; n];
    k[0] = -(ddm0 + 2.0 * delta_weight * dm[0]) / (2.0 * m0);
    for i in 1..n {
        let g = dm[i] + 2.0 * delta_weight * values[i];
        let mut conv = 0.5 * k[0] * values[i];
        for j in 1..i {
            conv += k[j] * values[i - j];
        }
        k[i] = (-g / 2.0 - h * conv) / diag;
    }
    Ok(RateKernel {
        delta_weight,
        series: TimeSeries::from_real(m.t0, h, &k)?,
    })
}

/// Time-integrated rate and whether the kernel had decayed by the end of the record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratedRate {
    pub kappa0: f64,
    pub tail_converged: bool,
}

/// `kappa_0 = int_0^T k(t) dt`, flagged when |k(T)| exceeds `tail_threshold` times max |k|.
pub fn integrated_rate(kernel: &RateKernel, tail_threshold: f64) -> IntegratedRate {
    let k = kernel.series.re();
    let kappa0 = kernel.delta_weight + trapezoid(&k, kernel.series.dt);
    let peak = k.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let last = k.last().map_or(0.0, |x| x.abs());
    IntegratedRate {
        kappa0,
        tail_converged: last <= tail_threshold * peak || peak == 0.0,
    }
}

/// `2 int_0^t k(t - tau) M(tau) dtau` by the trapezoidal rule, used for roundtrip checks.
pub fn convolve(kernel: &RateKernel, m: &[f64]) -> Vec<f64> {
    let k = kernel.series.re();
    let h = kernel.series.dt;
    (0..m.len().min(k.len()))
        .map(|i| {
            let mut acc = if i == 0 {
                0.0
            } else {
                0.5 * (k[0] * m[i] + k[i] * m[0])
            };
            for j in 1..i {
                acc += k[j] * m[i - j];
            }
            2.0 * (h * acc + kernel.delta_weight * m[i])
        })
        .collect()
}
