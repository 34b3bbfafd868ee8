//! Separable nonlinear least squares for the correlation-function decomposition.
//!
//! The rates and frequencies are the nonlinear parameters (optimized in log space so
//! they stay positive); for every trial set the linear coefficients are eliminated by an
//! SVD least-squares solve. Steps are Levenberg-Marquardt on the projected residual using
//! Kaufman's approximation of the variable-projection Jacobian.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{fit_error_report, target_hash, BasisFunction, CorrelationFit, FitPart};
use crate::bath::CorrelationSeries;
use crate::error::{Error, Result};

/// Composition of one part of the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitTemplate {
    /// Plain decays `exp(-G t)`.
    pub decays: usize,
    /// `(cos, sin) exp(-g t)` pairs.
    pub oscillatory_pairs: usize,
    /// `(t exp(-G t), exp(-G t))` pairs sharing `G`.
    pub linear_pairs: usize,
}

impl FitTemplate {
    pub fn decays(n: usize) -> Self {
        FitTemplate {
            decays: n,
            oscillatory_pairs: 0,
            linear_pairs: 0,
        }
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.decays + 2 * self.oscillatory_pairs + 2 * self.linear_pairs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn n_params(&self) -> usize {
        self.decays + 2 * self.oscillatory_pairs + self.linear_pairs
    }

    /// Basis in canonical order: oscillatory pairs, linear pairs, decays.
    fn basis(&self, p: &[f64]) -> Vec<BasisFunction> {
        let mut out = Vec::with_capacity(self.len());
        let mut k = 0;
        for _ in 0..self.oscillatory_pairs {
            let (freq, rate) = (p[k].exp(), p[k + 1].exp());
            out.push(BasisFunction::CosDecay { freq, rate });
            out.push(BasisFunction::SinDecay { freq, rate });
            k += 2;
        }
        for _ in 0..self.linear_pairs {
            let rate = p[k].exp();
            out.push(BasisFunction::LinearDecay { rate });
            out.push(BasisFunction::Decay { rate });
            k += 1;
        }
        for _ in 0..self.decays {
            out.push(BasisFunction::Decay { rate: p[k].exp() });
            k += 1;
        }
        out
    }

    /// Derivatives of the basis columns with respect to each log-parameter, as
    /// `(column, d column)` lists.
    fn derivative_columns(&self, p: &[f64], times: &[f64]) -> Vec<Vec<(usize, Vec<f64>)>> {
        let mut out = Vec::with_capacity(self.n_params());
        let mut k = 0;
        let mut col = 0;
        for _ in 0..self.oscillatory_pairs {
            let (w, g) = (p[k].exp(), p[k + 1].exp());
            let cos_t = |t: f64| (w * t).cos() * (-g * t).exp();
            let sin_t = |t: f64| (w * t).sin() * (-g * t).exp();
            out.push(vec![
                (col, times.iter().map(|&t| -w * t * sin_t(t)).collect()),
                (col + 1, times.iter().map(|&t| w * t * cos_t(t)).collect()),
            ]);
            out.push(vec![
                (col, times.iter().map(|&t| -g * t * cos_t(t)).collect()),
                (col + 1, times.iter().map(|&t| -g * t * sin_t(t)).collect()),
            ]);
            k += 2;
            col += 2;
        }
        for _ in 0..self.linear_pairs {
            let r = p[k].exp();
            out.push(vec![
                (
                    col,
                    times.iter().map(|&t| -r * t * t * (-r * t).exp()).collect(),
                ),
                (
                    col + 1,
                    times.iter().map(|&t| -r * t * (-r * t).exp()).collect(),
                ),
            ]);
            k += 1;
            col += 2;
        }
        for _ in 0..self.decays {
            let r = p[k].exp();
            out.push(vec![(
                col,
                times.iter().map(|&t| -r * t * (-r * t).exp()).collect(),
            )]);
            k += 1;
            col += 1;
        }
        out
    }
}

/// Per-sample weighting of the least-squares residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weighting {
    /// Absolute deviations.
    Uniform,
    /// Deviations relative to `max(|C(t)|, floor * max|C|)`; emphasizes the tail.
    Relative { floor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub real: FitTemplate,
    pub imag: FitTemplate,
    pub multistart: usize,
    pub seed: u64,
    /// Target bound on `max |delta C_X| / omega_c^2`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub weighting: Weighting,
    /// Ridge penalty on the linear coefficients, relative to `max|C|^2`. Keeps the
    /// optimizer away from nearly coincident rates with huge cancelling coefficients,
    /// which fit well but make the hierarchy stiff.
    pub ridge: f64,
    /// Upper bound on every fitted rate and frequency. Fast components make the
    /// hierarchy stiff, so propagation runs usually cap this well below the default.
    #[serde(default = "default_max_rate")]
    pub max_rate: f64,
}

fn default_max_rate() -> f64 {
    1e3
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            real: FitTemplate::decays(9),
            imag: FitTemplate {
                decays: 8,
                oscillatory_pairs: 1,
                linear_pairs: 0,
            },
            multistart: 16,
            seed: 2024,
            tolerance: 5e-5,
            max_iterations: 400,
            weighting: Weighting::Uniform,
            ridge: 1e-10,
            max_rate: default_max_rate(),
        }
    }
}

/// Least-squares coefficients of `basis` against `values` (optionally weighted), and
/// the weighted residual norm.
pub fn solve_coefficients(
    basis: &[BasisFunction],
    times: &[f64],
    values: &[f64],
    weights: Option<&[f64]>,
) -> (Vec<f64>, f64) {
    let m = times.len();
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let phi = DMatrix::from_fn(m, basis.len(), |i, j| w(i) * basis[j].eval(times[i]));
    let y = DVector::from_fn(m, |i, _| w(i) * values[i]);
    let svd = phi.clone().svd(true, true);
    let c = svd
        .solve(&y, rcond(&svd.singular_values))
        .unwrap_or_else(|_| DVector::zeros(basis.len()));
    let r = &y - &phi * &c;
    (c.iter().copied().collect(), r.norm())
}

fn rcond(sv: &DVector<f64>) -> f64 {
    sv.max() * 1e-13
}

struct Problem<'a> {
    template: FitTemplate,
    times: &'a [f64],
    /// weighted target, padded with zeros for the ridge rows
    y: DVector<f64>,
    weights: Vec<f64>,
    ridge: f64,
    log_max: f64,
}

struct Evaluation {
    cost: f64,
    residual: DVector<f64>,
    jacobian: Option<DMatrix<f64>>,
    coefficients: Vec<f64>,
}

const LOG_MIN: f64 = -16.0; // ~1e-7

impl<'a> Problem<'a> {
    fn evaluate(&self, p: &[f64], with_jacobian: bool) -> Evaluation {
        let basis = self.template.basis(p);
        let m = self.times.len();
        let n = basis.len();
        let sqrt_ridge = self.ridge.sqrt();
        let phi = DMatrix::from_fn(m + n, n, |i, j| {
            if i < m {
                self.weights[i] * basis[j].eval(self.times[i])
            } else if i - m == j {
                sqrt_ridge
            } else {
                0.0
            }
        });
        let svd = phi.clone().svd(true, true);
        let tol = rcond(&svd.singular_values);
        let c = svd
            .solve(&self.y, tol)
            .unwrap_or_else(|_| DVector::zeros(n));
        let residual = &self.y - &phi * &c;
        let cost = 0.5 * residual.norm_squared();

        let jacobian = with_jacobian.then(|| {
            // orthonormal basis of the numerical range of phi
            let u = svd.u.as_ref().expect("left singular vectors requested");
            let kept: Vec<usize> = (0..svd.singular_values.len())
                .filter(|&j| svd.singular_values[j] > tol)
                .collect();
            let u = u.select_columns(kept.iter());
            let derivs = self.template.derivative_columns(p, self.times);
            let mut jac = DMatrix::zeros(m + n, derivs.len());
            for (k, cols) in derivs.iter().enumerate() {
                let mut v = DVector::zeros(m + n);
                for (col, d) in cols {
                    for i in 0..m {
                        v[i] += c[*col] * self.weights[i] * d[i];
                    }
                }
                let proj = &u * (u.transpose() * &v);
                jac.set_column(k, &(-(v - proj)));
            }
            jac
        });
        Evaluation {
            cost,
            residual,
            jacobian,
            coefficients: c.iter().copied().collect(),
        }
    }

    fn levenberg_marquardt(
        &self,
        start: Vec<f64>,
        max_iterations: usize,
    ) -> (Vec<f64>, Evaluation) {
        let log_max = self.log_max;
        let clamp = |p: &mut [f64]| p.iter_mut().for_each(|x| *x = x.clamp(LOG_MIN, log_max));
        let mut p = start;
        clamp(&mut p);
        let mut current = self.evaluate(&p, true);
        let mut lambda = 1e-3;
        let mut stalled = 0;
        for _ in 0..max_iterations {
            let jac = current.jacobian.as_ref().expect("jacobian present");
            let a = jac.transpose() * jac;
            let g = jac.transpose() * &current.residual;
            let dmax = a.diagonal().max().max(f64::MIN_POSITIVE);
            let mut accepted = false;
            while lambda < 1e14 {
                let mut damped = a.clone();
                for i in 0..damped.nrows() {
                    damped[(i, i)] += lambda * a[(i, i)].max(1e-12 * dmax);
                }
                let step = match damped.cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                };
                let mut trial: Vec<f64> = p
                    .iter()
                    .zip(step.iter())
                    .map(|(x, d)| x + d.clamp(-2.0, 2.0))
                    .collect();
                clamp(&mut trial);
                let eval = self.evaluate(&trial, false);
                if eval.cost.is_finite() && eval.cost < current.cost {
                    let gain = (current.cost - eval.cost) / current.cost.max(f64::MIN_POSITIVE);
                    p = trial;
                    current = self.evaluate(&p, true);
                    lambda = (lambda / 3.0).max(1e-12);
                    stalled = if gain < 1e-10 { stalled + 1 } else { 0 };
                    accepted = true;
                    break;
                }
                lambda *= 4.0;
            }
            if !accepted || stalled >= 5 || current.cost == 0.0 {
                break;
            }
        }
        (p, current)
    }
}

fn initial_guess(template: &FitTemplate, times: &[f64], values: &[f64], log_max: f64) -> Vec<f64> {
    let t_max = times.last().copied().unwrap_or(1.0).max(1e-6);
    let mut p = Vec::with_capacity(template.n_params());
    // oscillation frequency from the first zero crossing of the target
    let crossing = values
        .windows(2)
        .zip(times.windows(2))
        .find(|(v, _)| v[0] != 0.0 && v[0].signum() != v[1].signum())
        .map(|(_, t)| 0.5 * (t[0] + t[1]));
    let w0 = crossing.map_or(2.0, |t0| (PI / (2.0 * t0)).clamp(1e-3, 50.0));
    for j in 0..template.oscillatory_pairs {
        let w = w0 * 2f64.powi(j as i32);
        p.push(w.ln());
        p.push((0.5 * w).ln());
    }
    p.extend(std::iter::repeat_n(0.0, template.linear_pairs));
    let lo = (2.0 * PI / t_max).min(1.0);
    let hi: f64 = 10f64.min(0.5 * log_max.exp());
    let n = template.decays;
    for j in 0..n {
        let frac = if n == 1 {
            0.5
        } else {
            j as f64 / (n - 1) as f64
        };
        p.push((hi.ln() + frac * (lo.ln() - hi.ln())).clamp(LOG_MIN, log_max));
    }
    p
}

struct PartOutcome {
    basis: Vec<BasisFunction>,
    coefficients: Vec<f64>,
}

fn fit_part(
    times: &[f64],
    values: &[f64],
    template: FitTemplate,
    config: &FitConfig,
    stream: u64,
) -> Result<PartOutcome> {
    if template.is_empty() {
        return Err(Error::FitInput("zero basis functions requested".into()));
    }
    let ymax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let weights: Vec<f64> = match config.weighting {
        Weighting::Uniform => vec![1.0; values.len()],
        Weighting::Relative { floor } => values
            .iter()
            .map(|v| 1.0 / v.abs().max(floor * ymax).max(f64::MIN_POSITIVE))
            .collect(),
    };
    let m = values.len();
    let wmax = weights
        .iter()
        .zip(values)
        .fold(0.0f64, |acc, (w, v)| acc.max((w * v).abs()));
    let problem = Problem {
        template,
        times,
        y: DVector::from_fn(m + template.len(), |i, _| {
            if i < m {
                weights[i] * values[i]
            } else {
                0.0
            }
        }),
        weights,
        ridge: config.ridge * wmax * wmax,
        log_max: config.max_rate.ln(),
    };
    let p0 = initial_guess(&template, times, values, problem.log_max);
    let starts = config.multistart.max(1);
    let runs: Vec<(Vec<f64>, Evaluation)> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut p = p0.clone();
            if i > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(stream * 1_000_003 + i as u64);
                let normal = Normal::new(0.0, 0.6).expect("valid normal");
                p.iter_mut().for_each(|x| *x += normal.sample(&mut rng));
            }
            problem.levenberg_marquardt(p, config.max_iterations)
        })
        .collect();
    // lowest cost wins, ties go to the earliest start
    let (best_p, best) = runs
        .into_iter()
        .reduce(|a, b| if b.1.cost < a.1.cost { b } else { a })
        .expect("at least one start");
    // ridge-free polish, kept only if the coefficients stay bounded
    let free = Problem {
        ridge: 0.0,
        ..problem
    };
    let before = free.evaluate(&best_p, false).cost;
    let (polished_p, polished) =
        free.levenberg_marquardt(best_p.clone(), config.max_iterations / 4);
    let bound = 10.0 * best.coefficients.iter().fold(ymax, |m, c| m.max(c.abs()));
    let (p, coefficients) =
        if polished.cost < before && polished.coefficients.iter().all(|c| c.abs() <= bound) {
            (polished_p, polished.coefficients)
        } else {
            (best_p, best.coefficients)
        };
    Ok(PartOutcome {
        basis: template.basis(&p),
        coefficients,
    })
}

/// Fits both parts of `target` with the templates in `config`.
///
/// A fit that misses `config.tolerance` is still returned, with
/// `meets_tolerance == false`.
pub fn fit_correlation(target: &CorrelationSeries, config: &FitConfig) -> Result<CorrelationFit> {
    if target.times.len() != target.values.len() || target.times.len() < 2 {
        return Err(Error::FitInput(
            "target needs matching times and at least two samples".into(),
        ));
    }
    if target.times.iter().any(|t| !t.is_finite())
        || target
            .values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        return Err(Error::FitInput(
            "target contains NaN or infinite samples".into(),
        ));
    }
    if config.real.is_empty() && config.imag.is_empty() {
        return Err(Error::FitInput("zero basis functions requested".into()));
    }
    let times = &target.times;
    let re: Vec<f64> = target.values.iter().map(|c| c.re).collect();
    let im: Vec<f64> = target.values.iter().map(|c| c.im).collect();

    let part = |values: &[f64], template: FitTemplate, stream: u64| -> Result<FitPart> {
        if template.is_empty() {
            return Ok(FitPart::empty());
        }
        let out = fit_part(times, values, template, config, stream)?;
        FitPart::new(out.basis, out.coefficients)
    };
    let real = part(&re, config.real, 1)?;
    let imag = part(&im, config.imag, 2)?;

    let mut fit = CorrelationFit::from_parts(real, imag, target.t_max());
    fit.residual = fit_error_report(&fit, target)?.summary;
    fit.tolerance = config.tolerance;
    fit.meets_tolerance = fit.residual.max() <= config.tolerance;
    fit.seed = config.seed;
    fit.target_hash = target_hash(target);
    Ok(fit)
}
