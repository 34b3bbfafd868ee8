//! Decomposition of the bath correlation function into exponentially decaying basis
//! functions, and the derivative-closure matrices the hierarchy needs.
//!
//! Each part `X = R, I` of `C(t)` is approximated by `sum_n a_n phi_n(t)`, where every
//! basis function satisfies `d/dt phi_n = sum_m eta_{n,m} phi_m` with constant `eta`.

mod fit;

pub use fit::{fit_correlation, solve_coefficients, FitConfig, FitTemplate, Weighting};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::CorrelationSeries;
use crate::error::{Error, Result};

/// One basis function of the decomposition. Frequencies and rates share the time unit of
/// the fit (`omega_c = 1` internally).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisFunction {
    /// `exp(-rate t)`
    Decay { rate: f64 },
    /// `cos(freq t) exp(-rate t)`
    CosDecay { freq: f64, rate: f64 },
    /// `sin(freq t) exp(-rate t)`
    SinDecay { freq: f64, rate: f64 },
    /// `t exp(-rate t)`
    LinearDecay { rate: f64 },
}

impl BasisFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            BasisFunction::Decay { rate } => (-rate * t).exp(),
            BasisFunction::CosDecay { freq, rate } => (freq * t).cos() * (-rate * t).exp(),
            BasisFunction::SinDecay { freq, rate } => (freq * t).sin() * (-rate * t).exp(),
            BasisFunction::LinearDecay { rate } => t * (-rate * t).exp(),
        }
    }

    /// Analytic time derivative.
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            BasisFunction::Decay { rate } => -rate * (-rate * t).exp(),
            BasisFunction::CosDecay { freq, rate } => {
                -(rate * (freq * t).cos() + freq * (freq * t).sin()) * (-rate * t).exp()
            }
            BasisFunction::SinDecay { freq, rate } => {
                (freq * (freq * t).cos() - rate * (freq * t).sin()) * (-rate * t).exp()
            }
            BasisFunction::LinearDecay { rate } => (1.0 - rate * t) * (-rate * t).exp(),
        }
    }

    /// `phi(0)`.
    pub fn at_zero(&self) -> f64 {
        match self {
            BasisFunction::Decay { .. } | BasisFunction::CosDecay { .. } => 1.0,
            BasisFunction::SinDecay { .. } | BasisFunction::LinearDecay { .. } => 0.0,
        }
    }

    pub fn rate(&self) -> f64 {
        match *self {
            BasisFunction::Decay { rate }
            | BasisFunction::CosDecay { rate, .. }
            | BasisFunction::SinDecay { rate, .. }
            | BasisFunction::LinearDecay { rate } => rate,
        }
    }
}

/// Dense row-major closure matrix.
pub type Closure = Vec<Vec<f64>>;

/// Builds `eta` such that `phi_n' = sum_m eta[n][m] phi_m`.
///
/// Sine terms need a cosine partner with the same `(freq, rate)` and vice versa;
/// `t exp(-G t)` needs a plain decay with the same `G`.
pub fn build_closure(basis: &[BasisFunction]) -> Result<Closure> {
    let n = basis.len();
    let mut eta = vec![vec![0.0; n]; n];
    for (i, f) in basis.iter().enumerate() {
        if f.rate() <= 0.0 || !f.rate().is_finite() {
            return Err(Error::Structure(format!(
                "basis function {i} has non-positive rate {}",
                f.rate()
            )));
        }
        match *f {
            BasisFunction::Decay { rate } => eta[i][i] = -rate,
            BasisFunction::CosDecay { freq, rate } => {
                let j = find(basis, |g| *g == BasisFunction::SinDecay { freq, rate }).ok_or_else(
                    || Error::Structure(format!("cosine term {i} has no sine partner")),
                )?;
                eta[i][i] = -rate;
                eta[i][j] = -freq;
            }
            BasisFunction::SinDecay { freq, rate } => {
                let j = find(basis, |g| *g == BasisFunction::CosDecay { freq, rate }).ok_or_else(
                    || Error::Structure(format!("sine term {i} has no cosine partner")),
                )?;
                eta[i][i] = -rate;
                eta[i][j] = freq;
            }
            BasisFunction::LinearDecay { rate } => {
                let j = find(basis, |g| *g == BasisFunction::Decay { rate }).ok_or_else(|| {
                    Error::Structure(format!("linear-decay term {i} has no decay partner"))
                })?;
                eta[i][i] = -rate;
                eta[i][j] += 1.0;
            }
        }
    }
    Ok(eta)
}

fn find(basis: &[BasisFunction], pred: impl Fn(&BasisFunction) -> bool) -> Option<usize> {
    basis.iter().position(pred)
}

/// Basis, coefficients and closure of one part (real or imaginary) of the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPart {
    pub basis: Vec<BasisFunction>,
    pub coefficients: Vec<f64>,
    pub eta: Closure,
}

impl FitPart {
    pub fn new(basis: Vec<BasisFunction>, coefficients: Vec<f64>) -> Result<Self> {
        if basis.len() != coefficients.len() {
            return Err(Error::Mismatch(format!(
                "{} basis functions but {} coefficients",
                basis.len(),
                coefficients.len()
            )));
        }
        let eta = build_closure(&basis)?;
        Ok(FitPart {
            basis,
            coefficients,
            eta,
        })
    }

    pub fn empty() -> Self {
        FitPart {
            basis: Vec::new(),
            coefficients: Vec::new(),
            eta: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.basis
            .iter()
            .zip(&self.coefficients)
            .map(|(f, a)| a * f.eval(t))
            .sum()
    }

    /// Largest relative violation of the closure identity on `times`.
    pub fn closure_violation(&self, times: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for &t in times {
            let values: Vec<f64> = self.basis.iter().map(|f| f.eval(t)).collect();
            for (n, f) in self.basis.iter().enumerate() {
                let lhs = f.derivative(t);
                let rhs: f64 = self.eta[n].iter().zip(&values).map(|(e, v)| e * v).sum();
                let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
                let scale = scale.max(
                    self.eta[n]
                        .iter()
                        .zip(&values)
                        .map(|(e, v)| (e * v).abs())
                        .sum::<f64>(),
                );
                if scale > 0.0 {
                    worst = worst.max((lhs - rhs).abs() / scale);
                }
            }
        }
        worst
    }
}

/// Maximum and root-mean-square deviations, in units of `omega_c^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub max_real: f64,
    pub max_imag: f64,
    pub rms_real: f64,
    pub rms_imag: f64,
}

impl ResidualSummary {
    pub fn max(&self) -> f64 {
        self.max_real.max(self.max_imag)
    }
}

/// A fitted decomposition `C_fit(t) = sum a_R phi_R(t) + i sum a_I phi_I(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFit {
    pub real: FitPart,
    pub imag: FitPart,
    /// Fit horizon in units of `1/omega_c`.
    pub t_max: f64,
    pub residual: ResidualSummary,
    /// Whether `residual.max()` met the requested tolerance.
    pub meets_tolerance: bool,
    pub tolerance: f64,
    pub seed: u64,
    /// Hash of the target samples the fit was made against.
    pub target_hash: String,
}

impl CorrelationFit {
    /// A fit with no basis functions (decoupled bath).
    pub fn uncoupled() -> Self {
        CorrelationFit {
            real: FitPart::empty(),
            imag: FitPart::empty(),
            t_max: f64::MAX,
            residual: ResidualSummary {
                max_real: 0.0,
                max_imag: 0.0,
                rms_real: 0.0,
                rms_imag: 0.0,
            },
            meets_tolerance: true,
            tolerance: 0.0,
            seed: 0,
            target_hash: String::new(),
        }
    }

    /// Builds a fit from explicit parts (e.g. an analytically known decomposition).
    pub fn from_parts(real: FitPart, imag: FitPart, t_max: f64) -> Self {
        CorrelationFit {
            real,
            imag,
            t_max,
            ..CorrelationFit::uncoupled()
        }
    }

    pub fn n_real(&self) -> usize {
        self.real.len()
    }

    pub fn n_imag(&self) -> usize {
        self.imag.len()
    }

    /// `C_fit(t)`.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        Complex64::new(self.real.eval(t), self.imag.eval(t))
    }

    /// Whether `t` lies beyond the fitted horizon.
    pub fn is_extrapolation(&self, t: f64) -> bool {
        t > self.t_max
    }

    /// The same decomposition with every coefficient multiplied by `factor`.
    /// `C(t)` is linear in the Kondo parameter, so this rescales a fit to another `alpha`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for a in out
            .real
            .coefficients
            .iter_mut()
            .chain(out.imag.coefficients.iter_mut())
        {
            *a *= factor;
        }
        let r = &mut out.residual;
        r.max_real *= factor.abs();
        r.max_imag *= factor.abs();
        r.rms_real *= factor.abs();
        r.rms_imag *= factor.abs();
        out.tolerance *= factor.abs();
        out
    }

    /// Largest closure violation over both parts.
    pub fn closure_violation(&self, times: &[f64]) -> f64 {
        self.real
            .closure_violation(times)
            .max(self.imag.closure_violation(times))
    }

    /// Canonical JSON document.
    pub fn to_document(&self) -> String {
        let doc = FitDocument {
            format: FIT_FORMAT.to_string(),
            version: FIT_VERSION,
            fit: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("fit serialization cannot fail")
    }

    pub fn from_document(text: &str) -> Result<Self> {
        let doc: FitDocument =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("fit document: {e}")))?;
        if doc.format != FIT_FORMAT {
            return Err(Error::Format(format!(
                "not a fit document (format `{}`)",
                doc.format
            )));
        }
        // recompute and check the closure so a hand-edited file cannot desynchronize it
        let fit = doc.fit;
        for part in [&fit.real, &fit.imag] {
            let eta = build_closure(&part.basis)?;
            if eta != part.eta {
                return Err(Error::Format(
                    "stored closure matrix does not match the basis".into(),
                ));
            }
        }
        Ok(fit)
    }

    /// SHA-256 of the canonical document.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_document().as_bytes()))
    }
}

const FIT_FORMAT: &str = "sbheom-correlation-fit";
const FIT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct FitDocument {
    format: String,
    version: u32,
    fit: CorrelationFit,
}

/// Hash of target samples (bit patterns of times and values).
pub fn target_hash(target: &CorrelationSeries) -> String {
    let mut h = Sha256::new();
    for (t, v) in target.times.iter().zip(&target.values) {
        h.update(t.to_le_bytes());
        h.update(v.re.to_le_bytes());
        h.update(v.im.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Per-sample deviations `C_fit(t) - C(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitErrorReport {
    pub times: Vec<f64>,
    pub delta_real: Vec<f64>,
    pub delta_imag: Vec<f64>,
    pub summary: ResidualSummary,
}

/// Compares `fit` against `target` sample by sample.
pub fn fit_error_report(
    fit: &CorrelationFit,
    target: &CorrelationSeries,
) -> Result<FitErrorReport> {
    if target.times.len() != target.values.len() || target.times.is_empty() {
        return Err(Error::Mismatch(
            "target grid and values are incompatible".into(),
        ));
    }
    let mut delta_real = Vec::with_capacity(target.times.len());
    let mut delta_imag = Vec::with_capacity(target.times.len());
    for (&t, c) in target.times.iter().zip(&target.values) {
        let f = fit.evaluate(t);
        delta_real.push(f.re - c.re);
        delta_imag.push(f.im - c.im);
    }
    let summary = summarize(&delta_real, &delta_imag);
    Ok(FitErrorReport {
        times: target.times.clone(),
        delta_real,
        delta_imag,
        summary,
    })
}

pub(crate) fn summarize(delta_real: &[f64], delta_imag: &[f64]) -> ResidualSummary {
    let max = |d: &[f64]| d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rms = |d: &[f64]| {
        if d.is_empty() {
            0.0
        } else {
            (d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt()
        }
    };
    ResidualSummary {
        max_real: max(delta_real),
        max_imag: max(delta_imag),
        rms_real: rms(delta_real),
        rms_imag: rms(delta_imag),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_of_single_decay() {
        let eta = build_closure(&[BasisFunction::Decay { rate: 2.0 }]).unwrap();
        assert_eq!(eta, vec![vec![-2.0]]);
    }

    #[test]
    fn closure_of_oscillatory_pair() {
        let eta = build_closure(&[
            BasisFunction::CosDecay {
                freq: 3.0,
                rate: 1.0,
            },
            BasisFunction::SinDecay {
                freq: 3.0,
                rate: 1.0,
            },
        ])
        .unwrap();
        assert_eq!(eta, vec![vec![-1.0, -3.0], vec![3.0, -1.0]]);
    }

    #[test]
    fn closure_of_linear_decay() {
        let eta = build_closure(&[
            BasisFunction::LinearDecay { rate: 1.0 },
            BasisFunction::Decay { rate: 1.0 },
        ])
        .unwrap();
        assert_eq!(eta, vec![vec![-1.0, 1.0], vec![0.0, -1.0]]);
    }

    #[test]
    fn unpaired_terms_are_structural_errors() {
        assert!(matches!(
            build_closure(&[BasisFunction::SinDecay {
                freq: 1.0,
                rate: 1.0
            }]),
            Err(Error::Structure(_))
        ));
        assert!(matches!(
            build_closure(&[
                BasisFunction::LinearDecay { rate: 1.0 },
                BasisFunction::Decay { rate: 2.0 }
            ]),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn evaluate_at_zero_sums_constant_terms() {
        let real = FitPart::new(
            vec![
                BasisFunction::Decay { rate: 0.5 },
                BasisFunction::Decay { rate: 0.01 },
            ],
            vec![3.0, -1.0],
        )
        .unwrap();
        let fit = CorrelationFit::from_parts(real, FitPart::empty(), 100.0);
        assert_eq!(fit.evaluate(0.0), Complex64::new(2.0, 0.0));
        assert!(!fit.is_extrapolation(50.0));
        assert!(fit.is_extrapolation(150.0));
    }

    #[test]
    fn closure_identity_is_exact() {
        let part = FitPart::new(
            vec![
                BasisFunction::CosDecay {
                    freq: 2.108,
                    rate: 0.793,
                },
                BasisFunction::SinDecay {
                    freq: 2.108,
                    rate: 0.793,
                },
                BasisFunction::LinearDecay { rate: 1.3 },
                BasisFunction::Decay { rate: 1.3 },
                BasisFunction::Decay { rate: 5e-4 },
            ],
            vec![1.0; 5],
        )
        .unwrap();
        let times: Vec<f64> = (0..1000).map(|i| i as f64 * 0.05).collect();
        assert!(part.closure_violation(&times) < 1e-12);
    }

    #[test]
    fn perfect_fit_has_zero_error_series() {
        let real = FitPart::new(vec![BasisFunction::Decay { rate: 0.3 }], vec![0.7]).unwrap();
        let imag = FitPart::new(vec![BasisFunction::Decay { rate: 1.1 }], vec![-0.2]).unwrap();
        let fit = CorrelationFit::from_parts(real, imag, 10.0);
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let target = CorrelationSeries {
            values: times.iter().map(|&t| fit.evaluate(t)).collect(),
            times,
        };
        let report = fit_error_report(&fit, &target).unwrap();
        assert!(report
            .delta_real
            .iter()
            .chain(&report.delta_imag)
            .all(|d| *d == 0.0));
        assert_eq!(report.summary.max(), 0.0);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let fit = CorrelationFit::uncoupled();
        let target = CorrelationSeries {
            times: vec![0.0, 1.0],
            values: vec![Complex64::new(0.0, 0.0)],
        };
        assert!(fit_error_report(&fit, &target).is_err());
    }

    #[test]
    fn document_round_trip_is_bit_exact() {
        let real = FitPart::new(
            vec![
                BasisFunction::CosDecay {
                    freq: 0.1 + 0.2,
                    rate: 1.0 / 3.0,
                },
                BasisFunction::SinDecay {
                    freq: 0.1 + 0.2,
                    rate: 1.0 / 3.0,
                },
            ],
            vec![std::f64::consts::PI, -1e-300],
        )
        .unwrap();
        let fit = CorrelationFit::from_parts(real, FitPart::empty(), 2400.0);
        let text = fit.to_document();
        let back = CorrelationFit::from_document(&text).unwrap();
        assert_eq!(back.to_document(), text);
        assert_eq!(back.real.coefficients[1].to_bits(), (-1e-300f64).to_bits());
        assert_eq!(back.hash(), fit.hash());
    }
}
