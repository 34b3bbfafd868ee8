#![allow(dead_code)]

pub mod sequence;

use num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

pub fn rational_density(w: f64, s: f64, alpha: f64) -> f64 {
    0.5 * PI * alpha * w.powf(s) / (1.0 + w * w).powi(2)
}

/// Real-axis oracle for `C(t)` at zero temperature and omega_c = 1.
///
/// The first panel uses `omega = L x^8` to remove the `omega^s` endpoint behavior;
/// the rest is split at half periods of the oscillation, growing geometrically where
/// the oscillation is slow.
pub fn correlation_oracle(t: f64, s: f64, alpha: f64) -> Complex64 {
    let (gx, gw) = gauss_legendre(40);
    let f =
        |w: f64| rational_density(w, s, alpha) * Complex64::new((w * t).cos(), -(w * t).sin()) / PI;
    let half_period = if t > 0.0 { PI / t } else { f64::INFINITY };
    let first = half_period.min(0.5);
    let mut total = Complex64::new(0.0, 0.0);
    // omega = first * x^8 on [0, 1], split in four
    for p in 0..4 {
        let (a, b) = (p as f64 / 4.0, (p + 1) as f64 / 4.0);
        for (x, wt) in gx.iter().zip(&gw) {
            let u = 0.5 * (b - a) * x + 0.5 * (a + b);
            let jac = 8.0 * first * u.powi(7);
            total += f(first * u.powi(8)) * jac * wt * 0.5 * (b - a);
        }
    }
    let w_end = 4e4;
    let mut a = first;
    while a < w_end {
        let width = half_period.min(0.25 * a.max(1.0));
        let b = (a + width).min(w_end);
        for (x, wt) in gx.iter().zip(&gw) {
            let w = 0.5 * (b - a) * x + 0.5 * (a + b);
            total += f(w) * wt * 0.5 * (b - a);
        }
        a = b;
    }
    total
}

use sbheom::decomp::{BasisFunction, CorrelationFit, FitPart};

fn part(basis: Vec<BasisFunction>, coefficients: Vec<f64>) -> FitPart {
    FitPart::new(basis, coefficients).expect("valid basis")
}

/// Hand-built fits with at most two basis functions in total, covering every basis kind.
pub fn small_fits() -> Vec<CorrelationFit> {
    use BasisFunction::*;
    let t = 50.0;
    vec![
        CorrelationFit::from_parts(
            part(vec![Decay { rate: 0.8 }], vec![0.3]),
            FitPart::empty(),
            t,
        ),
        CorrelationFit::from_parts(
            FitPart::empty(),
            part(vec![Decay { rate: 1.3 }], vec![-0.2]),
            t,
        ),
        CorrelationFit::from_parts(
            part(
                vec![
                    CosDecay {
                        freq: 1.7,
                        rate: 0.6,
                    },
                    SinDecay {
                        freq: 1.7,
                        rate: 0.6,
                    },
                ],
                vec![0.25, -0.15],
            ),
            FitPart::empty(),
            t,
        ),
        CorrelationFit::from_parts(
            part(vec![Decay { rate: 0.4 }], vec![0.2]),
            part(vec![Decay { rate: 2.0 }], vec![-0.3]),
            t,
        ),
        CorrelationFit::from_parts(
            FitPart::empty(),
            part(
                vec![LinearDecay { rate: 1.0 }, Decay { rate: 1.0 }],
                vec![-0.19, 0.05],
            ),
            t,
        ),
        CorrelationFit::from_parts(
            part(
                vec![Decay { rate: 3.0 }, Decay { rate: 0.1 }],
                vec![0.1, 0.02],
            ),
            FitPart::empty(),
            t,
        ),
    ]
}

/// A fit mixing every basis kind in both parts.
pub fn mixed_fit() -> CorrelationFit {
    use BasisFunction::*;
    CorrelationFit::from_parts(
        part(
            vec![
                CosDecay {
                    freq: 1.3,
                    rate: 0.4,
                },
                SinDecay {
                    freq: 1.3,
                    rate: 0.4,
                },
                Decay { rate: 0.2 },
            ],
            vec![0.12, -0.04, 0.03],
        ),
        part(
            vec![LinearDecay { rate: 1.0 }, Decay { rate: 1.0 }],
            vec![-0.1, 0.02],
        ),
        100.0,
    )
}

/// Independent-boson decoherence exponent `(4/pi) int J(w) (1 - cos wt) / w^2 dw` for the
/// rational density, by Gauss-Legendre panels.
pub fn decoherence_exponent(t: f64, s: f64, alpha: f64) -> f64 {
    let (gx, gw) = gauss_legendre(40);
    let f = |w: f64| {
        let x = w * t;
        // 1 - cos x without cancellation
        let one_minus_cos = 2.0 * (0.5 * x).sin().powi(2);
        rational_density(w, s, alpha) * one_minus_cos / (w * w)
    };
    let half_period = if t > 0.0 { PI / t } else { f64::INFINITY };
    let first = half_period.min(0.5);
    let mut total = 0.0;
    for p in 0..4 {
        let (a, b) = (p as f64 / 4.0, (p + 1) as f64 / 4.0);
        for (x, wt) in gx.iter().zip(&gw) {
            let u = 0.5 * (b - a) * x + 0.5 * (a + b);
            total += f(first * u.powi(8)) * 8.0 * first * u.powi(7) * wt * 0.5 * (b - a);
        }
    }
    let mut a = first;
    while a < 4e4 {
        let b = (a + half_period.min(0.25 * a.max(1.0))).min(4e4);
        for (x, wt) in gx.iter().zip(&gw) {
            total += f(0.5 * (b - a) * x + 0.5 * (a + b)) * wt * 0.5 * (b - a);
        }
        a = b;
    }
    4.0 / PI * total
}

/// `<0| exp(i H_- t) exp(-i H_+ t) |0>` for `H_pm = w0 n pm g (b + b^dagger)` in a truncated
/// Fock space, by exact diagonalization.
pub fn one_mode_overlap(t: f64, w0: f64, g: f64, n_max: usize) -> Complex64 {
    use nalgebra::{DMatrix, DVector, SymmetricEigen};
    let evolve = |sign: f64| -> DVector<Complex64> {
        let dim = n_max + 1;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for n in 0..dim {
            h[(n, n)] = w0 * n as f64;
            if n + 1 < dim {
                let x = sign * g * ((n + 1) as f64).sqrt();
                h[(n, n + 1)] = x;
                h[(n + 1, n)] = x;
            }
        }
        let eig = SymmetricEigen::new(h);
        let mut psi = DVector::<Complex64>::zeros(dim);
        for k in 0..dim {
            let v = eig.eigenvectors.column(k);
            let phase = Complex64::new(0.0, -eig.eigenvalues[k] * t).exp() * v[0];
            for n in 0..dim {
                psi[n] += phase * v[n];
            }
        }
        psi
    };
    let plus = evolve(1.0);
    let minus = evolve(-1.0);
    minus
        .iter()
        .zip(plus.iter())
        .map(|(m, p)| m.conj() * p)
        .sum()
}

/// Solution of `M' = -2 int k M` for `k = a exp(-b t)`, from the Laplace transform
/// `M(p) = (p + b) / (p^2 + b p + 2a)`.
pub fn m_exponential_kernel(t: f64, a: f64, b: f64) -> f64 {
    let root = Complex64::new(0.25 * b * b - 2.0 * a, 0.0).sqrt();
    let r1 = Complex64::new(-0.5 * b, 0.0) + root;
    let r2 = Complex64::new(-0.5 * b, 0.0) - root;
    ((r1 + b) / (r1 - r2) * (r1 * t).exp() + (r2 + b) / (r2 - r1) * (r2 * t).exp()).re
}

type M2 = nalgebra::Matrix2<Complex64>;

fn sigma_z() -> M2 {
    M2::new(
        Complex64::new(1.0, 0.0),
        0.0.into(),
        0.0.into(),
        Complex64::new(-1.0, 0.0),
    )
}

fn to_matrix(b: &sbheom::heom::Block) -> M2 {
    M2::new(b.0[0], b.0[1], b.0[2], b.0[3])
}

/// `exp(-i Delta sigma_x t)` by the matrix exponential.
fn evolution(delta: f64, t: f64) -> M2 {
    let h = M2::new(0.0.into(), delta.into(), delta.into(), 0.0.into());
    (h * Complex64::new(0.0, -t)).exp()
}

/// `<sigma_z(t)>` of the isolated spin from `rho0`.
pub fn closed_magnetization(t: f64, delta: f64, rho0: &sbheom::heom::Block) -> f64 {
    let u = evolution(delta, t);
    (sigma_z() * u * to_matrix(rho0) * u.adjoint()).trace().re
}

/// Kubo response `i Tr{sigma_z(t) [sigma_z, rho]}` of the isolated spin, Heisenberg picture.
pub fn closed_response(t: f64, delta: f64, rho: &sbheom::heom::Block) -> f64 {
    let u = evolution(delta, t);
    let rho = to_matrix(rho);
    let comm = sigma_z() * rho - rho * sigma_z();
    (Complex64::i() * (u.adjoint() * sigma_z() * u * comm).trace()).re
}
