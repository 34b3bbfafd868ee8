mod common;

use std::sync::Arc;

use num_complex::Complex64;
use sbheom::decomp::{BasisFunction, CorrelationFit, FitPart};
use sbheom::heom::{
    enumerate_space, propagate, AdoState, Block, Generator, Rescaling, Span, SystemSpec,
    DEFAULT_ADO_BUDGET,
};

#[test]
fn one_mode_overlap_matches_decoherence_exponent() {
    // J = pi g^2 delta(w - w0) gives Phi = 4 g^2 (1 - cos w0 t) / w0^2
    let (w0, g) = (1.0, 0.3);
    for i in 0..=40 {
        let t = 0.25 * i as f64;
        let overlap = common::one_mode_overlap(t, w0, g, 60);
        let phi = 4.0 * g * g * (1.0 - (w0 * t).cos()) / (w0 * w0);
        assert!(
            (overlap - Complex64::new((-phi).exp(), 0.0)).norm() < 1e-12,
            "t={t}: {overlap}"
        );
    }
}

#[test]
fn one_mode_hierarchy_matches_exact_diagonalization() {
    // the one-mode correlation g^2 exp(-i w0 t) is exactly a cos/sin pair with vanishing rate
    // in the real part and a sin in the imaginary part
    let (w0, g) = (1.0, 0.3);
    let fit = CorrelationFit::from_parts(
        FitPart::new(
            vec![
                BasisFunction::CosDecay {
                    freq: w0,
                    rate: 1e-12,
                },
                BasisFunction::SinDecay {
                    freq: w0,
                    rate: 1e-12,
                },
            ],
            vec![g * g, 0.0],
        )
        .unwrap(),
        FitPart::new(
            vec![
                BasisFunction::SinDecay {
                    freq: w0,
                    rate: 1e-12,
                },
                BasisFunction::CosDecay {
                    freq: w0,
                    rate: 1e-12,
                },
            ],
            vec![-g * g, 0.0],
        )
        .unwrap(),
        20.0,
    );
    let space =
        Arc::new(enumerate_space(fit.n_real(), fit.n_imag(), 14, DEFAULT_ADO_BUDGET).unwrap());
    let gen = Generator::new(
        space.clone(),
        &fit,
        SystemSpec::new(0.0),
        Rescaling::default(),
    )
    .unwrap();
    let rho = Block::from_real([[0.5, 0.5], [0.5, 0.5]]);
    let run = propagate(
        AdoState::product(space, rho),
        &gen,
        &Span::new(10.0, 0.005, 100),
    )
    .unwrap();
    for (t, b) in run.trajectory.times.iter().zip(&run.trajectory.rdm) {
        let exact = common::one_mode_overlap(*t, w0, g, 60).re;
        assert!(
            (b.expect_x().re - exact).abs() < 1e-6,
            "t={t}: {} vs {exact}",
            b.expect_x().re
        );
    }
}

#[test]
fn decoherence_exponent_small_time_limit() {
    // Phi ~ 2 C_R(0) t^2 for t -> 0
    let (s, alpha) = (0.5, 0.05);
    let c0 = 0.25 * alpha * statrs::function::beta::beta(0.5 * (s + 1.0), 0.5 * (3.0 - s));
    let t = 1e-3;
    let phi = common::decoherence_exponent(t, s, alpha);
    assert!((phi / (2.0 * c0 * t * t) - 1.0).abs() < 1e-5, "{phi}");
}
