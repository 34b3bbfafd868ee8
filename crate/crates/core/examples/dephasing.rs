//! Pure dephasing (Delta = 0): hierarchy depth scan against the decoherence function.

use std::sync::Arc;

use sbheom::bath::{correlation_series, spectral_density, BathSpec, SampleGrid};
use sbheom::decomp::{fit_correlation, FitConfig, FitTemplate};
use sbheom::heom::{
    enumerate_space, propagate, AdoState, Block, Generator, Rescaling, Span, SystemSpec,
    DEFAULT_ADO_BUDGET,
};

/// `(4/pi) int J(w) (1 - cos wt) / w^2 dw` by the midpoint rule in log w.
fn phi(t: f64, spec: &BathSpec) -> f64 {
    let (a, b, n) = (-14.0f64, 8.0f64, 400_000);
    let h = (b - a) / n as f64;
    let sum: f64 = (0..n)
        .map(|i| {
            let w = (a + (i as f64 + 0.5) * h).exp();
            let j = spectral_density(w, spec).unwrap();
            2.0 * j * (0.5 * w * t).sin().powi(2) / w
        })
        .sum();
    4.0 / std::f64::consts::PI * sum * h
}

fn main() -> sbheom::Result<()> {
    let spec = BathSpec::new(0.5, 0.05)?;
    let target = correlation_series(&SampleGrid::new(60.0, 1000), &spec)?;
    let fit = fit_correlation(
        &target,
        &FitConfig {
            real: FitTemplate::decays(8),
            imag: FitTemplate {
                decays: 6,
                oscillatory_pairs: 1,
                linear_pairs: 0,
            },
            max_rate: 20.0,
            ..FitConfig::default()
        },
    )?;
    let rho = Block::from_real([[0.5, 0.5], [0.5, 0.5]]);
    let times: Vec<f64> = (0..=6).map(|i| 5.0 * i as f64).collect();
    let exact: Vec<f64> = times.iter().map(|&t| (-phi(t, &spec)).exp()).collect();
    for depth in 1..=5 {
        let space = Arc::new(enumerate_space(
            fit.n_real(),
            fit.n_imag(),
            depth,
            DEFAULT_ADO_BUDGET,
        )?);
        let gen = Generator::new(
            space.clone(),
            &fit,
            SystemSpec::new(0.0),
            Rescaling::default(),
        )?;
        let run = propagate(
            AdoState::product(space.clone(), rho),
            &gen,
            &Span::new(30.0, 0.025, 200),
        )?;
        let err = run
            .trajectory
            .rdm
            .iter()
            .zip(&exact)
            .map(|(b, e)| (b.expect_x().re - e).abs() / e)
            .fold(0.0, f64::max);
        println!(
            "H = {depth}: {:6} ADOs, max relative error {err:.2e}",
            space.len()
        );
    }
    Ok(())
}
