//! Kubo response and absorption spectrum of the isolated spin and a damped one.

use std::sync::Arc;

use sbheom::decomp::{BasisFunction, CorrelationFit, FitPart};
use sbheom::heom::{enumerate_space, Generator, Rescaling, SystemSpec, DEFAULT_ADO_BUDGET};
use sbheom::response::{
    absorption_spectrum, linear_response, relax_to_equilibrium, sigma_x_ground_state,
    spectrum_peaks, PeakConfig, RelaxConfig, ResponseConfig, SpectrumConfig,
};
use sbheom::series::{TimeSeries, Window};

fn peaks(fit: &CorrelationFit, depth: usize) -> sbheom::Result<()> {
    let delta = 1.0;
    let space = Arc::new(enumerate_space(
        fit.n_real(),
        fit.n_imag(),
        depth,
        DEFAULT_ADO_BUDGET,
    )?);
    let gen = Generator::new(space, fit, SystemSpec::new(delta), Rescaling::default())?;
    let eq = relax_to_equilibrium(
        &gen,
        sigma_x_ground_state(),
        &RelaxConfig::new(50.0, 0.01, 10),
    )?;
    let r = linear_response(
        &eq.state,
        &gen,
        &ResponseConfig {
            t_resp: 100.0,
            dt: 0.01,
            stride: 5,
        },
    )?;
    println!("  imaginary residual {:.1e}", r.imaginary_residual);
    let chi: &TimeSeries = &r.chi;
    let cfg = SpectrumConfig {
        omega_max: 4.0,
        d_omega: 0.01,
        window: Window::default(),
    };
    let spec = absorption_spectrum(chi, &cfg)?;
    for p in spectrum_peaks(&spec.windowed, &PeakConfig::default()) {
        println!(
            "  peak at {:.4} Delta, height {:.3}, half width {:?}",
            p.location, p.height, p.half_width
        );
    }
    Ok(())
}

fn main() -> sbheom::Result<()> {
    println!("alpha = 0");
    peaks(&CorrelationFit::uncoupled(), 1)?;

    use BasisFunction::*;
    let alpha = 0.05;
    let fit = CorrelationFit::from_parts(
        FitPart::new(vec![Decay { rate: 1.0 }], vec![0.5 * alpha])?,
        FitPart::new(
            vec![LinearDecay { rate: 1.0 }, Decay { rate: 1.0 }],
            vec![-std::f64::consts::PI / 8.0 * alpha, 0.0],
        )?,
        100.0,
    );
    println!("single-decay bath, alpha = {alpha}");
    peaks(&fit, 4)
}
