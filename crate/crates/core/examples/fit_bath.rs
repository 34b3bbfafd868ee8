//! Samples the bath correlation function and fits the exponential decomposition.
//!
//! cargo run --release --example fit_bath -- 0.5

use sbheom::bath::{correlation_series, BathSpec, SampleGrid};
use sbheom::decomp::{fit_correlation, fit_error_report, FitConfig};

fn main() -> sbheom::Result<()> {
    let s: f64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(0.5);
    let spec = BathSpec::new(s, 0.5)?;
    let target = correlation_series(&SampleGrid::new(500.0, 2000), &spec)?;
    let fit = fit_correlation(&target, &FitConfig::default())?;

    println!(
        "s = {s}: {} real and {} imaginary terms",
        fit.n_real(),
        fit.n_imag()
    );
    for (f, a) in fit.real.basis.iter().zip(&fit.real.coefficients) {
        println!("  re  {a:+.6e} * {f:?}");
    }
    for (f, a) in fit.imag.basis.iter().zip(&fit.imag.coefficients) {
        println!("  im  {a:+.6e} * {f:?}");
    }
    let report = fit_error_report(&fit, &target)?;
    println!(
        "max |dC_R| = {:.2e}, max |dC_I| = {:.2e}, within tolerance: {}",
        report.summary.max_real, report.summary.max_imag, fit.meets_tolerance
    );
    let grid: Vec<f64> = (0..1000).map(|i| 0.5 * i as f64).collect();
    println!("closure violation {:.1e}", fit.closure_violation(&grid));
    Ok(())
}
