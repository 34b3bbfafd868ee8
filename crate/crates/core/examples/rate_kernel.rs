//! Rate kernel, integrated rate and coherent/incoherent verdict of a model M(t).

use sbheom::analysis::{
    delta_m_spectrum, detect_ci, extract_rate_kernel, integrated_rate, CiConfig, DeltaMConfig,
    KernelConfig,
};
use sbheom::series::TimeSeries;

fn analyze(name: &str, m: impl Fn(f64) -> f64) -> sbheom::Result<()> {
    let m = TimeSeries::sample(0.0, 0.01, 6001, m)?;
    let kernel = extract_rate_kernel(&m, &KernelConfig::default())?;
    let rate = integrated_rate(&kernel, 0.05);
    let dm = delta_m_spectrum(&m, &DeltaMConfig::new(6.0, 0.01))?;
    let ci = detect_ci(&dm.spectrum, &CiConfig::for_delta(1.0));
    println!(
        "{name}: kappa0 = {:.4} (tail converged {}), coherent {} prominence {:.3} at {:?}",
        rate.kappa0, rate.tail_converged, ci.coherent, ci.prominence, ci.peak_location
    );
    Ok(())
}

fn main() -> sbheom::Result<()> {
    // Delta = 1
    analyze("damped cosine", |t| (-0.1 * t).exp() * (1.9 * t).cos())?;
    analyze("exponential", |t| (-0.6 * t).exp())
}
