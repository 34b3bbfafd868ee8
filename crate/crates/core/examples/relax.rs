//! Relaxation of <sigma_z> from |+> for a weakly coupled Ohmic bath.

use std::sync::Arc;

use sbheom::bath::{correlation_series, BathSpec, SampleGrid};
use sbheom::decomp::{fit_correlation, FitConfig, FitTemplate};
use sbheom::heom::{enumerate_space, Block, Generator, Rescaling, SystemSpec, DEFAULT_ADO_BUDGET};
use sbheom::response::{relax_to_equilibrium, RelaxConfig};

fn main() -> sbheom::Result<()> {
    // omega_c = 1, Delta = omega_c / 5
    let delta = 0.2;
    let spec = BathSpec::new(1.0, 0.1)?;
    let target = correlation_series(&SampleGrid::new(300.0, 1500), &spec)?;
    let fit = fit_correlation(
        &target,
        &FitConfig {
            real: FitTemplate::decays(5),
            imag: FitTemplate {
                decays: 3,
                oscillatory_pairs: 1,
                linear_pairs: 0,
            },
            max_rate: 10.0,
            ..FitConfig::default()
        },
    )?;
    let space = Arc::new(enumerate_space(
        fit.n_real(),
        fit.n_imag(),
        4,
        DEFAULT_ADO_BUDGET,
    )?);
    println!("{} ADOs", space.len());
    let gen = Generator::new(
        space,
        &fit,
        SystemSpec::new(delta),
        Rescaling {
            enabled: true,
            filter: None,
        },
    )?;

    let eq = relax_to_equilibrium(&gen, Block::plus_state(), &RelaxConfig::new(200.0, 0.05, 5))?;
    for (i, m) in eq.m.values.iter().enumerate().step_by(40) {
        // times in units of 1/Delta
        println!("{:8.2} {:+.6}", eq.m.time(i) * delta, m.re);
    }
    println!("drift {:.2e}, converged {}", eq.drift, eq.converged);
    for w in &eq.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
