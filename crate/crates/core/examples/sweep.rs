//! A small resumable (s, alpha) sweep with the full hierarchy pipeline.
//!
//! Rerunning continues from the table left in the temporary directory.

use sbheom::analysis::{sweep_phase_boundary, SweepFile};
use sbheom::cli::{Cache, Config, HeomRunner};

const CONFIG: &str = r#"
[bath]
s = 1.0
alpha = 0.1
omega_c_over_delta = 5.0

[fit]
t_max_wc = 100.0
samples = 500
n_real = 4
n_imag = 4
max_rate = 10.0

[hierarchy]
depth = 3
rescaling = true

[integration]
record_dt = 0.05
t_eq = 40.0
"#;

fn main() -> sbheom::Result<()> {
    let config = Config::from_toml(CONFIG)?;
    let dir = std::env::temp_dir().join("sbheom-sweep-example");
    std::fs::create_dir_all(&dir)?;
    let cache = Cache::new(dir.join("cache"));
    let runner = HeomRunner {
        base: &config,
        cache: &cache,
    };
    let table = dir.join("sweep.csv");
    let outcome = sweep_phase_boundary(
        &[1.0],
        &[0.05, 0.1, 0.2, 0.4],
        &runner,
        &config.sweep_config(),
        Some(SweepFile::new(&table)),
    )?;
    for r in &outcome.records {
        println!(
            "s={} alpha={}: kappa0 {:?} coherent {} [{}]",
            r.s, r.alpha, r.kappa0, r.coherent, r.status
        );
    }
    for b in &outcome.boundaries {
        println!(
            "s={}: alpha_c {:?}, alpha_CI {:?}",
            b.s, b.alpha_c, b.alpha_ci
        );
    }
    println!("table at {}", table.display());
    Ok(())
}
