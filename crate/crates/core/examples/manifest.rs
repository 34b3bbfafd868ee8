//! Config parsing and the canonical run manifest embedded in every output.

use sbheom::cli::{Config, RunManifest};

fn main() -> sbheom::Result<()> {
    let config = Config::from_toml(
        "[bath]\ns = 0.5\nalpha = 0.2\nomega_c_over_delta = 5.0\n[fit]\nn_real = 4\nn_imag = 4\n[hierarchy]\ndepth = 4\n",
    )?;
    config.validate()?;
    let manifest = RunManifest::new("relax", &config);
    println!("{}", manifest.csv_preamble());
    println!("sha256 {}", manifest.hash());

    match Config::from_toml("[bath]\ns = 0.5\nomega_c_over_delta = 5.0\n") {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("rejected: {e} (exit code {})", e.exit_code()),
    }
    Ok(())
}
