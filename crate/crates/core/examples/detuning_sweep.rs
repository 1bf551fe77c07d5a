//! Degradation of the bound product with local-oscillator phase error.
//!
//! `cargo run --release --example detuning_sweep`

use qlidar::harness::{detuning_sweep, SweepConfig};

fn main() -> qlidar::Result<()> {
    let table = detuning_sweep(&SweepConfig::default())?;
    let ideal = table.rows[0].product;
    let threshold = table.rows[0].threshold.unwrap_or(f64::NAN);
    println!("N = 1000, threshold 1/(N_sq + 1) = {threshold:.3e}");
    for r in &table.rows {
        println!("δθ = {:>10.3e}: product / ideal = {:>10.3}", r.axis, r.product / ideal);
    }
    Ok(())
}
