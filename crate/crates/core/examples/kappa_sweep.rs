//! Squeezing allocation optimized at each transmissivity, against the
//! classical bounds.
//!
//! `cargo run --release --example kappa_sweep`

use qlidar::harness::{kappa_sweep, SweepConfig};

fn main() -> qlidar::Result<()> {
    let table = kappa_sweep(&SweepConfig::default())?;
    println!("{:>6} {:>8} {:>8} {:>12} {:>14} {:>10}", "kappa", "f_sq", "r", "QL/CL-het", "QL/CL-ultimate", "status");
    for r in &table.rows {
        println!(
            "{:>6.2} {:>8.4} {:>8.4} {:>12.4} {:>14.4} {:>10}",
            r.axis,
            r.f_sq,
            r.r,
            r.product / r.cl_het_product,
            r.product / r.cl_ultimate_product,
            r.status
        );
    }
    Ok(())
}
