//! Mean and covariance of a time-binned homodyne record, sampling, and CSV
//! export.
//!
//! `cargo run --example homodyne_statistics -- [output-dir]`

use qlidar::modes::{ModeParams, TimeGrid};
use qlidar::receiver::{describe, gaussian_stats, sample_traces, ReceiverSetup};
use qlidar::state::standard_probe;

fn main() -> qlidar::Result<()> {
    let spec = standard_probe(30.0, 0.75, None)?;
    let basis = spec.default_basis(ModeParams::default())?;
    let rx = ReceiverSetup { delta_theta: 0.02, kappa: 0.9, ..ReceiverSetup::homodyne(TimeGrid::default_for(&basis.params)) };
    let stats = gaussian_stats(&spec, &basis, &rx)?;
    describe(&stats, std::io::stdout()).expect("stdout is writable");

    let samples = sample_traces(&stats, 2000, 1)?;
    let m = samples.draws.nrows() as f64;
    let i = stats.dim() / 2;
    let col = samples.draws.column(i);
    let mean = col.sum() / m;
    let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    println!("bin {i}: sampled mean {mean:.4} (exact {:.4}), variance {var:.4} (exact {:.4})", stats.mu[i], stats.sigma[(i, i)]);

    if let Some(dir) = std::env::args().nth(1) {
        stats.export_csv(std::path::Path::new(&dir))?;
        println!("wrote mean.csv and cov.csv to {dir}");
    }
    Ok(())
}
