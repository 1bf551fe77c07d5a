//! Monte-Carlo maximum-likelihood estimates against the Cramér-Rao bound.
//!
//! `cargo run --release --example mle_attainability -- [repetitions]`

use qlidar::fim::mle_verify;
use qlidar::harness::{coherent_heterodyne_model, quantum_homodyne_model};
use qlidar::modes::ModeParams;

fn main() -> qlidar::Result<()> {
    let m: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(400);
    let cases = [
        ("coherent heterodyne, N = 50", coherent_heterodyne_model(50.0, ModeParams::default())?),
        ("three-mode probe, N = 20", quantum_homodyne_model(20.0, 0.75, ModeParams::default())?),
        ("three-mode probe, N = 200", quantum_homodyne_model(200.0, 0.75, ModeParams::default())?),
    ];
    for (name, model) in cases {
        let r = mle_verify(&model, &model.nominal(), m, 3)?;
        println!(
            "{name}: MSE/CRB tau {:.3}, omega {:.3}; {} of {} converged, {:.1} iterations on average",
            r.ratio_tau, r.ratio_omega, r.converged, r.repetitions, r.mean_iterations
        );
    }
    Ok(())
}
