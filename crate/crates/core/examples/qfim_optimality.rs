//! Quantum Fisher information of the probe and its gap to homodyne detection.
//!
//! `cargo run --example qfim_optimality`

use qlidar::modes::{ModeParams, TimeGrid};
use qlidar::qfim::{coherent_qfim, qfim_vs_fim_gap};
use qlidar::receiver::ReceiverSetup;
use qlidar::state::{standard_probe, StateSpec};

fn main() -> qlidar::Result<()> {
    let coherent = StateSpec::coherent(0, 10.0)?;
    let q = coherent_qfim(&coherent, &coherent.default_basis(ModeParams::default())?)?;
    println!("coherent mode 0, N = 10: J = {:?}", q.info.rows());

    println!("{:>8} {:>12} {:>12} {:>14}", "N", "gap tau", "gap omega", "min eigenvalue");
    for n in [1.0, 10.0, 100.0, 1000.0, 1e4] {
        let spec = standard_probe(n, 0.75, None)?;
        let basis = spec.default_basis(ModeParams::default())?;
        let rx = ReceiverSetup::homodyne(TimeGrid::default_for(&basis.params));
        let g = qfim_vs_fim_gap(&spec, &basis, &rx)?;
        println!("{n:>8} {:>12.3e} {:>12.3e} {:>14.3e}", g.rel_tau, g.rel_omega, g.eigenvalues[0]);
    }
    Ok(())
}
