//! Closed-form and finite-difference FIM of the three-mode probe, and its
//! Cramér-Rao bounds normalized by the Heisenberg scaling.
//!
//! `cargo run --release --example heisenberg_limit`

use qlidar::fim::{analytic_homodyne_fim, crb, heisenberg_ratios, numeric_fim, HomodyneModel};
use qlidar::modes::{ModeParams, TimeGrid};
use qlidar::receiver::ReceiverSetup;
use qlidar::state::standard_probe;

fn main() -> qlidar::Result<()> {
    println!("{:>8} {:>14} {:>14} {:>12} {:>12}", "N", "var_tau", "var_omega", "tau·Δω²N²", "omega·ΔT²N²");
    for n in [1.0, 10.0, 100.0, 1e3, 1e4] {
        let spec = standard_probe(n, 0.75, None)?;
        let basis = spec.default_basis(ModeParams::default())?;
        let rx = ReceiverSetup::homodyne(TimeGrid::default_for(&basis.params));
        let bound = crb(&analytic_homodyne_fim(&spec, &basis, &rx)?);
        let (rt, rw) = heisenberg_ratios(&bound, &spec, &basis)?;
        println!("{n:>8} {:>14.6e} {:>14.6e} {rt:>12.5} {rw:>12.5}", bound.var_tau, bound.var_omega);
    }

    let spec = standard_probe(100.0, 0.75, None)?;
    let basis = spec.default_basis(ModeParams::default())?;
    let rx = ReceiverSetup::homodyne(TimeGrid::default_for(&basis.params));
    let analytic = analytic_homodyne_fim(&spec, &basis, &rx)?;
    let model = HomodyneModel::new(spec, basis, rx)?;
    let numeric = numeric_fim(&model, &model.nominal(), None)?;
    println!("analytic FIM at N = 100: {:?}", analytic.rows());
    println!("numeric FIM at N = 100:  {:?}", numeric.info.rows());
    println!("step-halving change {:.2e}", numeric.halving_change);
    Ok(())
}
