//! Classical reference bounds and the heterodyne receiver reproducing them.
//!
//! `cargo run --release --example classical_baselines`

use qlidar::benchmarks::{cl_heterodyne, cl_homodyne_fim, cl_homodyne_pi4, cl_ultimate, HomodyneCase};
use qlidar::fim::{crb, numeric_fim};
use qlidar::harness::coherent_heterodyne_model;
use qlidar::modes::ModeParams;
use qlidar::state::duration_bandwidth;

fn main() -> qlidar::Result<()> {
    let n = 100.0;
    let model = coherent_heterodyne_model(n, ModeParams::default())?;
    let (dt, dw) = duration_bandwidth(&model.spec, &model.basis)?;
    let ult = cl_ultimate(n, dt, dw)?;
    let het = cl_heterodyne(n, dt, dw)?;
    let pi4 = cl_homodyne_pi4(n, dt, dw, 0.0)?;
    for b in [&ult, &het, &pi4] {
        println!("{:?}: var_tau {:.6e}, var_omega {:.6e}", b.name, b.var_tau, b.var_omega);
    }
    for case in [HomodyneCase::Matched, HomodyneCase::Quarter] {
        let bound = crb(&cl_homodyne_fim(n, dt, dw, 0.3, case)?);
        println!("homodyne {case:?}: status {}, flagged {:?}", bound.status, bound.flagged);
    }

    let numeric = crb(&numeric_fim(&model, &model.nominal(), None)?.info);
    println!(
        "time-bin heterodyne: var_tau {:.6e} ({:+.2e} rel.), var_omega {:.6e} ({:+.2e} rel.)",
        numeric.var_tau,
        numeric.var_tau / het.var_tau - 1.0,
        numeric.var_omega,
        numeric.var_omega / het.var_omega - 1.0
    );
    Ok(())
}
