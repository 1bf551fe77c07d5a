//! Heterodyne reception of the three-mode probe with alternative squeezing
//! angles, compared with reference expressions.
//!
//! `cargo run --release --example heterodyne_variants`

use qlidar::benchmarks::{cross_check_ql_heterodyne, heterodyne_receiver, ql_heterodyne_reference, QlHetVariant};
use qlidar::modes::ModeParams;

fn main() -> qlidar::Result<()> {
    let rx = heterodyne_receiver(&ModeParams::default());
    for variant in [QlHetVariant::Phi1Zero, QlHetVariant::Phi0Pi] {
        let mut r = ql_heterodyne_reference(variant, 100.0, 1.0, 1.0)?;
        cross_check_ql_heterodyne(&mut r, 100.0, 0.75, &rx)?;
        let (vt, vw) = r.numeric.unwrap_or((f64::NAN, f64::NAN));
        println!(
            "{variant:?}: numeric ({vt:.4e}, {vw:.4e}); reference {} / {}; consistent: tau {:?}, omega {:?}",
            r.tau_formula, r.omega_formula, r.consistent_tau, r.consistent_omega
        );
    }
    Ok(())
}
