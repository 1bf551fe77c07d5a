//! Building probe states and reading off their photon budgets, duration and
//! bandwidth.
//!
//! `cargo run --example probe_resources`

use qlidar::modes::ModeParams;
use qlidar::state::{
    photon_budget, resource_budget, squeezing_db_to_r, standard_probe, ProbeBuilder, ProbeVariant, StateSpec,
};

fn main() -> qlidar::Result<()> {
    let params = ModeParams::default();
    println!("{:>8} {:>6} {:>8} {:>8} {:>8} {:>8}", "N", "f_sq", "r", "ΔT", "Δω", "ΔTΔω");
    for (n, f) in [(1.0, 0.75), (100.0, 0.75), (100.0, 0.3), (1e4, 0.75)] {
        let spec = standard_probe(n, f, None)?;
        let basis = spec.default_basis(params)?;
        let res = resource_budget(&spec, &basis)?;
        println!(
            "{n:>8} {f:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            spec.occupations[0].r,
            res.delta_t,
            res.delta_omega,
            res.delta_t * res.delta_omega
        );
    }

    let capped = ProbeBuilder { variant: ProbeVariant::Standard, offset: 0, r_cap: Some(squeezing_db_to_r(10.0)) };
    let spec = capped.build(1000.0, 0.9)?;
    let b = photon_budget(&spec);
    println!("10 dB cap at N = 1000, f_sq = 0.9: squeezed {:.2}, coherent {:.2}", b.squeezed, b.coherent);

    let shifted = ProbeBuilder { offset: 4, ..ProbeBuilder::default() }.build(100.0, 0.75)?;
    let res = resource_budget(&shifted, &shifted.default_basis(params)?)?;
    println!("probe on modes 4-6: ΔTΔω = {:.4}", res.delta_t * res.delta_omega);

    let json = spec.to_json();
    println!("state as JSON: {json}");
    assert_eq!(StateSpec::from_json(&json)?, spec);
    Ok(())
}
