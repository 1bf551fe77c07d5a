//! Hermite-Gaussian temporal modes: envelopes, derivative coefficients,
//! discretization on a bin grid and the self-check residuals.
//!
//! `cargo run --example mode_basis`

use qlidar::modes::{
    apply_target, discretize_envelopes, envelope, gamma_coeffs, self_check, ModeBasis, ModeParams, Param,
    TargetKinematics, TimeGrid,
};

fn main() -> qlidar::Result<()> {
    let params = ModeParams { tau: 0.0, omega: 5.0, theta: 0.0, sigma: 1.0 };
    let basis = ModeBasis::new(params, 8)?;

    println!("envelopes at t = 0.5:");
    for n in 0..4 {
        println!("  φ̄_{n} = {:+.6}", envelope(n, 0.5, &params));
    }

    for alpha in Param::ALL {
        let g = gamma_coeffs(alpha, 2, &basis)?;
        let terms: Vec<String> = g.entries.iter().map(|(n, c)| format!("({:+.4}{:+.4}i)Φ_{n}", c.re, c.im)).collect();
        println!("∂_{alpha} Φ_2 = {}", terms.join(" "));
    }

    let grid = TimeGrid::default_for(&params);
    let u = discretize_envelopes(&basis, &grid)?;
    let gram = &u * u.transpose();
    let dev = (gram - nalgebra::DMatrix::identity(basis.len(), basis.len())).amax();
    println!("grid of {} bins, Δt = {}: max |U Uᵀ - I| = {dev:.2e}", grid.n_bins, grid.dt);

    let check = self_check(&ModeBasis::new(params, 20)?);
    println!("self-check up to n = 20: {check:?} (passed: {})", check.passed());

    let kin = TargetKinematics { range: 150.0, velocity: 30.0, c: 3.0e8, theta_r: 0.1 };
    let moved = apply_target(&params, &kin)?;
    println!("after a target at 150 m moving at 30 m/s: τ = {:.3e}, ω = {:.9}", moved.tau, moved.omega);
    Ok(())
}
