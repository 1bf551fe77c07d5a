//! Quantum Fisher information of lossless displaced-squeezed probes.
//!
//! For a pure product of displaced squeezed temporal modes the QFIM is a sum
//! of six contractions of the mode-derivative coefficients `γ_{αkn}` with the
//! displacements and the squeezing moments `c_n = cosh r_n`, `s_n = sinh r_n`.
//! Each `γ` row has at most three nonzeros, so the cost is linear in the
//! number of modes.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fim::{crb, CrbResult, InfoMatrix};
use crate::modes::{gamma_entries, ModeBasis, Param};
use crate::receiver::ReceiverSetup;
use crate::state::{duration_bandwidth, photon_budget, StateSpec};

/// QFIM and the bounds from its full inversion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfimResult {
    pub info: InfoMatrix,
    pub bound: CrbResult,
}

impl QfimResult {
    fn from_info(info: InfoMatrix) -> Self {
        Self { bound: crb(&info), info }
    }

    pub fn qcrb_tau(&self) -> f64 {
        self.bound.var_tau
    }

    pub fn qcrb_omega(&self) -> f64 {
        self.bound.var_omega
    }
}

fn require_lossless(kappa: f64) -> Result<()> {
    if kappa != 1.0 {
        return Err(Error::Unsupported(format!(
            "the quantum Fisher information is only available for a lossless channel (κ = 1), got κ = {kappa}"
        )));
    }
    Ok(())
}

/// QFIM of the probe after a lossless channel with transmissivity `kappa`
/// (anything other than 1 is rejected).
pub fn displaced_squeezed_qfim(spec: &StateSpec, basis: &ModeBasis, kappa: f64) -> Result<QfimResult> {
    require_lossless(kappa)?;
    spec.validate()?;
    let Some(top) = spec.highest_populated() else { return Ok(QfimResult::from_info(InfoMatrix::zero())) };
    if top + 1 > basis.n_max {
        return Err(Error::Truncation { k: top, needed: top + 1, n_max: basis.n_max });
    }
    // Derivative modes reach one index above the top populated mode.
    let len = top + 2;
    let dense = spec.dense(basis.len())?;
    let p = basis.params;
    let alpha = &dense.alpha[..len];
    let c: Vec<f64> = dense.r[..len].iter().map(|r| r.cosh()).collect();
    let s: Vec<f64> = dense.r[..len].iter().map(|r| r.sinh()).collect();
    let e: Vec<Complex64> = dense.phi[..len].iter().map(|phi| Complex64::from_polar(1.0, *phi)).collect();

    // Dense γ restricted to 0..len (populated rows only need n ≤ top+1).
    let gamma: Vec<Vec<Vec<Complex64>>> = Param::ALL
        .iter()
        .map(|&a| {
            (0..len)
                .map(|k| {
                    let mut row = vec![Complex64::new(0.0, 0.0); len + 1];
                    for (n, g) in gamma_entries(a, k, &p) {
                        row[n] = g;
                    }
                    row
                })
                .collect()
        })
        .collect();

    // row_alpha_conj[a][k] = Σ_n γ_{akn} α*_n, col_alpha[a][n] = Σ_k α_k γ_{akn}
    let row_ac: Vec<Vec<Complex64>> = (0..3)
        .map(|a| (0..len).map(|k| (0..len).map(|n| gamma[a][k][n] * alpha[n].conj()).sum()).collect())
        .collect();
    let col_a: Vec<Vec<Complex64>> = (0..3)
        .map(|a| (0..len).map(|n| (0..len).map(|k| alpha[k] * gamma[a][k][n]).sum()).collect())
        .collect();

    let mut j = Matrix3::<f64>::zeros();
    for i in 0..3 {
        for jj in i..3 {
            let gi = &gamma[i];
            let gj = &gamma[jj];
            let mut sum = Complex64::new(0.0, 0.0);
            for k in 0..len {
                for n in 0..len {
                    // Σ γ*_{ikn} γ_{jkn} c_n² s_k²
                    sum += gi[k][n].conj() * gj[k][n] * (c[n] * c[n] * s[k] * s[k]);
                    // Σ γ*_{ink} γ_{jkn} c_k c_n s_k s_n e^{i(φ_k - φ_n)}
                    sum += gi[n][k].conj() * gj[k][n] * (c[k] * c[n] * s[k] * s[n]) * e[k] * e[n].conj();
                }
            }
            for k in 0..len {
                sum += row_ac[i][k].conj() * row_ac[jj][k] * (s[k] * s[k]);
                sum -= col_a[i][k].conj() * row_ac[jj][k] * (c[k] * s[k]) * e[k];
                sum -= row_ac[i][k].conj() * col_a[jj][k] * (s[k] * c[k]) * e[k].conj();
                sum += col_a[i][k].conj() * col_a[jj][k] * (c[k] * c[k]);
            }
            let v = 4.0 * sum.re;
            j[(i, jj)] = v;
            j[(jj, i)] = v;
        }
    }
    Ok(QfimResult::from_info(InfoMatrix::new(j)))
}

/// Closed-form QFIM of a coherent probe.
///
/// `J_ττ = 4Δω²N`, `J_ωω = 4(ΔT² + τ²)N`, `J_θθ = 4N`, `J_ωθ = 4τN`; the
/// `τω` and `τθ` entries come from quadrature of the signal and vanish for a
/// real envelope.
pub fn coherent_qfim(spec: &StateSpec, basis: &ModeBasis) -> Result<QfimResult> {
    if spec.has_squeezing() {
        return Err(Error::InvalidParameter("coherent_qfim requires a state without squeezing".into()));
    }
    let n = photon_budget(spec).total;
    if n == 0.0 {
        return Ok(QfimResult::from_info(InfoMatrix::zero()));
    }
    let (dt, dw) = duration_bandwidth(spec, basis)?;
    let tau = basis.params.tau;
    let (tw, tt) = coherent_cross_terms(spec, basis)?;
    let j = Matrix3::new(
        4.0 * dw * dw * n,
        tw,
        tt,
        tw,
        4.0 * (dt * dt + tau * tau) * n,
        4.0 * tau * n,
        tt,
        4.0 * tau * n,
        4.0 * n,
    );
    Ok(QfimResult::from_info(InfoMatrix::new(j)))
}

/// `4 Re ∫ ∂_ω s* ∂_τ s` and `4 Re ∫ ∂_θ s* ∂_τ s` by midpoint quadrature.
fn coherent_cross_terms(spec: &StateSpec, basis: &ModeBasis) -> Result<(f64, f64)> {
    let dense = spec.dense(basis.len())?;
    let p = basis.params;
    let top = spec.highest_populated().unwrap_or(0);
    let half = (12.0 + 2.0 * (2.0 * top as f64 + 1.0).sqrt()) / p.sigma;
    let h = 0.01 / p.sigma;
    let steps = (2.0 * half / h).ceil() as usize;
    let mut tw = 0.0;
    let mut tt = 0.0;
    for k in 0..steps {
        let x = -half + (k as f64 + 0.5) * h;
        let t = p.tau + x;
        let e = crate::modes::envelopes_at(t, &p, top + 1);
        let mut env = Complex64::new(0.0, 0.0);
        let mut d_tau = Complex64::new(0.0, 0.0);
        for m in 0..=top {
            let a = dense.alpha[m];
            env += a * e[m];
            // ∂_τ φ̄_m = -(σ/2)(√m φ̄_{m-1} - √(m+1) φ̄_{m+1})
            let lower = if m > 0 { (m as f64).sqrt() * e[m - 1] } else { 0.0 };
            let upper = ((m + 1) as f64).sqrt() * e[m + 1];
            d_tau += a * (-0.5 * p.sigma * (lower - upper));
        }
        // The common carrier cancels in every product; ∂_ω and ∂_θ multiply
        // the envelope by -it and -i.
        let d_omega = Complex64::new(0.0, -t) * env;
        let d_theta = Complex64::new(0.0, -1.0) * env;
        tw += (d_omega.conj() * d_tau).re * h;
        tt += (d_theta.conj() * d_tau).re * h;
    }
    Ok((4.0 * tw, 4.0 * tt))
}

/// Loewner gap between a QFIM and a classical FIM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub qfim: InfoMatrix,
    pub fim: InfoMatrix,
    pub gap: InfoMatrix,
    /// Eigenvalues of the gap, ascending.
    pub eigenvalues: [f64; 3],
    /// `(J - F)_ττ / J_ττ`
    pub rel_tau: f64,
    /// `(J - F)_ωω / J_ωω`
    pub rel_omega: f64,
}

impl GapReport {
    pub fn new(qfim: InfoMatrix, fim: InfoMatrix) -> Self {
        let gap = qfim - fim;
        let rel = |p: Param| gap.get(p, p) / qfim.get(p, p);
        Self {
            eigenvalues: gap.eigenvalues(),
            rel_tau: rel(Param::Tau),
            rel_omega: rel(Param::Omega),
            qfim,
            fim,
            gap,
        }
    }

    /// Whether every eigenvalue is at least `-tol·‖J‖`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigenvalues[0] >= -tol * self.qfim.max_abs()
    }
}

/// QFIM against the closed-form homodyne FIM of the same probe.
pub fn qfim_vs_fim_gap(spec: &StateSpec, basis: &ModeBasis, rx: &ReceiverSetup) -> Result<GapReport> {
    require_lossless(rx.kappa)?;
    let q = displaced_squeezed_qfim(spec, basis, rx.kappa)?;
    let f = crate::fim::analytic_homodyne_fim(spec, basis, rx)?;
    Ok(GapReport::new(q.info, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{ModeParams, TimeGrid};
    use crate::state::{standard_probe, ModeOccupation, ProbeBuilder};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn basis(spec: &StateSpec, tau: f64) -> ModeBasis {
        spec.default_basis(ModeParams { tau, ..ModeParams::default() }).unwrap()
    }

    #[test]
    fn vacuum_is_zero() {
        let s = StateSpec::vacuum();
        assert_eq!(displaced_squeezed_qfim(&s, &basis(&s, 0.0), 1.0).unwrap().info, InfoMatrix::zero());
    }

    #[test]
    fn lossy_channel_rejected() {
        let s = standard_probe(10.0, 0.75, None).unwrap();
        assert!(matches!(displaced_squeezed_qfim(&s, &basis(&s, 0.0), 0.9), Err(Error::Unsupported(_))));
    }

    #[test]
    fn ground_mode_coherent_values() {
        let s = StateSpec::coherent(0, 10.0).unwrap();
        let q = displaced_squeezed_qfim(&s, &basis(&s, 0.0), 1.0).unwrap();
        let expected = InfoMatrix::from_rows([[10.0, 0.0, 0.0], [0.0, 40.0, 0.0], [0.0, 0.0, 40.0]]);
        assert!((q.info - expected).max_abs() < 1e-12);
        assert_relative_eq!(q.qcrb_tau(), 0.1, epsilon = 1e-14);
    }

    #[test]
    fn coherent_reduction_matches_closed_form() {
        for tau in [0.0, 1.3] {
            let s = StateSpec::new(vec![
                ModeOccupation::coherent(0, Complex64::new(1.5, 0.3)),
                ModeOccupation::coherent(2, Complex64::new(-0.7, 0.9)),
                ModeOccupation::coherent(4, Complex64::new(0.2, 0.0)),
            ])
            .unwrap();
            let b = basis(&s, tau);
            let general = displaced_squeezed_qfim(&s, &b, 1.0).unwrap().info;
            let closed = coherent_qfim(&s, &b).unwrap().info;
            assert!((general - closed).max_abs() < 1e-9 * closed.max_abs(), "{general:?}\n{closed:?}");
        }
    }

    #[test]
    fn coherent_qfim_requires_no_squeezing() {
        let s = standard_probe(10.0, 0.5, None).unwrap();
        assert!(coherent_qfim(&s, &basis(&s, 0.0)).is_err());
    }

    #[test]
    fn centered_pulse_decouples_phase() {
        let s = StateSpec::coherent(0, 10.0).unwrap();
        let q = coherent_qfim(&s, &basis(&s, 0.0)).unwrap();
        assert_eq!(q.info.get(Param::Omega, Param::Theta), 0.0);
        assert_relative_eq!(q.qcrb_tau(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn shape_independence() {
        // Mode-2 pulse and a mode 0/4 superposition tuned to the same
        // bandwidth give the same bounds once N matches.
        let a = StateSpec::coherent(2, 5.0).unwrap();
        // ΔT² = 2(½(1-w²) + 9/2·w²) equals the mode-2 value 5 at w² = ½.
        let w = 0.5f64.sqrt();
        let b = StateSpec::new(vec![
            ModeOccupation::coherent(0, Complex64::new((5.0 * (1.0 - w * w)).sqrt(), 0.0)),
            ModeOccupation::coherent(4, Complex64::new(0.0, (5.0f64).sqrt() * w)),
        ])
        .unwrap();
        let qa = coherent_qfim(&a, &basis(&a, 0.0)).unwrap();
        let qb = coherent_qfim(&b, &basis(&b, 0.0)).unwrap();
        let (ta, wa) = duration_bandwidth(&a, &basis(&a, 0.0)).unwrap();
        let (tb, wb) = duration_bandwidth(&b, &basis(&b, 0.0)).unwrap();
        assert_relative_eq!(ta, tb, max_relative = 1e-9);
        assert_relative_eq!(wa, wb, max_relative = 1e-9);
        assert_relative_eq!(qa.qcrb_tau(), qb.qcrb_tau(), max_relative = 1e-9);
        assert_relative_eq!(qa.qcrb_omega(), qb.qcrb_omega(), max_relative = 1e-9);
    }

    #[test]
    fn standard_probe_gap_is_small_and_psd() {
        let s = standard_probe(1000.0, 0.75, None).unwrap();
        let b = basis(&s, 0.0);
        let rx = ReceiverSetup::homodyne(TimeGrid::default_for(&b.params));
        let g = qfim_vs_fim_gap(&s, &b, &rx).unwrap();
        assert!(g.is_psd(1e-6), "{:?}", g.eigenvalues);
        assert!(g.rel_tau.abs() < 1e-3, "{}", g.rel_tau);
    }

    #[test]
    fn shifted_probe_qfim_is_finite() {
        let s = ProbeBuilder { offset: 3, ..Default::default() }.build(50.0, 0.75).unwrap();
        let q = displaced_squeezed_qfim(&s, &basis(&s, 0.0), 1.0).unwrap();
        assert!(q.bound.is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn homodyne_never_beats_qfim(n in 0.5f64..2000.0, f in 0.0f64..=1.0, tau in -1.0f64..1.0) {
            let s = standard_probe(n, f, None).unwrap();
            let b = basis(&s, tau);
            let rx = ReceiverSetup::homodyne(TimeGrid::default_for(&b.params));
            let g = qfim_vs_fim_gap(&s, &b, &rx).unwrap();
            prop_assert!(g.is_psd(1e-6), "eigenvalues {:?}", g.eigenvalues);
        }
    }
}
