//! Closed-form classical baselines and quantum heterodyne reference points.
//!
//! Classical baselines describe a coherent pulse with `N` photons, RMS
//! duration `ΔT` and RMS bandwidth `Δω`. For a lossy channel pass `κN` as the
//! photon number.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fim::{crb, numeric_fim, HomodyneModel, InfoMatrix};
use crate::modes::{ModeParams, TimeGrid};
use crate::receiver::ReceiverSetup;
use crate::state::{duration_bandwidth, photon_budget, ProbeBuilder, ProbeVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    ClUltimate,
    ClHeterodyne,
    ClHomodynePi4,
    QlHetVariant,
}

/// Variance pair of a benchmark strategy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub name: BaselineKind,
    pub var_tau: f64,
    pub var_omega: f64,
    /// The bound may not be reachable by any known receiver.
    pub potentially_unattainable: bool,
}

impl Baseline {
    pub fn product(&self) -> f64 {
        self.var_tau * self.var_omega
    }
}

fn check_inputs(n: f64, delta_t: f64, delta_omega: f64) -> Result<()> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("photon number must be > 0, got {n}")));
    }
    if !(delta_t > 0.0 && delta_omega > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "duration and bandwidth must be > 0, got {delta_t}, {delta_omega}"
        )));
    }
    Ok(())
}

/// Coherent-state quantum bound `(1/(4Δω²N), 1/(4ΔT²N))`.
pub fn cl_ultimate(n: f64, delta_t: f64, delta_omega: f64) -> Result<Baseline> {
    check_inputs(n, delta_t, delta_omega)?;
    Ok(Baseline {
        name: BaselineKind::ClUltimate,
        var_tau: 1.0 / (4.0 * delta_omega * delta_omega * n),
        var_omega: 1.0 / (4.0 * delta_t * delta_t * n),
        potentially_unattainable: true,
    })
}

/// Coherent pulse with heterodyne reception, `(1/(2Δω²N), 1/(2ΔT²N))`.
pub fn cl_heterodyne(n: f64, delta_t: f64, delta_omega: f64) -> Result<Baseline> {
    check_inputs(n, delta_t, delta_omega)?;
    Ok(Baseline {
        name: BaselineKind::ClHeterodyne,
        var_tau: 1.0 / (2.0 * delta_omega * delta_omega * n),
        var_omega: 1.0 / (2.0 * delta_t * delta_t * n),
        potentially_unattainable: false,
    })
}

/// Phase offsets of a classical homodyne receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomodyneCase {
    /// `δθ = -δωτ`, the LO in phase with the signal.
    Matched,
    /// LO a quarter period out of phase.
    Quarter,
    /// LO offset by `π/4`.
    MidPi4,
}

impl HomodyneCase {
    pub fn local_phase(self) -> f64 {
        match self {
            HomodyneCase::Matched => 0.0,
            HomodyneCase::Quarter => FRAC_PI_2,
            HomodyneCase::MidPi4 => FRAC_PI_4,
        }
    }
}

/// FIM of coherent homodyne for one of the three phase cases.
pub fn cl_homodyne_fim(n: f64, delta_t: f64, delta_omega: f64, tau: f64, case: HomodyneCase) -> Result<InfoMatrix> {
    cl_homodyne_fim_at_phase(n, delta_t, delta_omega, tau, case.local_phase())
}

/// FIM of coherent homodyne with a real envelope when the LO sits at phase
/// `φ` relative to the signal.
pub fn cl_homodyne_fim_at_phase(n: f64, delta_t: f64, delta_omega: f64, tau: f64, phi: f64) -> Result<InfoMatrix> {
    check_inputs(n, delta_t, delta_omega)?;
    let (s, c) = phi.sin_cos();
    // Exact zeros at the quadrature points keep the singular structure clean.
    let (s2, c2) = if phi == 0.0 {
        (0.0, 1.0)
    } else if phi == FRAC_PI_2 {
        (1.0, 0.0)
    } else {
        (s * s, c * c)
    };
    let sc = if phi == 0.0 || phi == FRAC_PI_2 { 0.0 } else { s * c };
    Ok(InfoMatrix::from_rows([
        [4.0 * delta_omega * delta_omega * n * c2, 2.0 * n * sc, 0.0],
        [2.0 * n * sc, 4.0 * (delta_t * delta_t + tau * tau) * n * s2, 4.0 * tau * n * s2],
        [0.0, 4.0 * tau * n * s2, 4.0 * n * s2],
    ]))
}

/// `π/4` homodyne bounds by full inversion of [`cl_homodyne_fim`].
pub fn cl_homodyne_pi4(n: f64, delta_t: f64, delta_omega: f64, tau: f64) -> Result<Baseline> {
    let b = crb(&cl_homodyne_fim(n, delta_t, delta_omega, tau, HomodyneCase::MidPi4)?);
    Ok(Baseline { name: BaselineKind::ClHomodynePi4, var_tau: b.var_tau, var_omega: b.var_omega, potentially_unattainable: false })
}

/// Alternative squeezing angles for heterodyne reception of the quantum probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QlHetVariant {
    Phi0Pi,
    Phi1Zero,
}

impl QlHetVariant {
    pub fn probe_variant(self) -> ProbeVariant {
        match self {
            QlHetVariant::Phi0Pi => ProbeVariant::Phi0Pi,
            QlHetVariant::Phi1Zero => ProbeVariant::Phi1Zero,
        }
    }
}

/// Reference values for heterodyne reception of the quantum probe.
///
/// The reported frequency variance uses `ΔT²` in the denominator so that the
/// units are those of a frequency variance; `units_flag` records that the
/// documented expression was written with `Δω²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QlHetReference {
    pub variant: QlHetVariant,
    pub baseline: Baseline,
    pub tau_formula: String,
    pub omega_formula: String,
    pub units_flag: bool,
    /// Numeric bounds, when a cross-check was run.
    pub numeric: Option<(f64, f64)>,
    /// Whether the numeric bounds agree with the reference within 5%.
    pub consistent_tau: Option<bool>,
    pub consistent_omega: Option<bool>,
}

pub fn ql_heterodyne_reference(variant: QlHetVariant, n: f64, delta_t: f64, delta_omega: f64) -> Result<QlHetReference> {
    check_inputs(n, delta_t, delta_omega)?;
    let (kt, kw, tf, wf) = match variant {
        QlHetVariant::Phi0Pi => (4.0, 0.75, "1/(4 Δω² N)", "1/((3/4) Δω² N)"),
        QlHetVariant::Phi1Zero => (1.0, 3.0, "1/(Δω² N)", "1/(3 Δω² N)"),
    };
    Ok(QlHetReference {
        variant,
        baseline: Baseline {
            name: BaselineKind::QlHetVariant,
            var_tau: 1.0 / (kt * delta_omega * delta_omega * n),
            var_omega: 1.0 / (kw * delta_t * delta_t * n),
            potentially_unattainable: false,
        },
        tau_formula: tf.into(),
        omega_formula: wf.into(),
        units_flag: true,
        numeric: None,
        consistent_tau: None,
        consistent_omega: None,
    })
}

/// Heterodyne receiver setting used for cross-checks: `δω = 5σ`, `δθ = 0.3`,
/// `Δt = 0.05/σ` over `τ ± 10/σ`.
pub fn heterodyne_receiver(params: &ModeParams) -> ReceiverSetup {
    let dt = 0.05 / params.sigma;
    ReceiverSetup {
        delta_omega: 5.0 * params.sigma,
        delta_theta: 0.3,
        kappa: 1.0,
        grid: TimeGrid { t_start: params.tau - 10.0 / params.sigma, dt, n_bins: (20.0 / (params.sigma * dt)).round() as usize },
    }
}

/// Fills the numeric fields of `reference` from the time-bin FIM of the
/// variant probe, split `f_sq`, with heterodyne reception on `rx`.
pub fn cross_check_ql_heterodyne(reference: &mut QlHetReference, n: f64, f_sq: f64, rx: &ReceiverSetup) -> Result<()> {
    let spec = ProbeBuilder { variant: reference.variant.probe_variant(), ..ProbeBuilder::default() }.build(n, f_sq)?;
    let basis = spec.default_basis(ModeParams::default())?;
    let model = HomodyneModel::new(spec, basis, *rx)?;
    let f = numeric_fim(&model, &model.nominal(), None)?;
    let b = crb(&f.info);
    // Rescale the reference to the probe's Δ values and photon number.
    let (dt, dw) = duration_bandwidth(&model.spec, &model.basis)?;
    let scaled = ql_heterodyne_reference(reference.variant, photon_budget(&model.spec).total, dt, dw)?;
    reference.numeric = Some((b.var_tau, b.var_omega));
    reference.consistent_tau = Some((b.var_tau / scaled.baseline.var_tau - 1.0).abs() <= 0.05);
    reference.consistent_omega = Some((b.var_omega / scaled.baseline.var_omega - 1.0).abs() <= 0.05);
    Ok(())
}
