//! Single-probe FIM and QFIM reports for the `fim` and `qfim` commands.

use serde::Serialize;

use crate::error::Result;
use crate::fim::{analytic_homodyne_fim, crb, heisenberg_ratios, numeric_fim, CrbResult, HomodyneModel, InfoMatrix};
use crate::modes::ModeBasis;
use crate::qfim::{displaced_squeezed_qfim, GapReport, QfimResult};
use crate::receiver::ReceiverSetup;
use crate::state::{photon_budget, resource_budget, PhotonBudget, ResourceBudget, StateSpec};

use super::config::{FSq, SweepConfig};
use super::sweeps::optimize_split;

/// Probe, basis and receiver described by a config's single-point settings
/// (`photons`, default 100; `probe.f_sq`, default 3/4).
#[derive(Clone, Debug, PartialEq)]
pub struct ConfiguredProbe {
    pub spec: StateSpec,
    pub basis: ModeBasis,
    pub rx: ReceiverSetup,
    pub f_sq: f64,
}

pub fn configured_probe(cfg: &SweepConfig) -> Result<ConfiguredProbe> {
    cfg.validate()?;
    let n = cfg.photons.unwrap_or(100.0);
    let builder = cfg.probe.builder();
    let rx = cfg.receiver_setup();
    let f_sq = match cfg.probe.f_sq.unwrap_or(FSq::Fixed(0.75)) {
        FSq::Fixed(f) => f,
        FSq::Keyword(_) => optimize_split(&builder, n, &cfg.mode, &rx)?.f_sq,
    };
    let spec = builder.build(n, f_sq)?;
    let basis = spec.default_basis(cfg.mode)?;
    Ok(ConfiguredProbe { spec, basis, rx, f_sq })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FimReport {
    pub photons: PhotonBudget,
    pub resources: ResourceBudget,
    pub f_sq: f64,
    pub receiver: ReceiverSetup,
    /// Closed-form FIM, absent when its small-angle conditions fail.
    pub analytic: Option<InfoMatrix>,
    pub analytic_note: Option<String>,
    pub numeric: InfoMatrix,
    pub numeric_halving_change: f64,
    pub numeric_step_unstable: bool,
    /// Bound from the analytic FIM when available, else from the numeric one.
    pub crb: CrbResult,
    /// `(var_tau·Δω²N², var_omega·ΔT²N²)`.
    pub heisenberg_ratios: (f64, f64),
}

pub fn fim_job(cfg: &SweepConfig) -> Result<FimReport> {
    let p = configured_probe(cfg)?;
    let (analytic, analytic_note) = match analytic_homodyne_fim(&p.spec, &p.basis, &p.rx) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let model = HomodyneModel::new(p.spec.clone(), p.basis, p.rx)?;
    let numeric = numeric_fim(&model, &model.nominal(), None)?;
    let bound = crb(analytic.as_ref().unwrap_or(&numeric.info));
    Ok(FimReport {
        photons: photon_budget(&p.spec),
        resources: resource_budget(&p.spec, &p.basis)?,
        f_sq: p.f_sq,
        receiver: p.rx,
        analytic,
        analytic_note,
        numeric: numeric.info,
        numeric_halving_change: numeric.halving_change,
        numeric_step_unstable: numeric.step_unstable,
        heisenberg_ratios: heisenberg_ratios(&bound, &p.spec, &p.basis)?,
        crb: bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QfimReport {
    pub photons: PhotonBudget,
    pub f_sq: f64,
    pub qfim: QfimResult,
    /// Gap to the homodyne FIM, when the closed-form FIM applies.
    pub gap: Option<GapReport>,
    pub gap_note: Option<String>,
}

pub fn qfim_job(cfg: &SweepConfig) -> Result<QfimReport> {
    let p = configured_probe(cfg)?;
    let qfim = displaced_squeezed_qfim(&p.spec, &p.basis, p.rx.kappa)?;
    let (gap, gap_note) = match analytic_homodyne_fim(&p.spec, &p.basis, &p.rx) {
        Ok(f) => (Some(GapReport::new(qfim.info, f)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(QfimReport { photons: photon_budget(&p.spec), f_sq: p.f_sq, qfim, gap, gap_note })
}
