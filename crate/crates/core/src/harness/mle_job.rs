//! Monte-Carlo attainability runs of the maximum-likelihood estimator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fim::{mle_verify_with, HomodyneModel, MleOptions, MleReport};
use crate::modes::{ModeParams, TimeGrid};
use crate::receiver::ReceiverSetup;
use crate::state::StateSpec;

use super::config::{MleCase, MleCaseKind, SweepConfig};
use super::table::{fmt_f64, metadata_path};

/// Coherent pulse with `n` photons in mode 0, heterodyne reception at
/// `δω = 20σ` with bins of `0.02/σ` over `τ ± 10/σ`.
pub fn coherent_heterodyne_model(n: f64, params: ModeParams) -> Result<HomodyneModel> {
    let spec = StateSpec::coherent(0, n)?;
    let basis = spec.default_basis(params)?;
    let dt = 0.02 / params.sigma;
    let grid = TimeGrid::new(params.tau - 10.0 / params.sigma, dt, 1000)?;
    let rx = ReceiverSetup { delta_omega: 20.0 * params.sigma, delta_theta: 0.3, kappa: 1.0, grid };
    HomodyneModel::new(spec, basis, rx)
}

/// Three-mode probe with split `f_sq`, lossless homodyne on the default grid.
pub fn quantum_homodyne_model(n: f64, f_sq: f64, params: ModeParams) -> Result<HomodyneModel> {
    let spec = crate::state::standard_probe(n, f_sq, None)?;
    let basis = spec.default_basis(params)?;
    let rx = ReceiverSetup::homodyne(TimeGrid::default_for(&params));
    HomodyneModel::new(spec, basis, rx)
}

pub fn model_for(case: &MleCase, params: ModeParams) -> Result<HomodyneModel> {
    match case.kind {
        MleCaseKind::CoherentHeterodyne => coherent_heterodyne_model(case.photons, params),
        MleCaseKind::QuantumHomodyne => quantum_homodyne_model(case.photons, 0.75, params),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleCaseReport {
    pub name: String,
    pub photons: f64,
    pub seed: u64,
    pub report: MleReport,
}

pub const MLE_COLUMNS: [&str; 13] = [
    "case",
    "photons",
    "repetitions",
    "converged",
    "dropped",
    "mse_tau",
    "crb_tau",
    "ratio_tau",
    "mse_omega",
    "crb_omega",
    "ratio_omega",
    "ratio_product",
    "mean_iterations",
];

/// Runs every configured case (default: coherent heterodyne at N = 50 and the
/// quantum probe at N = 20, 2000 repetitions each). Case `k` uses seed
/// `seed + k`.
pub fn mle_verify_job(cfg: &SweepConfig) -> Result<Vec<MleCaseReport>> {
    cfg.validate()?;
    let cases = cfg.mle_cases.clone().unwrap_or_else(MleCase::defaults);
    let opts = MleOptions { threads: cfg.jobs(), ..MleOptions::default() };
    cases
        .iter()
        .enumerate()
        .map(|(k, case)| {
            let model = model_for(case, cfg.mode)?;
            let seed = cfg.seed.wrapping_add(k as u64);
            let report = mle_verify_with(&model, &model.nominal(), case.repetitions, seed, &opts)?;
            Ok(MleCaseReport { name: case.name.clone(), photons: case.photons, seed, report })
        })
        .collect()
}

/// Writes the reports as CSV plus a JSON sidecar with the full reports.
pub fn emit_mle(reports: &[MleCaseReport], path: &Path, cfg: &SweepConfig) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(MLE_COLUMNS).map_err(csv_err)?;
    for c in reports {
        let r = &c.report;
        w.write_record([
            c.name.clone(),
            fmt_f64(c.photons),
            r.repetitions.to_string(),
            r.converged.to_string(),
            r.dropped.to_string(),
            fmt_f64(r.mse_tau),
            fmt_f64(r.crb.var_tau),
            fmt_f64(r.ratio_tau),
            fmt_f64(r.mse_omega),
            fmt_f64(r.crb.var_omega),
            fmt_f64(r.ratio_omega),
            fmt_f64(r.ratio_product),
            fmt_f64(r.mean_iterations),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        experiment: &'static str,
        seed: u64,
        version: &'static str,
        config: &'a SweepConfig,
        reports: &'a [MleCaseReport],
    }
    let meta = Sidecar { experiment: "mle_verify", seed: cfg.seed, version: env!("CARGO_PKG_VERSION"), config: cfg, reports };
    let mp = metadata_path(path);
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    std::fs::write(&mp, text).map_err(|source| Error::Io { path: mp.clone(), source })
}
