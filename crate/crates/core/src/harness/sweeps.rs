//! Photon-number, transmissivity and detuning sweeps of the quantum probe.

use crate::benchmarks::{cl_heterodyne, cl_ultimate};
use crate::error::{Error, Result};
use crate::fim::{analytic_homodyne_fim, crb, CrbResult, CrbStatus};
use crate::modes::ModeParams;
use crate::receiver::ReceiverSetup;
use crate::state::{photon_budget, resource_budget, ProbeBuilder, ResourceBudget};

use super::config::{log_space, Experiment, FSq, SweepConfig};
use super::parallel_map;
use super::table::{SweepRow, SweepTable};

/// Bound of one probe under the closed-form homodyne FIM.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub bound: CrbResult,
    pub resources: ResourceBudget,
    /// Fraction of photons actually in squeezing (after any cap).
    pub f_used: f64,
    pub r: f64,
}

pub fn evaluate_probe(builder: &ProbeBuilder, n: f64, f_sq: f64, mode: &ModeParams, rx: &ReceiverSetup) -> Result<PointResult> {
    let spec = builder.build(n, f_sq)?;
    let basis = spec.default_basis(*mode)?;
    let info = analytic_homodyne_fim(&spec, &basis, rx)?;
    let resources = resource_budget(&spec, &basis)?;
    let b = photon_budget(&spec);
    Ok(PointResult {
        bound: crb(&info),
        f_used: if b.total > 0.0 { b.squeezed / b.total } else { 0.0 },
        r: spec.occupations.first().map(|o| o.r).unwrap_or(0.0),
        resources,
    })
}

/// Optimized squeezing split.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub f_sq: f64,
    pub product: f64,
    pub point: PointResult,
    /// The optimum sits at `f_sq = 0` or `f_sq = 1`.
    pub boundary: bool,
}

/// Points of the coarse allocation grid.
pub const COARSE_POINTS: usize = 64;
/// Golden-section tolerance on `f_sq`.
pub const REFINE_TOLERANCE: f64 = 1e-4;

fn objective(builder: &ProbeBuilder, n: f64, f: f64, mode: &ModeParams, rx: &ReceiverSetup) -> f64 {
    match evaluate_probe(builder, n, f, mode, rx) {
        Ok(p) if p.bound.status == CrbStatus::Ok => p.bound.product(),
        _ => f64::INFINITY,
    }
}

/// Minimizes `var_tau × var_omega` over `f_sq ∈ [0, 1]`: a 64-point grid,
/// then golden-section search on the bracket around the best grid point.
pub fn optimize_split(builder: &ProbeBuilder, n: f64, mode: &ModeParams, rx: &ReceiverSetup) -> Result<Optimum> {
    let grid: Vec<f64> = (0..COARSE_POINTS).map(|i| i as f64 / (COARSE_POINTS - 1) as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&f| objective(builder, n, f, mode, rx)).collect();
    let (best, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    if !values[best].is_finite() {
        return Err(Error::Unsupported(format!("no allocation gives a finite bound at N = {n}")));
    }
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(COARSE_POINTS - 1)];
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = objective(builder, n, x1, mode, rx);
    let mut f2 = objective(builder, n, x2, mode, rx);
    while hi - lo > REFINE_TOLERANCE {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = objective(builder, n, x1, mode, rx);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = objective(builder, n, x2, mode, rx);
        }
    }
    let mut candidates = vec![(grid[best], values[best]), (x1, f1), (x2, f2)];
    let mid = 0.5 * (lo + hi);
    candidates.push((mid, objective(builder, n, mid, mode, rx)));
    let (f_best, product) = candidates.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    let point = evaluate_probe(builder, n, f_best, mode, rx)?;
    Ok(Optimum {
        f_sq: f_best,
        product,
        boundary: f_best <= REFINE_TOLERANCE || f_best >= 1.0 - REFINE_TOLERANCE,
        point,
    })
}

fn row(axis: f64, p: &PointResult, kappa: f64, delta_theta: f64, status: String) -> Result<SweepRow> {
    let res = &p.resources;
    let n_eff = kappa * res.n_total;
    let het = cl_heterodyne(n_eff, res.delta_t, res.delta_omega)?;
    let ult = cl_ultimate(n_eff, res.delta_t, res.delta_omega)?;
    Ok(SweepRow {
        axis,
        var_tau: p.bound.var_tau,
        var_omega: p.bound.var_omega,
        product: p.bound.var_tau * p.bound.var_omega,
        cl_het_product: het.product(),
        cl_ultimate_product: ult.product(),
        f_sq: p.f_used,
        r: p.r,
        delta_theta,
        threshold: None,
        status,
    })
}

fn rescale(rows: &mut [SweepRow], sigma: Option<f64>) {
    if let Some(s) = sigma {
        for r in rows {
            r.var_tau /= s * s;
            r.var_omega *= s * s;
            r.product = r.var_tau * r.var_omega;
        }
    }
}

fn fixed_or(cfg: &SweepConfig, default: FSq) -> FSq {
    cfg.probe.f_sq.unwrap_or(default)
}

/// Evaluates one probe at a fixed or optimized split and returns its row.
fn sweep_point(cfg: &SweepConfig, builder: &ProbeBuilder, n: f64, rx: &ReceiverSetup, f: FSq, axis: f64) -> Result<SweepRow> {
    match f {
        FSq::Fixed(f) => {
            let p = evaluate_probe(builder, n, f, &cfg.mode, rx)?;
            row(axis, &p, rx.kappa, rx.delta_theta, p.bound.status.to_string())
        }
        FSq::Keyword(_) => {
            let o = optimize_split(builder, n, &cfg.mode, rx)?;
            let status = if o.boundary { "boundary".to_string() } else { o.point.bound.status.to_string() };
            row(axis, &o.point, rx.kappa, rx.delta_theta, status)
        }
    }
}

/// Default photon axis: 61 points log-spaced over `[0.1, 10⁴]`.
pub fn default_photon_axis() -> Vec<f64> {
    log_space(0.1, 1e4, 61)
}

/// Product of the bounds against `N`, for the configured phase detuning and
/// each extra detuning in `delta_theta_variants`.
pub fn photon_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let axis = match &cfg.axis {
        Some(a) => a.values()?,
        None => default_photon_axis(),
    };
    if axis.iter().any(|n| *n <= 0.0) {
        return Err(Error::Config("photon numbers must be > 0".into()));
    }
    let builder = cfg.probe.builder();
    let f = fixed_or(cfg, FSq::Fixed(0.75));
    let mut detunings = vec![cfg.receiver.delta_theta];
    detunings.extend(cfg.delta_theta_variants.iter().copied().filter(|d| *d != cfg.receiver.delta_theta));
    let tasks: Vec<(f64, f64)> = detunings.iter().flat_map(|&d| axis.iter().map(move |&n| (d, n))).collect();
    let base_rx = cfg.receiver_setup();
    let rows = parallel_map(&tasks, cfg.jobs(), |&(dth, n)| {
        let rx = ReceiverSetup { delta_theta: dth, ..base_rx };
        sweep_point(cfg, &builder, n, &rx, f, n)
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    rescale(&mut rows, cfg.physical_sigma);
    Ok(SweepTable { experiment: Experiment::PhotonSweep.name().into(), axis_name: "N".into(), rows })
}

/// Default κ axis `0.1, 0.15, …, 1.0`.
pub fn default_kappa_axis() -> Vec<f64> {
    (0..19).map(|i| ((10 + 5 * i) as f64) / 100.0).collect()
}

/// Optimized product against transmissivity at fixed `N` (default 100) with
/// a per-mode squeezing cap (default 20 dB).
pub fn kappa_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let axis = match &cfg.axis {
        Some(a) => a.values()?,
        None => default_kappa_axis(),
    };
    if axis.iter().any(|k| !(*k > 0.0 && *k <= 1.0)) {
        return Err(Error::Config("κ values must lie in (0, 1]".into()));
    }
    let n = cfg.photons.unwrap_or(100.0);
    let mut builder = cfg.probe.builder();
    if cfg.probe.r_cap_db.is_none() {
        builder.r_cap = Some(crate::state::R_CAP_20DB);
    }
    let f = fixed_or(cfg, FSq::Keyword(super::config::Keyword::Optimize));
    let base_rx = cfg.receiver_setup();
    let rows = parallel_map(&axis, cfg.jobs(), |&kappa| {
        let rx = ReceiverSetup { kappa, ..base_rx };
        sweep_point(cfg, &builder, n, &rx, f, kappa)
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    rescale(&mut rows, cfg.physical_sigma);
    Ok(SweepTable { experiment: Experiment::KappaSweep.name().into(), axis_name: "kappa".into(), rows })
}

/// Default detuning axis: 0 followed by 25 log-spaced points over
/// `[10⁻⁵, 0.05]`.
pub fn default_detuning_axis() -> Vec<f64> {
    let mut v = vec![0.0];
    v.extend(log_space(1e-5, 0.05, 25));
    v
}

/// Product against the LO phase detuning at fixed `N` (default 1000).
pub fn detuning_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let axis = match &cfg.axis {
        Some(a) => a.values()?,
        None => default_detuning_axis(),
    };
    let n = cfg.photons.unwrap_or(1000.0);
    let builder = cfg.probe.builder();
    let f = fixed_or(cfg, FSq::Fixed(0.75));
    let base_rx = cfg.receiver_setup();
    let rows = parallel_map(&axis, cfg.jobs(), |&dth| {
        let rx = ReceiverSetup { delta_theta: dth, ..base_rx };
        let mut r = sweep_point(cfg, &builder, n, &rx, f, dth)?;
        let n_sq = r.f_sq * n;
        r.threshold = Some(1.0 / (n_sq + 1.0));
        Ok(r)
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    rescale(&mut rows, cfg.physical_sigma);
    Ok(SweepTable { experiment: Experiment::DetuningSweep.name().into(), axis_name: "delta_theta".into(), rows })
}

/// First axis value at which `ratio(row)` falls through 1, with log-log
/// interpolation between the bracketing rows.
pub fn find_crossing(rows: &[&SweepRow], ratio: impl Fn(&SweepRow) -> f64) -> Option<f64> {
    for w in rows.windows(2) {
        let (a, b) = (ratio(w[0]), ratio(w[1]));
        if a >= 1.0 && b < 1.0 {
            let (la, lb) = (a.ln(), b.ln());
            let t = la / (la - lb);
            return Some((w[0].axis.ln() + t * (w[1].axis.ln() - w[0].axis.ln())).exp());
        }
    }
    None
}

/// Least-squares slope of `ln value` against `ln axis` over `[lo, hi]`.
pub fn loglog_slope(rows: &[&SweepRow], lo: f64, hi: f64, value: impl Fn(&SweepRow) -> f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.axis >= lo && r.axis <= hi).map(|r| (r.axis.ln(), value(r).ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// First axis value where the detuned product exceeds `factor` times the
/// ideal one, log-interpolated. Both series must share the axis.
pub fn departure_point(ideal: &[&SweepRow], detuned: &[&SweepRow], factor: f64) -> Option<f64> {
    let ratios: Vec<(f64, f64)> = ideal.iter().zip(detuned).map(|(i, d)| (i.axis, d.product / i.product)).collect();
    for w in ratios.windows(2) {
        let ((xa, a), (xb, b)) = (w[0], w[1]);
        if a < factor && b >= factor {
            let t = (factor.ln() - a.ln()) / (b.ln() - a.ln());
            return Some((xa.ln() + t * (xb.ln() - xa.ln())).exp());
        }
    }
    None
}

