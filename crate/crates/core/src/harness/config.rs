//! JSON configuration shared by the sweep runners and the CLI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{ModeParams, TimeGrid};
use crate::receiver::ReceiverSetup;
use crate::state::{squeezing_db_to_r, ProbeBuilder, ProbeVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    PhotonSweep,
    KappaSweep,
    DetuningSweep,
    MleVerify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::PhotonSweep => "photon_sweep",
            Experiment::KappaSweep => "kappa_sweep",
            Experiment::DetuningSweep => "detuning_sweep",
            Experiment::MleVerify => "mle_verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keyword {
    Optimize,
}

/// Squeezing fraction: a fixed value or `"optimize"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FSq {
    Fixed(f64),
    Keyword(Keyword),
}

impl FSq {
    pub fn is_optimize(&self) -> bool {
        matches!(self, FSq::Keyword(Keyword::Optimize))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSettings {
    /// Defaults to 3/4, or to `"optimize"` for the κ sweep.
    #[serde(default)]
    pub f_sq: Option<FSq>,
    /// Per-mode squeezing cap in dB; `null` disables the cap.
    #[serde(default)]
    pub r_cap_db: Option<f64>,
    #[serde(default)]
    pub variant: ProbeVariant,
    /// Lowest mode index of the three-mode probe.
    #[serde(default)]
    pub offset: usize,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self { f_sq: None, r_cap_db: None, variant: ProbeVariant::Standard, offset: 0 }
    }
}

impl ProbeSettings {
    pub fn builder(&self) -> ProbeBuilder {
        ProbeBuilder { variant: self.variant, offset: self.offset, r_cap: self.r_cap_db.map(squeezing_db_to_r) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSettings {
    #[serde(default)]
    pub delta_omega: f64,
    #[serde(default)]
    pub delta_theta: f64,
    #[serde(default = "one")]
    pub kappa: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ReceiverSettings {
    fn default() -> Self {
        Self { delta_omega: 0.0, delta_theta: 0.0, kappa: 1.0 }
    }
}

/// Explicit sweep values or a logarithmic range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Axis {
    Values(Vec<f64>),
    LogRange { start: f64, stop: f64, points: usize },
    LinRange { start: f64, stop: f64, points: usize },
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Axis::Values(v) => v.clone(),
            Axis::LogRange { start, stop, points } => {
                if !(*start > 0.0 && *stop > 0.0) || *points < 2 {
                    return Err(Error::Config("log_range needs start, stop > 0 and points ≥ 2".into()));
                }
                log_space(*start, *stop, *points)
            }
            Axis::LinRange { start, stop, points } => {
                if *points < 2 {
                    return Err(Error::Config("lin_range needs points ≥ 2".into()));
                }
                (0..*points).map(|i| start + (stop - start) * i as f64 / (*points - 1) as f64).collect()
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("sweep axis must be a non-empty list of finite values".into()));
        }
        Ok(v)
    }
}

/// `points` values evenly spaced in `log10` from `start` to `stop`.
pub fn log_space(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let (a, b) = (start.log10(), stop.log10());
    (0..points)
        .map(|i| {
            if i == 0 {
                start
            } else if i + 1 == points {
                stop
            } else {
                10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MleCaseKind {
    /// Coherent pulse in mode 0, heterodyne reception.
    CoherentHeterodyne,
    /// Three-mode probe, lossless homodyne reception.
    QuantumHomodyne,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MleCase {
    pub name: String,
    pub kind: MleCaseKind,
    pub photons: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

fn default_repetitions() -> usize {
    2000
}

impl MleCase {
    pub fn defaults() -> Vec<MleCase> {
        vec![
            MleCase { name: "coherent_heterodyne".into(), kind: MleCaseKind::CoherentHeterodyne, photons: 50.0, repetitions: 2000 },
            MleCase { name: "quantum_homodyne".into(), kind: MleCaseKind::QuantumHomodyne, photons: 20.0, repetitions: 2000 },
        ]
    }
}

/// One experiment's settings. Every field has a default; `{}` is valid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub probe: ProbeSettings,
    #[serde(default)]
    pub receiver: ReceiverSettings,
    /// Bin grid; defaults to 100 bins of 0.2/σ over τ ± 10/σ.
    #[serde(default)]
    pub grid: Option<TimeGrid>,
    #[serde(default)]
    pub mode: ModeParams,
    #[serde(default)]
    pub axis: Option<Axis>,
    /// Photon number for sweeps over other axes.
    #[serde(default)]
    pub photons: Option<f64>,
    /// Extra phase detunings evaluated alongside the ideal photon sweep.
    #[serde(default)]
    pub delta_theta_variants: Vec<f64>,
    /// Physical bandwidth parameter used to rescale variance columns.
    #[serde(default)]
    pub physical_sigma: Option<f64>,
    #[serde(default)]
    pub mle_cases: Option<Vec<MleCase>>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl SweepConfig {
    pub fn for_experiment(e: Experiment) -> Self {
        Self { experiment: Some(e), ..Self::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.mode.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(FSq::Fixed(f)) = self.probe.f_sq {
            if !(0.0..=1.0).contains(&f) {
                return cfg(format!("f_sq must lie in [0, 1], got {f}"));
            }
        }
        if let Some(db) = self.probe.r_cap_db {
            if !(db >= 0.0 && db.is_finite()) {
                return cfg(format!("r_cap_db must be ≥ 0, got {db}"));
            }
        }
        let k = self.receiver.kappa;
        if !(k > 0.0 && k <= 1.0) {
            return cfg(format!("kappa must lie in (0, 1], got {k}"));
        }
        if !(self.receiver.delta_omega.is_finite() && self.receiver.delta_theta.is_finite()) {
            return cfg("detunings must be finite".into());
        }
        if let Some(n) = self.photons {
            if !(n > 0.0 && n.is_finite()) {
                return cfg(format!("photons must be > 0, got {n}"));
            }
        }
        if let Some(g) = &self.grid {
            TimeGrid::new(g.t_start, g.dt, g.n_bins).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(s) = self.physical_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return cfg(format!("physical_sigma must be > 0, got {s}"));
            }
        }
        if let Some(axis) = &self.axis {
            let values = axis.values()?;
            let positive = match self.experiment {
                Some(Experiment::PhotonSweep) => values.iter().all(|v| *v > 0.0),
                Some(Experiment::KappaSweep) => values.iter().all(|v| *v > 0.0 && *v <= 1.0),
                _ => true,
            };
            if !positive {
                return cfg("sweep values out of range (N > 0, κ ∈ (0, 1])".into());
            }
        }
        if let Some(cases) = &self.mle_cases {
            for c in cases {
                if c.repetitions < 100 {
                    return cfg(format!("MLE case {} needs at least 100 repetitions", c.name));
                }
                if !(c.photons > 0.0) {
                    return cfg(format!("MLE case {} needs photons > 0", c.name));
                }
            }
        }
        Ok(())
    }

    pub fn grid_for(&self, params: &ModeParams) -> TimeGrid {
        self.grid.unwrap_or_else(|| TimeGrid::default_for(params))
    }

    pub fn receiver_setup(&self) -> ReceiverSetup {
        ReceiverSetup {
            delta_omega: self.receiver.delta_omega,
            delta_theta: self.receiver.delta_theta,
            kappa: self.receiver.kappa,
            grid: self.grid_for(&self.mode),
        }
    }

    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(1).max(1)
    }
}
