//! # qlidar
//!
//! Estimation-theoretic performance of a pulsed lidar that jointly estimates
//! the round-trip delay `τ` (range) and the Doppler-shifted carrier `ω`
//! (radial velocity) of a target, with the carrier phase `θ` as a nuisance
//! parameter.
//!
//! The probe is a multimode Gaussian state: every Hermite-Gaussian temporal
//! mode `n` carries a displacement `α_n` and a squeezing `r_n e^{iφ_n}`. The
//! crate provides
//!
//! - [`modes`]: the temporal mode family, its parameter derivatives, its
//!   discretization on a time-bin grid and the target-induced parameter map.
//! - [`state`]: probe states, photon budgets, RMS duration and bandwidth, and
//!   the three-mode probe builder.
//! - [`receiver`]: mean and covariance of time-binned homodyne/heterodyne
//!   records, their mode-basis (tridiagonal) form and trace sampling.
//! - [`fim`]: classical Fisher information (finite-difference time-bin route and
//!   closed-form mode route), Cramér-Rao bounds and Monte-Carlo MLE checks.
//! - [`qfim`]: quantum Fisher information of lossless displaced-squeezed and
//!   coherent probes.
//! - [`benchmarks`]: closed-form classical baselines.
//! - [`harness`]: parameter sweeps, allocation optimization and CSV emission.
//!
//! All quantities are in natural units where the mode bandwidth parameter
//! `σ = 1` fixes the time unit unless stated otherwise.

#![forbid(unsafe_code)]

pub mod benchmarks;
pub mod error;
pub mod fim;
pub mod harness;
pub mod modes;
pub mod qfim;
pub mod receiver;
pub mod state;

pub use error::{Error, Result};
pub use fim::{CrbResult, CrbStatus, InfoMatrix};
pub use modes::{ModeBasis, ModeParams, Param, ParamPoint, TimeGrid};
pub use receiver::{GaussianStats, ReceiverSetup};
pub use state::{ModeOccupation, ProbeVariant, StateSpec};

pub use num_complex::Complex64;
