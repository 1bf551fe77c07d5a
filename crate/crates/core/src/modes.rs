//! Hermite-Gaussian temporal modes.
//!
//! Mode `n` centered at `τ` with carrier `ω`, phase `θ` and bandwidth
//! parameter `σ` is
//!
//! ```text
//! Φ_n(t) = φ̄_n(t) · e^{-i(ωt + θ)}
//! φ̄_n(t) = √σ · √(2^{-n}/n!) / (2π)^{1/4} · H_n(σ(t-τ)/√2) · e^{-σ²(t-τ)²/4}
//! ```
//!
//! with `H_n` the physicist's Hermite polynomials. The real envelope `φ̄_n` is
//! evaluated through the three-term Hermite recurrence written for the
//! normalized functions, which keeps every intermediate value `O(1)` and is
//! stable well past `n = 50`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the mode family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    /// Center time.
    pub tau: f64,
    /// Carrier angular frequency.
    pub omega: f64,
    /// Carrier phase.
    pub theta: f64,
    /// Bandwidth parameter, strictly positive.
    pub sigma: f64,
}

impl Default for ModeParams {
    fn default() -> Self {
        Self { tau: 0.0, omega: 5.0, theta: 0.0, sigma: 1.0 }
    }
}

impl ModeParams {
    pub fn new(tau: f64, omega: f64, theta: f64, sigma: f64) -> Result<Self> {
        let p = Self { tau, omega, theta, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.tau, self.omega, self.theta, self.sigma].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("mode parameters must be finite".into()));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    /// The estimated triple `(τ, ω, θ)`.
    pub fn point(&self) -> ParamPoint {
        ParamPoint { tau: self.tau, omega: self.omega, theta: self.theta }
    }

    /// Copy with `(τ, ω, θ)` replaced.
    pub fn with_point(&self, p: ParamPoint) -> Self {
        Self { tau: p.tau, omega: p.omega, theta: p.theta, sigma: self.sigma }
    }
}

/// One of the three estimated parameters. Matrices over parameters are
/// always ordered `(τ, ω, θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Tau,
    Omega,
    Theta,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::Tau, Param::Omega, Param::Theta];

    pub fn index(self) -> usize {
        match self {
            Param::Tau => 0,
            Param::Omega => 1,
            Param::Theta => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Param::Tau => "tau",
            Param::Omega => "omega",
            Param::Theta => "theta",
        }
    }
}

impl std::fmt::Display for Param {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A point in `(τ, ω, θ)` space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub tau: f64,
    pub omega: f64,
    pub theta: f64,
}

impl ParamPoint {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Tau => self.tau,
            Param::Omega => self.omega,
            Param::Theta => self.theta,
        }
    }

    pub fn set(&mut self, p: Param, v: f64) {
        match p {
            Param::Tau => self.tau = v,
            Param::Omega => self.omega = v,
            Param::Theta => self.theta = v,
        }
    }

    pub fn shifted(&self, p: Param, h: f64) -> Self {
        let mut q = *self;
        q.set(p, self.get(p) + h);
        q
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.tau, self.omega, self.theta]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { tau: a[0], omega: a[1], theta: a[2] }
    }
}

/// Normalized Hermite functions `ψ_0(x) … ψ_{n_max}(x)`,
/// `ψ_n(x) = (2^n n! √π)^{-1/2} H_n(x) e^{-x²/2}`.
pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let psi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if n_max == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Real envelopes `φ̄_0(t) … φ̄_{n_max}(t)`.
pub fn envelopes_at(t: f64, p: &ModeParams, n_max: usize) -> Vec<f64> {
    let x = p.sigma * (t - p.tau) / std::f64::consts::SQRT_2;
    let scale = (0.5 * p.sigma * p.sigma).powf(0.25);
    let mut v = hermite_functions(x, n_max);
    for e in &mut v {
        *e *= scale;
    }
    v
}

/// Real envelope `φ̄_n(t)` (the mode with its carrier removed).
pub fn envelope(n: usize, t: f64, p: &ModeParams) -> f64 {
    envelopes_at(t, p, n)[n]
}

/// Complex mode amplitude `Φ_n(t; τ, ω, θ, σ)`.
pub fn mode_value(n: usize, t: f64, p: &ModeParams) -> Complex64 {
    let carrier = Complex64::from_polar(1.0, -(p.omega * t + p.theta));
    carrier * envelope(n, t, p)
}

/// A truncated mode family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    pub params: ModeParams,
    /// Highest represented mode index.
    pub n_max: usize,
}

/// Modes kept above the highest populated one by default.
pub const DEFAULT_TRUNCATION_BUFFER: usize = 5;

impl ModeBasis {
    pub fn new(params: ModeParams, n_max: usize) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, n_max })
    }

    /// Basis covering modes up to `highest + 5`.
    pub fn for_highest(params: ModeParams, highest: usize) -> Result<Self> {
        Self::new(params, highest + DEFAULT_TRUNCATION_BUFFER)
    }

    pub fn len(&self) -> usize {
        self.n_max + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn with_params(&self, params: ModeParams) -> Self {
        Self { params, n_max: self.n_max }
    }

    pub fn envelopes_at(&self, t: f64) -> Vec<f64> {
        envelopes_at(t, &self.params, self.n_max)
    }
}

/// Sparse expansion `∂_α Φ_k = Σ_n γ_{αkn} Φ_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaCoeffs {
    /// Nonzero `(n, γ_{αkn})` pairs with `n ≤ n_max`, sorted by `n`.
    pub entries: Vec<(usize, Complex64)>,
    /// Set when a nonzero coefficient fell outside the basis (`n = k+1 > n_max`).
    pub truncated: bool,
}

/// All nonzero `γ_{αkn}` without regard to truncation, sorted by `n`.
pub fn gamma_entries(alpha: Param, k: usize, p: &ModeParams) -> Vec<(usize, Complex64)> {
    let s = p.sigma;
    let kf = k as f64;
    let lower = kf.sqrt();
    let upper = (kf + 1.0).sqrt();
    let mut out = Vec::with_capacity(3);
    match alpha {
        Param::Tau => {
            if k > 0 {
                out.push((k - 1, Complex64::new(-0.5 * s * lower, 0.0)));
            }
            out.push((k + 1, Complex64::new(0.5 * s * upper, 0.0)));
        }
        Param::Omega => {
            if k > 0 {
                out.push((k - 1, Complex64::new(0.0, -lower / s)));
            }
            if p.tau != 0.0 {
                out.push((k, Complex64::new(0.0, -p.tau)));
            }
            out.push((k + 1, Complex64::new(0.0, -upper / s)));
        }
        Param::Theta => out.push((k, Complex64::new(0.0, -1.0))),
    }
    out
}

/// `γ_{αkn}` restricted to the basis, with a truncation flag.
pub fn gamma_coeffs(alpha: Param, k: usize, basis: &ModeBasis) -> Result<GammaCoeffs> {
    if k > basis.n_max {
        return Err(Error::Truncation { k, needed: k, n_max: basis.n_max });
    }
    let all = gamma_entries(alpha, k, &basis.params);
    let truncated = all.iter().any(|(n, _)| *n > basis.n_max);
    let entries = all.into_iter().filter(|(n, _)| *n <= basis.n_max).collect();
    Ok(GammaCoeffs { entries, truncated })
}

/// Time-bin grid with bin centers `t_i = t_start + i·dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n_bins: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_bins: usize) -> Result<Self> {
        if !(t_start.is_finite() && dt.is_finite()) || dt <= 0.0 || n_bins == 0 {
            return Err(Error::InvalidParameter(format!(
                "time grid needs finite t_start, dt > 0 and n_bins ≥ 1 (got {t_start}, {dt}, {n_bins})"
            )));
        }
        Ok(Self { t_start, dt, n_bins })
    }

    /// Default window: 100 bins of width `0.2/σ` starting at `τ - 10/σ`.
    pub fn default_for(p: &ModeParams) -> Self {
        Self { t_start: p.tau - 10.0 / p.sigma, dt: 0.2 / p.sigma, n_bins: 100 }
    }

    /// Window `[t0, t0 + span)` split into `n_bins` bins.
    pub fn spanning(t0: f64, span: f64, n_bins: usize) -> Result<Self> {
        Self::new(t0, span / n_bins as f64, n_bins)
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_bins).map(|i| self.t(i)).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.n_bins - 1)
    }

    /// Whether the bins cover `[τ - w, τ + w]`.
    pub fn covers(&self, tau: f64, half_width: f64) -> bool {
        self.t_start <= tau - half_width && self.t_end() >= tau + half_width
    }
}

/// Discretized envelopes `U_{n,i} = √Δt · φ̄_n(t_i)`, shape `(n_max+1) × n_bins`.
pub fn discretize_envelopes(basis: &ModeBasis, grid: &TimeGrid) -> Result<nalgebra::DMatrix<f64>> {
    let p = &basis.params;
    if !grid.covers(p.tau, 8.0 / p.sigma) {
        return Err(Error::Resolution(format!(
            "grid [{}, {}] does not span τ ± 8/σ = [{}, {}]",
            grid.t_start,
            grid.t_end(),
            p.tau - 8.0 / p.sigma,
            p.tau + 8.0 / p.sigma
        )));
    }
    if grid.dt * p.sigma > 0.5 {
        return Err(Error::Resolution(format!("dt·σ = {} exceeds 0.5", grid.dt * p.sigma)));
    }
    let w = grid.dt.sqrt();
    let mut u = nalgebra::DMatrix::zeros(basis.len(), grid.n_bins);
    for i in 0..grid.n_bins {
        for (n, e) in basis.envelopes_at(grid.t(i)).into_iter().enumerate() {
            u[(n, i)] = w * e;
        }
    }
    Ok(u)
}

/// Target range, radial velocity and reflection phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetKinematics {
    pub range: f64,
    pub velocity: f64,
    pub c: f64,
    pub theta_r: f64,
}

impl TargetKinematics {
    pub fn validate(&self) -> Result<()> {
        if !(self.range.is_finite() && self.velocity.is_finite() && self.theta_r.is_finite()) {
            return Err(Error::InvalidParameter("kinematics must be finite".into()));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParameter(format!("light speed must be > 0, got {}", self.c)));
        }
        let beta = self.velocity / self.c;
        if beta.abs() >= 0.01 {
            return Err(Error::Kinematics(beta.abs()));
        }
        Ok(())
    }
}

/// Mode parameters of the returned signal.
pub fn apply_target(p_in: &ModeParams, kin: &TargetKinematics) -> Result<ModeParams> {
    kin.validate()?;
    p_in.validate()?;
    Ok(ModeParams {
        tau: p_in.tau + 2.0 * kin.range / kin.c,
        omega: p_in.omega * (1.0 + 2.0 * kin.velocity / kin.c),
        theta: p_in.theta + kin.theta_r,
        sigma: p_in.sigma,
    })
}

/// Inverse of [`apply_target`].
pub fn remove_target(p_out: &ModeParams, kin: &TargetKinematics) -> Result<ModeParams> {
    kin.validate()?;
    p_out.validate()?;
    Ok(ModeParams {
        tau: p_out.tau - 2.0 * kin.range / kin.c,
        omega: p_out.omega / (1.0 + 2.0 * kin.velocity / kin.c),
        theta: p_out.theta - kin.theta_r,
        sigma: p_out.sigma,
    })
}

/// Result of [`infinitesimal_transform_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct TransformCheck {
    /// Max deviation of `⟨φ_m^in, φ_n^out⟩` from `δ_mn + Σ_α ε_α γ_{αnm}`.
    pub gamma_residual: f64,
    /// Max deviation of the annihilation-operator mixing coefficients from
    /// `A_n`, `B_n`, `-B*_{n+1}`.
    pub mixing_residual: f64,
    /// Mixing matrix `M[n][m]`: coefficient of `a_m^in` in `a_n^out`.
    pub mixing: Vec<Vec<Complex64>>,
}

impl TransformCheck {
    pub fn residual(&self) -> f64 {
        self.gamma_residual.max(self.mixing_residual)
    }
}

/// Compares the exact overlaps between input modes and modes with shifted
/// parameters `(τ+ε_τ, ω+ε_ω, θ+ε_θ)` against their first-order expansion.
///
/// Overlaps are computed by midpoint quadrature on a fine grid; for the
/// Gaussian-weighted integrands involved that rule converges spectrally.
pub fn infinitesimal_transform_check(
    basis: &ModeBasis,
    eps_tau: f64,
    eps_omega: f64,
    eps_theta: f64,
) -> TransformCheck {
    let p_in = basis.params;
    let p_out = ModeParams {
        tau: p_in.tau + eps_tau,
        omega: p_in.omega + eps_omega,
        theta: p_in.theta + eps_theta,
        sigma: p_in.sigma,
    };
    let n = basis.len();
    let half = (12.0 + 2.0 * (2.0 * n as f64 + 1.0).sqrt()) / p_in.sigma;
    let dt = 0.02 / p_in.sigma;
    let steps = (2.0 * half / dt).ceil() as usize;

    // overlap[m][k] = ∫ conj(Φ_m^in) Φ_k^out dt. The carriers combine to
    // e^{-i(ε_ω t + ε_θ)}, so the integrand has no fast oscillation.
    let mut overlap = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for s in 0..steps {
        let t = p_in.tau - half + (s as f64 + 0.5) * dt;
        let e_in = envelopes_at(t, &p_in, basis.n_max);
        let e_out = envelopes_at(t, &p_out, basis.n_max);
        let phase = Complex64::from_polar(dt, -(eps_omega * t + eps_theta));
        for m in 0..n {
            for k in 0..n {
                overlap[m][k] += phase * (e_in[m] * e_out[k]);
            }
        }
    }

    let mut gamma_residual: f64 = 0.0;
    for k in 0..n {
        let mut predicted = vec![Complex64::new(0.0, 0.0); n];
        predicted[k] += 1.0;
        for (alpha, eps) in [(Param::Tau, eps_tau), (Param::Omega, eps_omega), (Param::Theta, eps_theta)] {
            for (m, g) in gamma_entries(alpha, k, &p_in) {
                if m < n {
                    predicted[m] += g * eps;
                }
            }
        }
        // The top mode's expansion leaks into mode n_max+1, which the
        // truncated basis cannot represent; compare only fully represented rows.
        if k + 1 < n {
            for m in 0..n {
                gamma_residual = gamma_residual.max((overlap[m][k] - predicted[m]).norm());
            }
        }
    }

    // a_n^out = ∫ conj(Φ_n^out) E = Σ_m conj(overlap[m][n]) a_m^in.
    let mixing: Vec<Vec<Complex64>> =
        (0..n).map(|k| (0..n).map(|m| overlap[m][k].conj()).collect()).collect();
    let sigma = p_in.sigma;
    let b = |k: usize| Complex64::new(-eps_tau * sigma * (k as f64).sqrt() / 2.0, eps_omega * (k as f64).sqrt() / sigma);
    let a_n = Complex64::new(1.0, eps_theta + eps_omega * p_in.tau);
    let mut mixing_residual: f64 = 0.0;
    for k in 0..n.saturating_sub(1) {
        for m in 0..n {
            let expected = if m == k {
                a_n
            } else if m + 1 == k {
                b(k)
            } else if m == k + 1 {
                -b(k + 1).conj()
            } else {
                Complex64::new(0.0, 0.0)
            };
            mixing_residual = mixing_residual.max((mixing[k][m] - expected).norm());
        }
    }
    TransformCheck { gamma_residual, mixing_residual, mixing }
}

/// Residuals reported by [`self_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSelfCheck {
    pub n_max: usize,
    /// Max deviation of the fine-grid Gram matrix from the identity.
    pub orthonormality: f64,
    /// Max deviation of central differences of `Φ_k` from `Σ_n γ_{αkn} Φ_n`.
    pub gamma_fd: f64,
    /// Residual of the first-order transform at shifts of `10⁻⁴`.
    pub transform: f64,
}

/// Gram-matrix tolerance used by [`ModeSelfCheck::passed`].
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;
/// Derivative tolerance used by [`ModeSelfCheck::passed`].
pub const GAMMA_FD_TOLERANCE: f64 = 1e-6;
/// First-order transform tolerance at shifts of `10⁻⁴` (second-order terms
/// are of order `n·10⁻⁸`).
pub const TRANSFORM_TOLERANCE: f64 = 1e-6;

impl ModeSelfCheck {
    pub fn passed(&self) -> bool {
        self.orthonormality < ORTHONORMALITY_TOLERANCE
            && self.gamma_fd < GAMMA_FD_TOLERANCE
            && self.transform < TRANSFORM_TOLERANCE
    }
}

/// Numerical consistency checks of the mode family on `basis`.
pub fn self_check(basis: &ModeBasis) -> ModeSelfCheck {
    let p = basis.params;
    let n = basis.len();
    let half = (12.0 + 2.0 * (2.0 * n as f64 + 1.0).sqrt()) / p.sigma;
    let dt = 0.02 / p.sigma;
    let steps = (2.0 * half / dt).ceil() as usize;
    let mut gram = nalgebra::DMatrix::<f64>::zeros(n, n);
    for s in 0..steps {
        let t = p.tau - half + (s as f64 + 0.5) * dt;
        let e = envelopes_at(t, &p, basis.n_max);
        for a in 0..n {
            for b in 0..n {
                gram[(a, b)] += e[a] * e[b] * dt;
            }
        }
    }
    let orthonormality = (gram - nalgebra::DMatrix::identity(n, n)).amax();

    let h = 1e-5;
    let mut gamma_fd: f64 = 0.0;
    let probes: Vec<f64> = (0..7).map(|i| p.tau + (i as f64 - 3.0) * 0.8 / p.sigma).collect();
    for k in 0..n {
        for alpha in Param::ALL {
            let step = match alpha {
                Param::Tau => h / p.sigma,
                Param::Omega => h * p.sigma,
                Param::Theta => h,
            };
            let plus = p.with_point(p.point().shifted(alpha, step));
            let minus = p.with_point(p.point().shifted(alpha, -step));
            for &t in &probes {
                let fd = (mode_value(k, t, &plus) - mode_value(k, t, &minus)) / (2.0 * step);
                let mut expansion = Complex64::new(0.0, 0.0);
                for (m, g) in gamma_entries(alpha, k, &p) {
                    expansion += g * mode_value(m, t, &p);
                }
                gamma_fd = gamma_fd.max((fd - expansion).norm());
            }
        }
    }

    let eps = 1e-4;
    let transform = infinitesimal_transform_check(basis, eps / p.sigma, eps * p.sigma, eps).residual();
    ModeSelfCheck { n_max: basis.n_max, orthonormality, gamma_fd, transform }
}
