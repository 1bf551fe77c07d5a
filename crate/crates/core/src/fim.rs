//! Classical Fisher information over `(τ, ω, θ)` and Cramér-Rao bounds.
//!
//! Two independent routes are provided:
//!
//! - [`numeric_fim`] differentiates the time-bin mean and covariance of any
//!   [`StatsModel`] by central differences and applies the Gaussian formula
//!   `F = ∂μᵀ Σ⁻¹ ∂μ + ½ Tr[Σ⁻¹ ∂Σ Σ⁻¹ ∂Σ]`.
//! - [`analytic_homodyne_fim`] evaluates the same quantity in the mode basis,
//!   where the homodyne covariance is tridiagonal, with all derivatives taken
//!   in closed form.
//!
//! The phase `θ` is a nuisance parameter: bounds always come from inverting
//! the full matrix.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix3, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{gamma_entries, ModeBasis, Param, ParamPoint};
use crate::receiver::{self, GaussianStats, ReceiverSetup};
use crate::state::{duration_bandwidth, StateSpec};

/// Symmetric 3×3 information matrix ordered `(τ, ω, θ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfoMatrix {
    pub entries: Matrix3<f64>,
}

impl InfoMatrix {
    pub const LABELS: [Param; 3] = Param::ALL;

    pub fn new(entries: Matrix3<f64>) -> Self {
        Self { entries }
    }

    pub fn zero() -> Self {
        Self::new(Matrix3::zeros())
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Self::new(Matrix3::from_fn(|i, j| rows[i][j]))
    }

    pub fn get(&self, a: Param, b: Param) -> f64 {
        self.entries[(a.index(), b.index())]
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let e = &self.entries;
        [[e[(0, 0)], e[(0, 1)], e[(0, 2)]], [e[(1, 0)], e[(1, 1)], e[(1, 2)]], [e[(2, 0)], e[(2, 1)], e[(2, 2)]]]
    }

    pub fn symmetrized(&self) -> Self {
        Self::new((self.entries + self.entries.transpose()) * 0.5)
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        let e = self.symmetrized().entries.symmetric_eigenvalues();
        let mut v = [e[0], e[1], e[2]];
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.amax()
    }

    /// Largest asymmetry relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        (self.entries - self.entries.transpose()).amax() / scale
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigenvalues()[0] >= -tol * self.max_abs().max(f64::MIN_POSITIVE)
    }
}

impl std::ops::Sub for InfoMatrix {
    type Output = InfoMatrix;
    fn sub(self, rhs: Self) -> Self {
        InfoMatrix::new(self.entries - rhs.entries)
    }
}

impl std::ops::Add for InfoMatrix {
    type Output = InfoMatrix;
    fn add(self, rhs: Self) -> Self {
        InfoMatrix::new(self.entries + rhs.entries)
    }
}

impl std::ops::Mul<f64> for InfoMatrix {
    type Output = InfoMatrix;
    fn mul(self, k: f64) -> Self {
        InfoMatrix::new(self.entries * k)
    }
}

#[derive(Serialize, Deserialize)]
struct InfoRecord {
    labels: [Param; 3],
    entries: [[f64; 3]; 3],
}

impl Serialize for InfoMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        InfoRecord { labels: Self::LABELS, entries: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for InfoMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = InfoRecord::deserialize(d)?;
        if r.labels != Self::LABELS {
            return Err(serde::de::Error::custom("information matrix must be ordered (tau, omega, theta)"));
        }
        Ok(Self::from_rows(r.entries))
    }
}

/// Outcome of a bound computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrbStatus {
    Ok,
    Singular,
    Pseudo,
}

impl std::fmt::Display for CrbStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CrbStatus::Ok => "ok",
            CrbStatus::Singular => "singular",
            CrbStatus::Pseudo => "pseudo",
        })
    }
}

/// Per-shot variance bounds for `τ` and `ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrbResult {
    pub var_tau: f64,
    pub var_omega: f64,
    pub status: CrbStatus,
    /// Parameters lying in a zero-information direction.
    pub flagged: Vec<Param>,
    /// Largest over smallest eigenvalue of the inverted block.
    pub condition: f64,
}

impl CrbResult {
    pub fn product(&self) -> f64 {
        self.var_tau * self.var_omega
    }

    pub fn is_ok(&self) -> bool {
        self.status == CrbStatus::Ok
    }
}

/// How to treat singular information matrices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Inversion {
    /// Singular matrices give `status = singular` and infinite variances
    /// for the flagged parameters.
    #[default]
    Strict,
    /// Singular matrices are pseudo-inverted and labeled `pseudo`.
    Pseudo,
}

/// Condition number above which a matrix is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Bounds from inverting the full 3×3 matrix.
pub fn crb(fim: &InfoMatrix) -> CrbResult {
    crb_with(fim, &Param::ALL, Inversion::Strict)
}

/// Bounds from inverting the block of `fim` over `params`, which must
/// contain `τ` and `ω`. Parameters left out are treated as known.
pub fn crb_with(fim: &InfoMatrix, params: &[Param], mode: Inversion) -> CrbResult {
    let k = params.len();
    let block = DMatrix::from_fn(k, k, |i, j| fim.get(params[i], params[j]));
    let block = (&block + block.transpose()) * 0.5;
    let eig = SymmetricEigen::new(block);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(*v));
    let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    let condition = if lmax <= 0.0 || lmin <= 0.0 { f64::INFINITY } else { lmax / lmin };

    // Pseudo-inverse from the eigen-decomposition, dropping null directions.
    let cutoff = lmax / SINGULAR_CONDITION;
    let mut pinv = DMatrix::<f64>::zeros(k, k);
    let mut flagged = Vec::new();
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        if lmax > 0.0 && lambda > cutoff {
            pinv += v * v.transpose() / lambda;
        } else {
            for (i, p) in params.iter().enumerate() {
                if v[i].abs() > 1e-6 && !flagged.contains(p) {
                    flagged.push(*p);
                }
            }
        }
    }
    flagged.sort_by_key(|p| p.index());
    let diag = |p: Param| params.iter().position(|q| *q == p).map(|i| pinv[(i, i)]).unwrap_or(f64::NAN);

    if condition <= SINGULAR_CONDITION {
        return CrbResult { var_tau: diag(Param::Tau), var_omega: diag(Param::Omega), status: CrbStatus::Ok, flagged, condition };
    }
    match mode {
        Inversion::Pseudo => CrbResult {
            var_tau: diag(Param::Tau),
            var_omega: diag(Param::Omega),
            status: CrbStatus::Pseudo,
            flagged,
            condition,
        },
        Inversion::Strict => {
            let value = |p: Param| if flagged.contains(&p) { f64::INFINITY } else { diag(p) };
            CrbResult {
                var_tau: value(Param::Tau),
                var_omega: value(Param::Omega),
                status: CrbStatus::Singular,
                flagged,
                condition,
            }
        }
    }
}

/// A map from `(τ, ω, θ)` to the statistics of one record.
pub trait StatsModel: Sync {
    fn stats(&self, at: &ParamPoint) -> Result<GaussianStats>;

    /// Mean only; override when it is cheaper than the full statistics.
    fn mean(&self, at: &ParamPoint) -> Result<DVector<f64>> {
        Ok(self.stats(at)?.mu)
    }

    /// Whether the covariance does not depend on the parameters.
    fn covariance_is_constant(&self) -> bool {
        false
    }

    /// Finite-difference steps at `at`, ordered `(τ, ω, θ)`.
    fn default_steps(&self, at: &ParamPoint) -> [f64; 3];
}

/// Probe `spec` read out by a local oscillator that stays fixed while the
/// signal parameters move.
///
/// The receiver detunings describe the LO relative to the nominal
/// parameters in `basis`; at another point they become
/// `δω - (ω - ω₀)` and `δθ - (θ - θ₀)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomodyneModel {
    pub spec: StateSpec,
    pub basis: ModeBasis,
    pub rx: ReceiverSetup,
}

impl HomodyneModel {
    pub fn new(spec: StateSpec, basis: ModeBasis, rx: ReceiverSetup) -> Result<Self> {
        spec.validate()?;
        rx.validate()?;
        spec.dense(basis.len())?;
        Ok(Self { spec, basis, rx })
    }

    pub fn nominal(&self) -> ParamPoint {
        self.basis.params.point()
    }

    fn local(&self, at: &ParamPoint) -> (ModeBasis, ReceiverSetup) {
        let p0 = self.basis.params;
        let mut rx = self.rx;
        rx.delta_omega -= at.omega - p0.omega;
        rx.delta_theta -= at.theta - p0.theta;
        (self.basis.with_params(p0.with_point(*at)), rx)
    }
}

impl StatsModel for HomodyneModel {
    fn stats(&self, at: &ParamPoint) -> Result<GaussianStats> {
        let (b, rx) = self.local(at);
        receiver::gaussian_stats(&self.spec, &b, &rx)
    }

    fn mean(&self, at: &ParamPoint) -> Result<DVector<f64>> {
        let (b, rx) = self.local(at);
        receiver::mean_vector(&self.spec, &b, &rx)
    }

    fn covariance_is_constant(&self) -> bool {
        !self.spec.has_squeezing() || self.rx.kappa == 0.0
    }

    fn default_steps(&self, at: &ParamPoint) -> [f64; 3] {
        default_steps(self.basis.params.sigma, at.tau)
    }
}

/// `h_τ = 1e-4/σ·max(1, |τ|σ)`, `h_ω = 1e-4·σ`, `h_θ = 1e-4`.
pub fn default_steps(sigma: f64, tau: f64) -> [f64; 3] {
    [1e-4 / sigma * (tau.abs() * sigma).max(1.0), 1e-4 * sigma, 1e-4]
}

/// Result of [`numeric_fim`].
#[derive(Clone, Debug, PartialEq)]
pub struct NumericFim {
    pub info: InfoMatrix,
    /// Largest change under step halving, each entry normalized by
    /// `√(F_ii F_jj)`.
    pub halving_change: f64,
    /// Set when `halving_change` exceeds 1%.
    pub step_unstable: bool,
}

fn cholesky(sigma: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(sigma.clone()).ok_or_else(|| Error::Factorization { condition: receiver::condition_estimate(sigma) })
}

/// Finite-difference FIM with the step-halving stability check.
pub fn numeric_fim(model: &dyn StatsModel, at: &ParamPoint, steps: Option<[f64; 3]>) -> Result<NumericFim> {
    let h = steps.unwrap_or_else(|| model.default_steps(at));
    if h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("finite-difference steps must be positive, got {h:?}")));
    }
    let full = numeric_fim_single(model, at, h)?;
    let half = numeric_fim_single(model, at, h.map(|v| v / 2.0))?;
    let mut change: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let scale = (full.entries[(i, i)] * full.entries[(j, j)]).abs().sqrt();
            if scale > 0.0 {
                change = change.max((full.entries[(i, j)] - half.entries[(i, j)]).abs() / scale);
            }
        }
    }
    Ok(NumericFim { info: full, halving_change: change, step_unstable: change > 0.01 })
}

/// Finite-difference FIM at fixed steps, without the stability check.
pub fn numeric_fim_single(model: &dyn StatsModel, at: &ParamPoint, steps: [f64; 3]) -> Result<InfoMatrix> {
    let base = model.stats(at)?;
    let chol = cholesky(&base.sigma)?;
    let constant = model.covariance_is_constant();
    let mut dmu = Vec::with_capacity(3);
    let mut sinv_dsigma: Vec<Option<DMatrix<f64>>> = Vec::with_capacity(3);
    for p in Param::ALL {
        let h = steps[p.index()];
        let plus = at.shifted(p, h);
        let minus = at.shifted(p, -h);
        if constant {
            dmu.push((model.mean(&plus)? - model.mean(&minus)?) / (2.0 * h));
            sinv_dsigma.push(None);
        } else {
            let sp = model.stats(&plus)?;
            let sm = model.stats(&minus)?;
            dmu.push((&sp.mu - &sm.mu) / (2.0 * h));
            let ds = (sp.sigma - sm.sigma) / (2.0 * h);
            if ds.iter().all(|v| *v == 0.0) {
                sinv_dsigma.push(None);
            } else {
                sinv_dsigma.push(Some(chol.solve(&ds)));
            }
        }
    }
    let sinv_dmu: Vec<DVector<f64>> = dmu.iter().map(|d| chol.solve(d)).collect();
    let mut f = Matrix3::zeros();
    for i in 0..3 {
        for j in i..3 {
            let mut v = dmu[i].dot(&sinv_dmu[j]);
            if let (Some(a), Some(b)) = (&sinv_dsigma[i], &sinv_dsigma[j]) {
                // Tr(A B) = Σ_kl A_kl B_lk
                v += 0.5 * a.component_mul(&b.transpose()).sum();
            }
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    Ok(InfoMatrix::new(f))
}

/// Largest `|δθ + δω·τ|` accepted by [`analytic_homodyne_fim`].
pub const SMALL_ANGLE_LIMIT: f64 = 0.1;

/// Closed-form homodyne FIM in the mode basis.
///
/// The covariance part sums over adjacent mode pairs and single modes of the
/// tridiagonal `Σ̃⁻¹`; the displacement part uses the mean projected onto
/// the modes, expanded to first order in `δω`. Bin width cancels throughout.
pub fn analytic_homodyne_fim(spec: &StateSpec, basis: &ModeBasis, rx: &ReceiverSetup) -> Result<InfoMatrix> {
    let p = basis.params;
    let chi = rx.delta_theta + rx.delta_omega * p.tau;
    if chi.abs() >= SMALL_ANGLE_LIMIT {
        return Err(Error::HomodyneCondition(format!("|δθ + δω·τ| = {} must be < {SMALL_ANGLE_LIMIT}", chi.abs())));
    }
    let Some(top) = spec.highest_populated() else { return Ok(InfoMatrix::zero()) };
    if top + 2 > basis.n_max {
        return Err(Error::Truncation { k: top, needed: top + 2, n_max: basis.n_max });
    }
    let st = receiver::mode_basis_covariance(spec, basis, rx)?;
    let n = basis.len();
    let sigma = p.sigma;
    let dw = rx.delta_omega;
    let v: Vec<f64> = (0..n).map(|k| st.variance(k)).collect();
    let d: Vec<f64> = v.iter().map(|x| 1.0 / x).collect();

    // Derivatives of the diagonal of Σ̃⁻¹ (units of Δt), ordered (τ, ω, θ).
    let dd: Vec<[f64; 3]> = (0..n)
        .map(|k| {
            let g = 2.0 * st.b[k] / (v[k] * v[k]);
            [-dw * g, p.tau * g, g]
        })
        .collect();

    let mut f = Matrix3::<f64>::zeros();
    for k in 0..n {
        for i in 0..3 {
            for j in 0..3 {
                f[(i, j)] += 0.5 * v[k] * v[k] * dd[k][i] * dd[k][j];
            }
        }
    }
    for k in 0..n - 1 {
        let x = st.coupling(k) * d[k] * d[k + 1];
        let vk = [0.5 * sigma * ((k + 1) as f64).sqrt() * (d[k + 1] - d[k]), -x, 0.0];
        let w = v[k] * v[k + 1];
        for i in 0..3 {
            for j in 0..3 {
                f[(i, j)] += w * vk[i] * vk[j];
            }
        }
    }

    // Displacement part.
    let dense = spec.dense(n)?;
    if rx.kappa > 0.0 && dense.alpha.iter().any(|a| a.norm_sqr() > 0.0) {
        let inv = receiver::invert_mode_covariance_first_order(&st) / rx.grid.dt;
        let phase = Complex64::from_polar((2.0 * rx.kappa).sqrt(), chi);
        let mut proj = Vec::with_capacity(3);
        for param in Param::ALL {
            // c_n = Σ_k α_k γ_{αkn}
            let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
            for (k, a) in dense.alpha.iter().enumerate() {
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for (m, g) in gamma_entries(param, k, &p) {
                    c[m] += a * g;
                }
            }
            let pv = DVector::from_fn(n, |m, _| {
                let upper = ((m + 1) as f64).sqrt() * c[m + 1];
                let lower = if m > 0 { (m as f64).sqrt() * c[m - 1] } else { Complex64::new(0.0, 0.0) };
                let shifted = c[m] + Complex64::new(0.0, dw / sigma) * (upper + lower);
                (phase * shifted).re
            });
            proj.push(pv);
        }
        for i in 0..3 {
            let w = &inv * &proj[i];
            for j in 0..3 {
                f[(i, j)] += proj[j].dot(&w);
            }
        }
    }
    Ok(InfoMatrix::new((f + f.transpose()) * 0.5))
}

/// Displacement-dominant closed form
/// `F⁻¹_ττ = (9/16)(1-κ+κe^{-2r})/(Δω²κN_coh)` and its `ΔT²` dual.
pub fn displacement_dominant_crb(n_coh: f64, r: f64, kappa: f64, delta_t: f64, delta_omega: f64) -> CrbResult {
    if kappa <= 0.0 || n_coh <= 0.0 {
        return CrbResult {
            var_tau: f64::INFINITY,
            var_omega: f64::INFINITY,
            status: CrbStatus::Singular,
            flagged: vec![Param::Tau, Param::Omega],
            condition: f64::INFINITY,
        };
    }
    let noise = 1.0 - kappa + kappa * (-2.0 * r).exp();
    let k = 9.0 / 16.0 * noise / (kappa * n_coh);
    CrbResult {
        var_tau: k / (delta_omega * delta_omega),
        var_omega: k / (delta_t * delta_t),
        status: CrbStatus::Ok,
        flagged: Vec::new(),
        condition: f64::NAN,
    }
}

/// Gaussian log-likelihood evaluator with an optional cached factorization
/// for parameter-independent covariances.
pub struct GaussianLikelihood<'a> {
    model: &'a dyn StatsModel,
    fixed: Option<(Cholesky<f64, Dyn>, f64)>,
}

fn log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

impl<'a> GaussianLikelihood<'a> {
    pub fn new(model: &'a dyn StatsModel, at: &ParamPoint) -> Result<Self> {
        let fixed = if model.covariance_is_constant() {
            let ch = cholesky(&model.stats(at)?.sigma)?;
            let ld = log_det(&ch);
            Some((ch, ld))
        } else {
            None
        };
        Ok(Self { model, fixed })
    }

    /// `-½ (x-μ)ᵀ Σ⁻¹ (x-μ) - ½ log det Σ`, dropping the constant.
    pub fn log_likelihood(&self, x: &DVector<f64>, at: &ParamPoint) -> Result<f64> {
        match &self.fixed {
            Some((ch, ld)) => {
                let r = x - self.model.mean(at)?;
                Ok(-0.5 * r.dot(&ch.solve(&r)) - 0.5 * ld)
            }
            None => {
                let st = self.model.stats(at)?;
                let ch = cholesky(&st.sigma)?;
                let r = x - st.mu;
                Ok(-0.5 * r.dot(&ch.solve(&r)) - 0.5 * log_det(&ch))
            }
        }
    }

    /// Gradient of the log-likelihood by central differences of `μ`, `Σ`
    /// and `log det Σ`.
    pub fn gradient(&self, x: &DVector<f64>, at: &ParamPoint, steps: [f64; 3]) -> Result<[f64; 3]> {
        Ok(self.score(x, at, steps, false)?.0)
    }

    /// Gradient together with the Fisher information at `at`, sharing the
    /// finite differences.
    pub fn score_and_information(
        &self,
        x: &DVector<f64>,
        at: &ParamPoint,
        steps: [f64; 3],
    ) -> Result<([f64; 3], InfoMatrix)> {
        self.score(x, at, steps, true)
    }

    fn score(&self, x: &DVector<f64>, at: &ParamPoint, steps: [f64; 3], with_info: bool) -> Result<([f64; 3], InfoMatrix)> {
        let mut g = [0.0; 3];
        let mut info = Matrix3::zeros();
        match &self.fixed {
            Some((ch, _)) => {
                let z = ch.solve(&(x - self.model.mean(at)?));
                let mut dmu = Vec::with_capacity(3);
                for p in Param::ALL {
                    let h = steps[p.index()];
                    let d = (self.model.mean(&at.shifted(p, h))? - self.model.mean(&at.shifted(p, -h))?) / (2.0 * h);
                    g[p.index()] = d.dot(&z);
                    dmu.push(d);
                }
                if !with_info {
                    return Ok((g, InfoMatrix::zero()));
                }
                let solved: Vec<DVector<f64>> = dmu.iter().map(|d| ch.solve(d)).collect();
                for i in 0..3 {
                    for j in 0..3 {
                        info[(i, j)] = dmu[i].dot(&solved[j]);
                    }
                }
            }
            None => {
                let st = self.model.stats(at)?;
                let chol = cholesky(&st.sigma)?;
                let z = chol.solve(&(x - &st.mu));
                let mut dmu = Vec::with_capacity(3);
                let mut a = Vec::with_capacity(3);
                for p in Param::ALL {
                    let h = steps[p.index()];
                    let sp = self.model.stats(&at.shifted(p, h))?;
                    let sm = self.model.stats(&at.shifted(p, -h))?;
                    let d = (&sp.mu - &sm.mu) / (2.0 * h);
                    let dsig = (&sp.sigma - &sm.sigma) / (2.0 * h);
                    let dlogdet = (log_det(&cholesky(&sp.sigma)?) - log_det(&cholesky(&sm.sigma)?)) / (2.0 * h);
                    g[p.index()] = d.dot(&z) + 0.5 * z.dot(&(&dsig * &z)) - 0.5 * dlogdet;
                    if with_info {
                        a.push(chol.solve(&dsig));
                        dmu.push(d);
                    }
                }
                if !with_info {
                    return Ok((g, InfoMatrix::zero()));
                }
                for i in 0..3 {
                    let si = chol.solve(&dmu[i]);
                    for j in 0..3 {
                        info[(i, j)] = dmu[j].dot(&si) + 0.5 * a[i].component_mul(&a[j].transpose()).sum();
                    }
                }
            }
        }
        Ok((g, InfoMatrix::new(info).symmetrized()))
    }
}

/// Settings for the likelihood maximization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the update, in units of the bound's standard
    /// deviation per parameter.
    pub tolerance: f64,
    /// Start offset from the truth, in units of the bound's standard deviation.
    pub start_offset: f64,
    pub threads: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iterations: 60, tolerance: 1e-6, start_offset: 0.1, threads: 1 }
    }
}

/// One maximum-likelihood fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleFit {
    pub estimate: ParamPoint,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
}

/// Quasi-Newton (BFGS) ascent of the log-likelihood with an Armijo
/// backtracking line search. The inverse-curvature estimate starts from the
/// Fisher information at `start` (or `fim` if that cannot be inverted) and
/// is reset to it whenever the update stops being an ascent direction.
///
/// A fit converges once a step moves every parameter by less than
/// `opts.tolerance` bound standard deviations, or once no step can raise the
/// likelihood and the predicted gain `½ gᵀHg` is below `10⁻⁹`.
pub fn fit_mle(
    lik: &GaussianLikelihood<'_>,
    x: &DVector<f64>,
    start: ParamPoint,
    fim: &InfoMatrix,
    scale: [f64; 3],
    steps: [f64; 3],
    opts: &MleOptions,
) -> Result<MleFit> {
    use nalgebra::Vector3;
    let fallback = fim.symmetrized().entries.try_inverse().ok_or(Error::Factorization { condition: f64::INFINITY })?;
    let (g0, local) = lik.score_and_information(x, &start, steps)?;
    let reset = local
        .entries
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()) && local.is_psd(0.0))
        .unwrap_or(fallback);
    let mut h = reset;
    let mut p = Vector3::from(start.to_array());
    let mut g = Vector3::from(g0);
    let mut ll = lik.log_likelihood(x, &start)?;
    for it in 1..=opts.max_iterations {
        let mut d = h * g;
        if g.dot(&d) <= 0.0 {
            h = reset;
            d = h * g;
        }
        let slope = g.dot(&d);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand = p + d * t;
            let l = lik.log_likelihood(x, &ParamPoint::from_array(cand.into()))?;
            if l >= ll + 1e-4 * t * slope {
                accepted = Some((cand, l));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, l)) = accepted else {
            let converged = 0.5 * slope < 1e-9;
            return Ok(MleFit { estimate: ParamPoint::from_array(p.into()), iterations: it, converged, log_likelihood: ll });
        };
        let step = cand - p;
        let moved = (0..3).map(|i| step[i].abs() / scale[i]).fold(0.0f64, f64::max);
        let g_new = Vector3::from(lik.gradient(x, &ParamPoint::from_array(cand.into()), steps)?);
        // Curvature pair for the negated log-likelihood.
        let y = g - g_new;
        let sy = step.dot(&y);
        if sy > 1e-12 * step.norm() * y.norm() {
            let rho = 1.0 / sy;
            let left = nalgebra::Matrix3::identity() - step * y.transpose() * rho;
            h = left * h * left.transpose() + step * step.transpose() * rho;
        }
        p = cand;
        g = g_new;
        ll = l;
        if moved < opts.tolerance {
            return Ok(MleFit { estimate: ParamPoint::from_array(p.into()), iterations: it, converged: true, log_likelihood: ll });
        }
    }
    Ok(MleFit {
        estimate: ParamPoint::from_array(p.into()),
        iterations: opts.max_iterations,
        converged: false,
        log_likelihood: ll,
    })
}

/// Empirical estimator errors against the bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleReport {
    pub truth: ParamPoint,
    pub repetitions: usize,
    pub converged: usize,
    pub dropped: usize,
    pub mse_tau: f64,
    pub mse_omega: f64,
    pub crb: CrbResult,
    pub ratio_tau: f64,
    pub ratio_omega: f64,
    pub ratio_product: f64,
    pub mean_iterations: f64,
}

/// Samples `m` records at `truth`, fits each from a start offset by
/// `0.1` bound standard deviations in every parameter, and compares the
/// empirical mean squared errors with the bound.
pub fn mle_verify(model: &dyn StatsModel, truth: &ParamPoint, m: usize, seed: u64) -> Result<MleReport> {
    mle_verify_with(model, truth, m, seed, &MleOptions::default())
}

pub fn mle_verify_with(
    model: &dyn StatsModel,
    truth: &ParamPoint,
    m: usize,
    seed: u64,
    opts: &MleOptions,
) -> Result<MleReport> {
    if m < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 repetitions, got {m}")));
    }
    let steps = model.default_steps(truth);
    let fim = numeric_fim_single(model, truth, steps)?;
    let bound = crb(&fim);
    if !bound.is_ok() {
        return Err(Error::InvalidParameter(format!("information matrix is {} at the truth", bound.status)));
    }
    let full_inv = fim.entries.try_inverse().ok_or(Error::Factorization { condition: bound.condition })?;
    let scale = [full_inv[(0, 0)].sqrt(), full_inv[(1, 1)].sqrt(), full_inv[(2, 2)].sqrt()];
    let stats = model.stats(truth)?;
    let samples = receiver::sample_traces(&stats, m, seed)?;
    let lik = GaussianLikelihood::new(model, truth)?;
    // Random start direction per trial, fixed magnitude.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let signs: Vec<[f64; 3]> = (0..m)
        .map(|_| {
            use rand::Rng;
            [0, 1, 2].map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        })
        .collect();

    let threads = opts.threads.clamp(1, m);
    let chunk = m.div_ceil(threads);
    let fits: Vec<Result<MleFit>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|k| {
                let (lik, samples, signs, fim) = (&lik, &samples, &signs, &fim);
                scope.spawn(move || {
                    let lo = k * chunk;
                    let hi = ((k + 1) * chunk).min(m);
                    (lo..hi)
                        .map(|i| {
                            let x = samples.draws.row(i).transpose();
                            let s = signs[i];
                            let start = ParamPoint::from_array([
                                truth.tau + opts.start_offset * s[0] * scale[0],
                                truth.omega + opts.start_offset * s[1] * scale[1],
                                truth.theta + opts.start_offset * s[2] * scale[2],
                            ]);
                            fit_mle(lik, &x, start, fim, scale, steps, opts)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("fit thread panicked")).collect()
    });

    let mut se_tau = 0.0;
    let mut se_omega = 0.0;
    let mut used = 0usize;
    let mut iterations = 0usize;
    for fit in fits {
        match fit {
            Ok(f) if f.converged => {
                se_tau += (f.estimate.tau - truth.tau).powi(2);
                se_omega += (f.estimate.omega - truth.omega).powi(2);
                iterations += f.iterations;
                used += 1;
            }
            _ => {}
        }
    }
    if used == 0 {
        return Err(Error::Unsupported("no maximum-likelihood fit converged".into()));
    }
    let mse_tau = se_tau / used as f64;
    let mse_omega = se_omega / used as f64;
    Ok(MleReport {
        truth: *truth,
        repetitions: m,
        converged: used,
        dropped: m - used,
        mse_tau,
        mse_omega,
        ratio_tau: mse_tau / bound.var_tau,
        ratio_omega: mse_omega / bound.var_omega,
        ratio_product: (mse_tau * mse_omega) / bound.product(),
        crb: bound,
        mean_iterations: iterations as f64 / used as f64,
    })
}

/// `F_ττ`-based normalization helpers for reports: `(F⁻¹_ττ Δω² N², F⁻¹_ωω ΔT² N²)`.
pub fn heisenberg_ratios(bound: &CrbResult, spec: &StateSpec, basis: &ModeBasis) -> Result<(f64, f64)> {
    let n = crate::state::photon_budget(spec).total;
    let (dt, dw) = duration_bandwidth(spec, basis)?;
    Ok((bound.var_tau * dw * dw * n * n, bound.var_omega * dt * dt * n * n))
}
