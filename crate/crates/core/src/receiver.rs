//! Gaussian statistics of time-binned homodyne and heterodyne records.
//!
//! The local oscillator is described by its detunings from the returned
//! signal, `δω = ω_LO - ω` and `δθ = θ_LO - θ`. Bin `i` integrates the
//! quadrature over `[t_i - Δt/2, t_i + Δt/2]`, so shot noise has variance
//! `1/(2Δt)` per bin. Loss with transmissivity `κ` mixes in vacuum.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{ModeBasis, TimeGrid};
use crate::state::{duration_bandwidth, StateSpec};

/// Local-oscillator detunings, loss and time bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSetup {
    pub delta_omega: f64,
    pub delta_theta: f64,
    pub kappa: f64,
    pub grid: TimeGrid,
}

impl ReceiverSetup {
    /// Lossless homodyne receiver with zero detunings on the given grid.
    pub fn homodyne(grid: TimeGrid) -> Self {
        Self { delta_omega: 0.0, delta_theta: 0.0, kappa: 1.0, grid }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::InvalidParameter(format!("kappa must lie in [0, 1], got {}", self.kappa)));
        }
        if !(self.delta_omega.is_finite() && self.delta_theta.is_finite()) {
            return Err(Error::InvalidParameter("detunings must be finite".into()));
        }
        TimeGrid::new(self.grid.t_start, self.grid.dt, self.grid.n_bins)?;
        Ok(())
    }
}

/// Mean vector and covariance matrix of one record.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianStats {
    pub grid: TimeGrid,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
}

impl GaussianStats {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Writes `mean.csv` (`index,t,mu`) and `cov.csv` (`i,j,value`, upper
    /// triangle) into `dir`.
    pub fn export_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
        let mean_path = dir.join("mean.csv");
        let mut w = csv::Writer::from_path(&mean_path).map_err(|source| Error::Csv { path: mean_path.clone(), source })?;
        let csv_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Csv { path: path.clone(), source }
        };
        w.write_record(["index", "t", "mu"]).map_err(csv_err(&mean_path))?;
        for i in 0..self.dim() {
            w.write_record([i.to_string(), format!("{:.16e}", self.grid.t(i)), format!("{:.16e}", self.mu[i])])
                .map_err(csv_err(&mean_path))?;
        }
        w.flush().map_err(|source| Error::Io { path: mean_path.clone(), source })?;

        let cov_path = dir.join("cov.csv");
        let mut w = csv::Writer::from_path(&cov_path).map_err(csv_err(&cov_path))?;
        w.write_record(["i", "j", "value"]).map_err(csv_err(&cov_path))?;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                w.write_record([i.to_string(), j.to_string(), format!("{:.16e}", self.sigma[(i, j)])])
                    .map_err(csv_err(&cov_path))?;
            }
        }
        w.flush().map_err(|source| Error::Io { path: cov_path, source })?;
        Ok(())
    }
}

fn check_resolution(basis: &ModeBasis, rx: &ReceiverSetup) -> Result<()> {
    rx.validate()?;
    let scale = basis.params.sigma.max(rx.delta_omega.abs());
    if rx.grid.dt * scale > 0.5 {
        return Err(Error::Resolution(format!(
            "dt·max(σ, |δω|) = {} exceeds 0.5",
            rx.grid.dt * scale
        )));
    }
    Ok(())
}

/// Envelope values `φ̄_n(t_i)` for the populated modes, row per mode.
fn envelope_rows(basis: &ModeBasis, rx: &ReceiverSetup, top: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; rx.grid.n_bins]; top + 1];
    for i in 0..rx.grid.n_bins {
        let e = crate::modes::envelopes_at(rx.grid.t(i), &basis.params, top);
        for (n, v) in e.into_iter().enumerate() {
            rows[n][i] = v;
        }
    }
    rows
}

/// `μ_i = √(2κ) Re[Σ_n α_n φ̄_n(t_i) e^{i(δω t_i + δθ)}]`.
pub fn mean_vector(spec: &StateSpec, basis: &ModeBasis, rx: &ReceiverSetup) -> Result<DVector<f64>> {
    check_resolution(basis, rx)?;
    let m = rx.grid.n_bins;
    let mut mu = DVector::zeros(m);
    let Some(top) = spec.highest_populated() else { return Ok(mu) };
    let dense = spec.dense(basis.len())?;
    if rx.kappa == 0.0 || dense.alpha.iter().all(|a| a.norm_sqr() == 0.0) {
        return Ok(mu);
    }
    let rows = envelope_rows(basis, rx, top);
    let amp = (2.0 * rx.kappa).sqrt();
    for i in 0..m {
        let t = rx.grid.t(i);
        let mut s = Complex64::new(0.0, 0.0);
        for (n, row) in rows.iter().enumerate() {
            s += dense.alpha[n] * row[i];
        }
        let lo = Complex64::from_polar(1.0, rx.delta_omega * t + rx.delta_theta);
        mu[i] = amp * (s * lo).re;
    }
    Ok(mu)
}

/// `Σ_ij = δ_ij/(2Δt) + κ Σ_n φ̄_n(t_i) φ̄_n(t_j) [N_n cos(δω(t_i-t_j))
///  - √(N_n(N_n+1)) cos(δω(t_i+t_j) + 2δθ + φ_n)]`, `N_n = sinh² r_n`.
pub fn covariance_matrix(spec: &StateSpec, basis: &ModeBasis, rx: &ReceiverSetup) -> Result<DMatrix<f64>> {
    check_resolution(basis, rx)?;
    let m = rx.grid.n_bins;
    let mut sigma = DMatrix::from_diagonal_element(m, m, 0.5 / rx.grid.dt);
    let Some(top) = spec.highest_populated() else { return Ok(sigma) };
    let dense = spec.dense(basis.len())?;
    if rx.kappa == 0.0 || !spec.has_squeezing() {
        return Ok(sigma);
    }
    let rows = envelope_rows(basis, rx, top);
    let times = rx.grid.times();
    let cw: Vec<f64> = times.iter().map(|t| (rx.delta_omega * t).cos()).collect();
    let sw: Vec<f64> = times.iter().map(|t| (rx.delta_omega * t).sin()).collect();
    let mut excess = DMatrix::<f64>::zeros(m, m);
    for (n, row) in rows.iter().enumerate() {
        let r = dense.r[n];
        if r == 0.0 {
            continue;
        }
        // With u_i = φ̄ cos(δω t_i), w_i = φ̄ sin(δω t_i), ψ = 2δθ + φ_n:
        // bracket = (N - R cosψ) u uᵀ + (N + R cosψ) w wᵀ + R sinψ (u wᵀ + w uᵀ).
        // N ∓ R cosψ are rewritten with half-angles to avoid cancellation
        // near ψ = 0 where they equal -s e^{-r} and s e^{r}.
        let psi = 2.0 * rx.delta_theta + dense.phi[n];
        let (s, c) = (r.sinh(), r.cosh());
        let half = (0.5 * psi).sin().powi(2);
        let cu = -s * (-r).exp() + 2.0 * c * s * half;
        let cv = s * r.exp() - 2.0 * c * s * half;
        let cx = c * s * psi.sin();
        let u: Vec<f64> = (0..m).map(|i| row[i] * cw[i]).collect();
        let w: Vec<f64> = (0..m).map(|i| row[i] * sw[i]).collect();
        for j in 0..m {
            for i in 0..=j {
                excess[(i, j)] += cu * u[i] * u[j] + cv * w[i] * w[j] + cx * (u[i] * w[j] + w[i] * u[j]);
            }
        }
    }
    for j in 0..m {
        for i in 0..j {
            excess[(j, i)] = excess[(i, j)];
        }
    }
    sigma += excess * rx.kappa;
    Ok(sigma)
}

pub fn gaussian_stats(spec: &StateSpec, basis: &ModeBasis, rx: &ReceiverSetup) -> Result<GaussianStats> {
    Ok(GaussianStats {
        grid: rx.grid,
        mu: mean_vector(spec, basis, rx)?,
        sigma: covariance_matrix(spec, basis, rx)?,
    })
}

/// Covariance of the projected record `U·x` in the mode basis (tridiagonal,
/// first order in `δω`).
#[derive(Clone, Debug, PartialEq)]
pub struct ModeBasisStats {
    pub dt: f64,
    pub delta_omega: f64,
    pub sigma: f64,
    /// `A_n = κ(s_n² - c_n s_n cos(2δθ + 2δωτ + φ_n))`
    pub a: Vec<f64>,
    /// `B_n = κ c_n s_n sin(2δθ + 2δωτ + φ_n)`
    pub b: Vec<f64>,
    pub sigma_tilde: DMatrix<f64>,
}

impl ModeBasisStats {
    /// `√(n/2)/g` with `g = σ/√2`.
    pub fn alpha_coeff(&self, n: usize) -> f64 {
        (n as f64).sqrt() / self.sigma
    }

    /// `√((n+1)/2)/g`.
    pub fn beta_coeff(&self, n: usize) -> f64 {
        ((n + 1) as f64).sqrt() / self.sigma
    }

    /// `A_n + ½`, the quadrature variance of mode `n` in units of `1/Δt`.
    pub fn variance(&self, n: usize) -> f64 {
        self.a[n] + 0.5
    }

    /// `β_n B_n + α_{n+1} B_{n+1}`, the `(n, n+1)` coupling without `δω/Δt`.
    pub fn coupling(&self, n: usize) -> f64 {
        self.beta_coeff(n) * self.b[n] + self.alpha_coeff(n + 1) * self.b[n + 1]
    }
}

/// Squeezing coefficients `A_n`, `B_n` over the basis.
pub(crate) fn squeezing_coefficients(
    spec: &StateSpec,
    basis: &ModeBasis,
    rx: &ReceiverSetup,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dense = spec.dense(basis.len())?;
    let psi0 = 2.0 * rx.delta_theta + 2.0 * rx.delta_omega * basis.params.tau;
    let mut a = vec![0.0; basis.len()];
    let mut b = vec![0.0; basis.len()];
    for n in 0..basis.len() {
        let r = dense.r[n];
        if r == 0.0 {
            continue;
        }
        let psi = psi0 + dense.phi[n];
        let (s, c) = (r.sinh(), r.cosh());
        a[n] = rx.kappa * (-s * (-r).exp() + 2.0 * c * s * (0.5 * psi).sin().powi(2));
        b[n] = rx.kappa * c * s * psi.sin();
    }
    Ok((a, b))
}

pub fn mode_basis_covariance(spec: &StateSpec, basis: &ModeBasis, rx: &ReceiverSetup) -> Result<ModeBasisStats> {
    rx.validate()?;
    let (delta_t, _) = duration_bandwidth(spec, basis)?;
    if (rx.delta_omega * delta_t).abs() >= 0.1 {
        return Err(Error::HomodyneCondition(format!(
            "|δω|·ΔT = {} must be < 0.1",
            (rx.delta_omega * delta_t).abs()
        )));
    }
    let (a, b) = squeezing_coefficients(spec, basis, rx)?;
    let n = basis.len();
    let dt = rx.grid.dt;
    let mut stats = ModeBasisStats {
        dt,
        delta_omega: rx.delta_omega,
        sigma: basis.params.sigma,
        a,
        b,
        sigma_tilde: DMatrix::zeros(n, n),
    };
    for k in 0..n {
        stats.sigma_tilde[(k, k)] = stats.variance(k) / dt;
        if k + 1 < n && rx.delta_omega != 0.0 {
            let off = rx.delta_omega * stats.coupling(k) / dt;
            stats.sigma_tilde[(k, k + 1)] = off;
            stats.sigma_tilde[(k + 1, k)] = off;
        }
    }
    Ok(stats)
}

/// Tridiagonal inverse of `Σ̃`, exact to first order in `δω/σ`.
pub fn invert_mode_covariance_first_order(stats: &ModeBasisStats) -> DMatrix<f64> {
    let n = stats.a.len();
    let dt = stats.dt;
    let mut inv = DMatrix::zeros(n, n);
    for k in 0..n {
        inv[(k, k)] = dt / stats.variance(k);
        if k + 1 < n && stats.delta_omega != 0.0 {
            let off = -dt * stats.delta_omega * stats.coupling(k) / (stats.variance(k) * stats.variance(k + 1));
            inv[(k, k + 1)] = off;
            inv[(k + 1, k)] = off;
        }
    }
    inv
}

/// Draws of the record distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    /// `m × M`, one record per row.
    pub draws: DMatrix<f64>,
    /// Diagonal jitter added before factorization succeeded, if any.
    pub jitter: Option<f64>,
}

/// Lower Cholesky factor, retrying once with `1e-12·trace/M` added to the
/// diagonal.
pub fn factor_covariance(sigma: &DMatrix<f64>) -> Result<(DMatrix<f64>, Option<f64>)> {
    if let Some(ch) = nalgebra::Cholesky::new(sigma.clone()) {
        return Ok((ch.unpack(), None));
    }
    let m = sigma.nrows().max(1);
    let jitter = 1e-12 * sigma.trace() / m as f64;
    let mut shifted = sigma.clone();
    for i in 0..sigma.nrows() {
        shifted[(i, i)] += jitter;
    }
    match nalgebra::Cholesky::new(shifted) {
        Some(ch) => Ok((ch.unpack(), Some(jitter))),
        None => Err(Error::Factorization { condition: condition_estimate(sigma) }),
    }
}

/// Ratio of largest to smallest absolute eigenvalue.
pub fn condition_estimate(sigma: &DMatrix<f64>) -> f64 {
    let eig = sigma.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `m` independent records drawn with seed `seed`.
///
/// Equivalent to [`sample_traces_sharded`] with one shard.
pub fn sample_traces(stats: &GaussianStats, m: usize, seed: u64) -> Result<Samples> {
    sample_traces_sharded(stats, m, seed, 1)
}

/// Records drawn in `shards` independent blocks, one thread per block.
///
/// Splitting rule: the rows are cut into `shards` contiguous blocks whose
/// sizes differ by at most one (the first `m mod shards` blocks are larger).
/// Block `k` uses a ChaCha8 generator seeded with `seed` on stream `k`. The
/// output depends on `(seed, m, shards)` only.
pub fn sample_traces_sharded(stats: &GaussianStats, m: usize, seed: u64, shards: usize) -> Result<Samples> {
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one repetition".into()));
    }
    let shards = shards.clamp(1, m);
    let (l, jitter) = factor_covariance(&stats.sigma)?;
    let dim = stats.dim();
    let base = m / shards;
    let extra = m % shards;
    let bounds: Vec<(usize, usize)> = (0..shards)
        .scan(0usize, |start, k| {
            let len = base + usize::from(k < extra);
            let b = (*start, len);
            *start += len;
            Some(b)
        })
        .collect();
    let blocks: Vec<DMatrix<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = bounds
            .iter()
            .enumerate()
            .map(|(k, &(_, len))| {
                let l = &l;
                let mu = &stats.mu;
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    let mut block = DMatrix::zeros(len, dim);
                    let mut z = DVector::zeros(dim);
                    for row in 0..len {
                        for v in z.iter_mut() {
                            *v = StandardNormal.sample(&mut rng);
                        }
                        let x = l * &z + mu;
                        block.set_row(row, &x.transpose());
                    }
                    block
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampling thread panicked")).collect()
    });
    let mut draws = DMatrix::zeros(m, dim);
    for ((start, len), block) in bounds.into_iter().zip(blocks) {
        draws.view_mut((start, 0), (len, dim)).copy_from(&block);
    }
    Ok(Samples { draws, jitter })
}

/// Writes a short human-readable description of `stats` (used by the CLI).
pub fn describe(stats: &GaussianStats, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "bins: {} (dt = {}, t_start = {})", stats.dim(), stats.grid.dt, stats.grid.t_start)?;
    writeln!(out, "max |mu|: {:.6e}", stats.mu.amax())?;
    writeln!(out, "trace sigma: {:.6e}", stats.sigma.trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{discretize_envelopes, envelope, ModeParams};
    use crate::state::{standard_probe, ModeOccupation};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn default_setup(spec: &StateSpec) -> (ModeBasis, ReceiverSetup) {
        let basis = spec.default_basis(ModeParams::default()).unwrap();
        let rx = ReceiverSetup::homodyne(TimeGrid::default_for(&basis.params));
        (basis, rx)
    }

    #[test]
    fn zero_displacement_gives_zero_mean() {
        let spec = StateSpec::new(vec![ModeOccupation::squeezed(1, 0.8, 0.2)]).unwrap();
        let (b, rx) = default_setup(&spec);
        assert_eq!(mean_vector(&spec, &b, &rx).unwrap().amax(), 0.0);
    }

    #[test]
    fn full_loss_gives_zero_mean() {
        let spec = standard_probe(50.0, 0.5, None).unwrap();
        let (b, mut rx) = default_setup(&spec);
        rx.kappa = 0.0;
        assert_eq!(mean_vector(&spec, &b, &rx).unwrap().amax(), 0.0);
    }

    #[test]
    fn standard_probe_mean_closed_form() {
        let spec = standard_probe(100.0, 0.75, None).unwrap();
        let (b, rx) = default_setup(&spec);
        let mu = mean_vector(&spec, &b, &rx).unwrap();
        let alpha = spec.get(1).unwrap().alpha;
        for i in 0..rx.grid.n_bins {
            let t = rx.grid.t(i);
            // φ̄_1(t) = (2π)^{-1/4} · t · e^{-t²/4} for σ = 1, τ = 0.
            let phi1 = (2.0 * std::f64::consts::PI).powf(-0.25) * t * (-t * t / 4.0).exp();
            assert_relative_eq!(phi1, envelope(1, t, &b.params), epsilon = 1e-14);
            assert_relative_eq!(mu[i], std::f64::consts::SQRT_2 * alpha.re * phi1, epsilon = 1e-12);
        }
    }

    #[test]
    fn vacuum_covariance_is_shot_noise() {
        let spec = StateSpec::vacuum();
        let (b, rx) = default_setup(&spec);
        let s = covariance_matrix(&spec, &b, &rx).unwrap();
        assert_eq!(s, DMatrix::from_diagonal_element(100, 100, 2.5));
    }

    #[test]
    fn squeezed_ground_mode_variance() {
        let spec = StateSpec::new(vec![ModeOccupation::squeezed(0, 1.0, 0.0)]).unwrap();
        let (b, rx) = default_setup(&spec);
        let s = covariance_matrix(&spec, &b, &rx).unwrap();
        let u = discretize_envelopes(&b, &rx.grid).unwrap();
        let v = (u.row(0) * &s * u.row(0).transpose())[(0, 0)] * rx.grid.dt;
        assert_relative_eq!(v, (-2.0f64).exp() / 2.0, epsilon = 1e-9);
        assert_relative_eq!(v, 0.06767, epsilon = 1e-5);
    }

    #[test]
    fn conjugation_matches_mode_basis() {
        let spec = standard_probe(100.0, 0.75, None).unwrap();
        let (b, rx) = default_setup(&spec);
        let s = covariance_matrix(&spec, &b, &rx).unwrap();
        let u = discretize_envelopes(&b, &rx.grid).unwrap();
        let conj = &u * s * u.transpose();
        let tilde = mode_basis_covariance(&spec, &b, &rx).unwrap();
        let scale = tilde.sigma_tilde.amax();
        assert!((&conj - &tilde.sigma_tilde).amax() < 1e-6 * scale);
    }

    #[test]
    fn detuned_mode_diagonal_limit() {
        let r: f64 = 1.3;
        let spec = StateSpec::new(vec![ModeOccupation::squeezed(2, r, 0.0)]).unwrap();
        let (b, mut rx) = default_setup(&spec);
        rx.delta_omega = 1e-6;
        rx.delta_theta = -rx.delta_omega * b.params.tau;
        let st = mode_basis_covariance(&spec, &b, &rx).unwrap();
        assert_relative_eq!(st.sigma_tilde[(2, 2)], (-2.0 * r).exp() / (2.0 * rx.grid.dt), epsilon = 1e-12);
        assert_relative_eq!(r.sinh().powi(2) - r.sinh() * r.cosh() + 0.5, (-2.0 * r).exp() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn tridiagonal_structure() {
        let spec = standard_probe(30.0, 0.5, None).unwrap();
        let (b, mut rx) = default_setup(&spec);
        rx.delta_theta = 0.03;
        let zero = mode_basis_covariance(&spec, &b, &rx).unwrap();
        for i in 0..b.len() {
            for j in 0..b.len() {
                if i != j {
                    assert_eq!(zero.sigma_tilde[(i, j)], 0.0);
                }
            }
        }
        rx.delta_omega = 0.01;
        let st = mode_basis_covariance(&spec, &b, &rx).unwrap();
        for i in 0..b.len() {
            for j in 0..b.len() {
                if i.abs_diff(j) > 1 {
                    assert_eq!(st.sigma_tilde[(i, j)], 0.0);
                }
            }
            assert!(st.sigma_tilde[(i, i)] >= (1.0 - rx.kappa) / 2.0 / rx.grid.dt - 1e-12);
        }
    }

    #[test]
    fn homodyne_condition_enforced() {
        let spec = standard_probe(30.0, 0.5, None).unwrap();
        let (b, mut rx) = default_setup(&spec);
        rx.delta_omega = 0.2;
        assert!(matches!(mode_basis_covariance(&spec, &b, &rx), Err(Error::HomodyneCondition(_))));
    }

    #[test]
    fn first_order_inverse() {
        let spec = standard_probe(30.0, 0.75, None).unwrap();
        let (b, mut rx) = default_setup(&spec);
        rx.delta_theta = 0.02;
        let st0 = mode_basis_covariance(&spec, &b, &rx).unwrap();
        let inv0 = invert_mode_covariance_first_order(&st0);
        let exact0 = st0.sigma_tilde.clone().try_inverse().unwrap();
        assert!((&inv0 - &exact0).amax() < 1e-12 * exact0.amax());

        // The second-order constant grows with squeezing; a weakly squeezed
        // probe keeps it below 10.
        let n = b.len();
        let weak = standard_probe(1.0, 0.75, None).unwrap();
        for dw in [1e-2, 1e-3] {
            rx.delta_omega = dw;
            let st = mode_basis_covariance(&weak, &b, &rx).unwrap();
            let inv = invert_mode_covariance_first_order(&st);
            let resid = (&st.sigma_tilde * &inv - DMatrix::identity(n, n)).amax();
            assert!(resid < 10.0 * dw * dw, "δω={dw}: residual {resid}");
            let dense = st.sigma_tilde.clone().try_inverse().unwrap();
            assert!((&inv - &dense).amax() < 10.0 * dw * dw * dense.amax());
        }

        // Strong squeezing: still second order, i.e. a tenfold smaller δω
        // gives a hundredfold smaller residual.
        let resid = |dw: f64| {
            let mut r = rx;
            r.delta_omega = dw;
            let st = mode_basis_covariance(&spec, &b, &r).unwrap();
            (&st.sigma_tilde * invert_mode_covariance_first_order(&st) - DMatrix::identity(n, n)).amax()
        };
        let ratio = resid(1e-3) / resid(1e-2);
        assert!((ratio - 1e-2).abs() < 2e-3, "ratio {ratio}");
    }

    #[test]
    fn loss_affine_law() {
        let spec = standard_probe(20.0, 0.6, None).unwrap();
        let (b, mut rx) = default_setup(&spec);
        rx.delta_omega = 0.3;
        rx.delta_theta = 0.1;
        let full = gaussian_stats(&spec, &b, &rx).unwrap();
        let floor = DMatrix::from_diagonal_element(100, 100, 0.5 / rx.grid.dt);
        for kappa in [0.0, 0.2, 0.55, 0.9] {
            rx.kappa = kappa;
            let lossy = gaussian_stats(&spec, &b, &rx).unwrap();
            let predicted = (&full.sigma - &floor) * kappa + &floor;
            assert!((&lossy.sigma - predicted).amax() < 1e-12);
            assert!((&lossy.mu - &full.mu * kappa.sqrt()).amax() < 1e-12);
        }
    }

    #[test]
    fn vacuum_occupations_change_nothing() {
        let spec = standard_probe(20.0, 0.6, None).unwrap();
        let mut padded = spec.clone();
        padded.occupations.push(ModeOccupation::squeezed(4, 0.0, 1.0));
        let (b, mut rx) = default_setup(&spec);
        rx.delta_theta = 0.2;
        assert_eq!(gaussian_stats(&spec, &b, &rx).unwrap(), gaussian_stats(&padded, &b, &rx).unwrap());
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = standard_probe(10.0, 0.5, None).unwrap();
        let (b, rx) = default_setup(&spec);
        let st = gaussian_stats(&spec, &b, &rx).unwrap();
        let a = sample_traces(&st, 20, 7).unwrap();
        let c = sample_traces(&st, 20, 7).unwrap();
        assert_eq!(a, c);
        assert_ne!(a.draws, sample_traces(&st, 20, 8).unwrap().draws);
        let s1 = sample_traces_sharded(&st, 21, 7, 4).unwrap();
        let s2 = sample_traces_sharded(&st, 21, 7, 4).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.draws.nrows(), 21);
    }

    #[test]
    fn vacuum_sample_moments() {
        let spec = StateSpec::vacuum();
        let b = ModeBasis::new(ModeParams::default(), 3).unwrap();
        let rx = ReceiverSetup::homodyne(TimeGrid::new(-2.0, 0.2, 20).unwrap());
        let st = gaussian_stats(&spec, &b, &rx).unwrap();
        let m = 100_000;
        let s = sample_traces_sharded(&st, m, 11, 4).unwrap();
        let var = 0.5 / rx.grid.dt;
        let se_mean = (var / m as f64).sqrt();
        let se_var = var * (2.0 / m as f64).sqrt();
        for j in 0..20 {
            let col = s.draws.column(j);
            let mean = col.mean();
            let v = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            assert!(mean.abs() < 5.0 * se_mean);
            assert!((v - var).abs() < 5.0 * se_var);
        }
    }

    #[test]
    fn export_writes_both_files() {
        let spec = standard_probe(10.0, 0.5, None).unwrap();
        let (b, rx) = default_setup(&spec);
        let st = gaussian_stats(&spec, &b, &rx).unwrap();
        let dir = tempfile::tempdir().unwrap();
        st.export_csv(dir.path()).unwrap();
        let mean = std::fs::read_to_string(dir.path().join("mean.csv")).unwrap();
        assert!(mean.starts_with("index,t,mu\n0,"));
        assert_eq!(mean.lines().count(), 101);
        let cov = std::fs::read_to_string(dir.path().join("cov.csv")).unwrap();
        assert_eq!(cov.lines().count(), 1 + 100 * 101 / 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn covariance_symmetric_psd(r0 in 0.0f64..2.0, r1 in 0.0f64..2.0, phi in -3.0f64..3.0,
                                    dw in -2.0f64..2.0, dth in -1.0f64..1.0, kappa in 0.0f64..=1.0) {
            let spec = StateSpec::new(vec![
                ModeOccupation::squeezed(0, r0, phi),
                ModeOccupation::squeezed(2, r1, -phi),
            ]).unwrap();
            let b = ModeBasis::new(ModeParams::default(), 6).unwrap();
            let rx = ReceiverSetup { delta_omega: dw, delta_theta: dth, kappa, grid: TimeGrid::default_for(&b.params) };
            let s = covariance_matrix(&spec, &b, &rx).unwrap();
            prop_assert!((&s - s.transpose()).amax() <= 1e-12 * s.amax());
            let floor = (1.0 - kappa) / (2.0 * rx.grid.dt);
            let shifted = &s - DMatrix::from_diagonal_element(100, 100, floor);
            let min = shifted.symmetric_eigenvalues().min();
            prop_assert!(min >= -1e-9 * s.amax(), "min eigenvalue {}", min);
        }
    }
}
