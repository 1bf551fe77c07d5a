//! Multimode displaced-squeezed probe states and their resources.
//!
//! Mode `n` of the probe is `D(α_n) S(r_n e^{iφ_n}) |0⟩`; modes that are not
//! listed are in vacuum.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{envelopes_at, ModeBasis};

/// State of a single temporal mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "OccupationRecord", into = "OccupationRecord")]
pub struct ModeOccupation {
    pub n: usize,
    pub alpha: Complex64,
    pub r: f64,
    pub phi: f64,
}

#[derive(Serialize, Deserialize)]
struct OccupationRecord {
    n: usize,
    #[serde(default)]
    alpha_re: f64,
    #[serde(default)]
    alpha_im: f64,
    #[serde(default)]
    r: f64,
    #[serde(default)]
    phi: f64,
}

impl From<OccupationRecord> for ModeOccupation {
    fn from(o: OccupationRecord) -> Self {
        Self { n: o.n, alpha: Complex64::new(o.alpha_re, o.alpha_im), r: o.r, phi: o.phi }
    }
}

impl From<ModeOccupation> for OccupationRecord {
    fn from(o: ModeOccupation) -> Self {
        Self { n: o.n, alpha_re: o.alpha.re, alpha_im: o.alpha.im, r: o.r, phi: o.phi }
    }
}

impl ModeOccupation {
    pub fn coherent(n: usize, alpha: Complex64) -> Self {
        Self { n, alpha, r: 0.0, phi: 0.0 }
    }

    pub fn squeezed(n: usize, r: f64, phi: f64) -> Self {
        Self { n, alpha: Complex64::new(0.0, 0.0), r, phi }
    }

    /// Mean photon number from squeezing, `sinh² r`.
    pub fn squeezed_photons(&self) -> f64 {
        self.r.sinh().powi(2)
    }

    pub fn is_vacuum(&self) -> bool {
        self.r == 0.0 && self.alpha.norm_sqr() == 0.0
    }
}

/// Sparse list of mode occupations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub occupations: Vec<ModeOccupation>,
}

impl StateSpec {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn new(occupations: Vec<ModeOccupation>) -> Result<Self> {
        let s = Self { occupations };
        s.validate()?;
        Ok(s)
    }

    /// Coherent pulse in a single mode carrying `n_photons`.
    pub fn coherent(mode: usize, n_photons: f64) -> Result<Self> {
        if !(n_photons >= 0.0 && n_photons.is_finite()) {
            return Err(Error::InvalidParameter(format!("photon number must be ≥ 0, got {n_photons}")));
        }
        Self::new(vec![ModeOccupation::coherent(mode, Complex64::new(n_photons.sqrt(), 0.0))])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for o in &self.occupations {
            if !seen.insert(o.n) {
                return Err(Error::InvalidParameter(format!("mode {} listed twice", o.n)));
            }
            if !(o.alpha.re.is_finite() && o.alpha.im.is_finite() && o.r.is_finite() && o.phi.is_finite()) {
                return Err(Error::InvalidParameter(format!("mode {} has non-finite entries", o.n)));
            }
            if o.r < 0.0 {
                return Err(Error::InvalidParameter(format!("mode {} has r = {} < 0", o.n, o.r)));
            }
        }
        Ok(())
    }

    /// Highest mode index carrying any excitation.
    pub fn highest_populated(&self) -> Option<usize> {
        self.occupations.iter().filter(|o| !o.is_vacuum()).map(|o| o.n).max()
    }

    pub fn is_vacuum(&self) -> bool {
        self.highest_populated().is_none()
    }

    pub fn has_squeezing(&self) -> bool {
        self.occupations.iter().any(|o| o.r > 0.0)
    }

    pub fn get(&self, n: usize) -> Option<&ModeOccupation> {
        self.occupations.iter().find(|o| o.n == n)
    }

    /// Dense displacement and squeezing arrays of length `len`.
    pub fn dense(&self, len: usize) -> Result<DenseState> {
        if let Some(h) = self.highest_populated() {
            if h >= len {
                return Err(Error::Truncation { k: h, needed: h, n_max: len.saturating_sub(1) });
            }
        }
        let mut d = DenseState {
            alpha: vec![Complex64::new(0.0, 0.0); len],
            r: vec![0.0; len],
            phi: vec![0.0; len],
        };
        for o in self.occupations.iter().filter(|o| o.n < len) {
            d.alpha[o.n] = o.alpha;
            d.r[o.n] = o.r;
            d.phi[o.n] = o.phi;
        }
        Ok(d)
    }

    /// Basis of the default size for this state.
    pub fn default_basis(&self, params: crate::modes::ModeParams) -> Result<ModeBasis> {
        ModeBasis::for_highest(params, self.highest_populated().unwrap_or(0))
    }
}

/// Per-mode arrays over `0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    pub alpha: Vec<Complex64>,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Mean photon numbers of a probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonBudget {
    pub total: f64,
    pub coherent: f64,
    pub squeezed: f64,
}

/// `(N_total, N_coh, N_sq)`.
pub fn photon_budget(spec: &StateSpec) -> PhotonBudget {
    let coherent: f64 = spec.occupations.iter().map(|o| o.alpha.norm_sqr()).sum();
    let squeezed: f64 = spec.occupations.iter().map(|o| o.squeezed_photons()).sum();
    PhotonBudget { total: coherent + squeezed, coherent, squeezed }
}

/// Photon numbers together with RMS duration and bandwidth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceBudget {
    pub n_total: f64,
    pub n_coh: f64,
    pub n_sq: f64,
    pub delta_t: f64,
    pub delta_omega: f64,
}

pub fn resource_budget(spec: &StateSpec, basis: &ModeBasis) -> Result<ResourceBudget> {
    let b = photon_budget(spec);
    let (delta_t, delta_omega) = duration_bandwidth(spec, basis)?;
    Ok(ResourceBudget { n_total: b.total, n_coh: b.coherent, n_sq: b.squeezed, delta_t, delta_omega })
}

/// Moments of the displacement signal `s(t) = Σ α_n φ̄_n(t)`, by quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalMoments {
    /// `∫ |s|²`
    pub energy: f64,
    /// `∫ (t-τ) |s|²`
    pub first: f64,
    /// `∫ (t-τ)² |s|²`
    pub second: f64,
    /// `∫ |∂_t s|²`, derivative of the envelope only.
    pub slope: f64,
}

/// Midpoint quadrature of the displacement signal's time and frequency moments.
pub fn signal_moments(spec: &StateSpec, basis: &ModeBasis) -> Result<SignalMoments> {
    let dense = spec.dense(basis.len())?;
    let p = &basis.params;
    let top = spec.highest_populated().unwrap_or(0);
    let half = (12.0 + 2.0 * (2.0 * top as f64 + 1.0).sqrt()) / p.sigma;
    let dt = 0.01 / p.sigma;
    let steps = (2.0 * half / dt).ceil() as usize;
    let n_eval = (top + 1).min(basis.len() - 1) + 1;
    let mut m = SignalMoments { energy: 0.0, first: 0.0, second: 0.0, slope: 0.0 };
    for s in 0..steps {
        let x = -half + (s as f64 + 0.5) * dt;
        let e = envelopes_at(p.tau + x, p, n_eval);
        let mut sig = Complex64::new(0.0, 0.0);
        let mut der = Complex64::new(0.0, 0.0);
        for n in 0..=top.min(basis.n_max) {
            let a = dense.alpha[n];
            if a.norm_sqr() == 0.0 {
                continue;
            }
            sig += a * e[n];
            // ∂_t φ̄_n = (σ/2)(√n φ̄_{n-1} - √(n+1) φ̄_{n+1})
            let lower = if n > 0 { (n as f64).sqrt() * e[n - 1] } else { 0.0 };
            let upper = ((n + 1) as f64).sqrt() * e[n + 1];
            der += a * (0.5 * p.sigma * (lower - upper));
        }
        let w = sig.norm_sqr() * dt;
        m.energy += w;
        m.first += x * w;
        m.second += x * x * w;
        m.slope += der.norm_sqr() * dt;
    }
    Ok(m)
}

/// RMS duration `ΔT` and bandwidth `Δω` of the probe's energy distribution.
///
/// Squeezed photons in mode `n` contribute second moments `(2/σ²)(n+½)` in
/// time and `(σ²/2)(n+½)` in frequency; the displacement signal contributes
/// its quadrature moments. Vacuum returns `(0, 0)`.
pub fn duration_bandwidth(spec: &StateSpec, basis: &ModeBasis) -> Result<(f64, f64)> {
    spec.validate()?;
    let budget = photon_budget(spec);
    if budget.total == 0.0 {
        return Ok((0.0, 0.0));
    }
    let sigma = basis.params.sigma;
    let mut t2 = 0.0;
    let mut w2 = 0.0;
    for o in &spec.occupations {
        let ns = o.squeezed_photons();
        let k = o.n as f64 + 0.5;
        t2 += ns * 2.0 * k / (sigma * sigma);
        w2 += ns * 0.5 * k * sigma * sigma;
    }
    let mut first = 0.0;
    if budget.coherent > 0.0 {
        let m = signal_moments(spec, basis)?;
        t2 += m.second;
        w2 += m.slope;
        first = m.first;
    }
    let delta_t = (t2 / budget.total).sqrt();
    let delta_omega = (w2 / budget.total).sqrt();
    let offset = (first / budget.total).abs();
    let tolerance = 1e-6 * delta_t;
    if offset > tolerance {
        return Err(Error::Centering { offset, tolerance });
    }
    Ok((delta_t, delta_omega))
}

/// Squeezing magnitude for a level in decibels, `10·log₁₀ e^{2r} = dB`.
pub fn squeezing_db_to_r(db: f64) -> f64 {
    db * std::f64::consts::LN_10 / 20.0
}

/// Squeezing magnitude cap for 20 dB per mode.
pub const R_CAP_20DB: f64 = std::f64::consts::LN_10;

/// Angle conventions for the three-mode probe.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVariant {
    /// Squeezing angles `(0, -π/2, 0)` on modes 0,1,2.
    #[default]
    Standard,
    /// Angles `(0, +π/2, 0)`.
    PlusHalfPi,
    /// Angles `(π, -π/2, 0)`.
    Phi0Pi,
    /// Angles `(0, 0, 0)`.
    Phi1Zero,
}

impl ProbeVariant {
    pub fn angles(self) -> [f64; 3] {
        match self {
            ProbeVariant::Standard => [0.0, -FRAC_PI_2, 0.0],
            ProbeVariant::PlusHalfPi => [0.0, FRAC_PI_2, 0.0],
            ProbeVariant::Phi0Pi => [PI, -FRAC_PI_2, 0.0],
            ProbeVariant::Phi1Zero => [0.0, 0.0, 0.0],
        }
    }
}

/// The three-mode probe: modes `K, K+1, K+2` squeezed to the same `r`,
/// the middle one also displaced by `√N_coh e^{-iπ/4}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeBuilder {
    pub variant: ProbeVariant,
    /// Index of the lowest mode (0 for the standard probe).
    pub offset: usize,
    pub r_cap: Option<f64>,
}

impl Default for ProbeBuilder {
    fn default() -> Self {
        Self { variant: ProbeVariant::Standard, offset: 0, r_cap: None }
    }
}

impl ProbeBuilder {
    /// Probe carrying `n` photons with fraction `f_sq` in squeezing. When the
    /// implied `r` exceeds the cap it is clipped and the remaining photons go
    /// to the displacement.
    pub fn build(&self, n: f64, f_sq: f64) -> Result<StateSpec> {
        if !(n.is_finite() && n >= 0.0) {
            return Err(Error::InvalidParameter(format!("photon number must be ≥ 0, got {n}")));
        }
        if !(0.0..=1.0).contains(&f_sq) {
            return Err(Error::InvalidParameter(format!("f_sq must lie in [0, 1], got {f_sq}")));
        }
        if n == 0.0 {
            return Ok(StateSpec::vacuum());
        }
        let mut r = (f_sq * n / 3.0).sqrt().asinh();
        if let Some(cap) = self.r_cap {
            r = r.min(cap);
        }
        let n_coh = (n - 3.0 * r.sinh().powi(2)).max(0.0);
        self.from_parts(r, n_coh)
    }

    /// Probe with squeezing `r` per mode and `n_coh` displacement photons.
    pub fn from_parts(&self, r: f64, n_coh: f64) -> Result<StateSpec> {
        if !(r.is_finite() && r >= 0.0 && n_coh.is_finite() && n_coh >= 0.0) {
            return Err(Error::InvalidParameter(format!("need r ≥ 0 and N_coh ≥ 0, got {r}, {n_coh}")));
        }
        let [p0, p1, p2] = self.variant.angles();
        let k = self.offset;
        let alpha = Complex64::from_polar(n_coh.sqrt(), -FRAC_PI_4);
        StateSpec::new(vec![
            ModeOccupation::squeezed(k, r, p0),
            ModeOccupation { n: k + 1, alpha, r, phi: p1 },
            ModeOccupation::squeezed(k + 2, r, p2),
        ])
    }
}

/// The standard three-mode probe with optional squeezing cap.
pub fn standard_probe(n: f64, f_sq: f64, r_cap: Option<f64>) -> Result<StateSpec> {
    ProbeBuilder { r_cap, ..ProbeBuilder::default() }.build(n, f_sq)
}

/// Squeezing per mode that puts `n_sq` photons into three equally squeezed
/// modes, returned as `r` with `e^{2r} = 1 + 2N_sq/3 + 2√(N_sq/3·(1+N_sq/3))`.
pub fn three_mode_squeezing(n_sq: f64) -> f64 {
    (n_sq / 3.0).sqrt().asinh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::ModeParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn basis_for(spec: &StateSpec) -> ModeBasis {
        spec.default_basis(ModeParams::default()).unwrap()
    }

    #[test]
    fn vacuum_budget() {
        let b = photon_budget(&StateSpec::vacuum());
        assert_eq!((b.total, b.coherent, b.squeezed), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_squeezed_mode_budget() {
        let s = StateSpec::new(vec![ModeOccupation::squeezed(0, 0.5, 0.0)]).unwrap();
        assert_relative_eq!(photon_budget(&s).squeezed, 0.271_540_3, epsilon = 1e-7);
    }

    #[test]
    fn three_mode_budget_identity() {
        let s = standard_probe(40.0, 0.3, None).unwrap();
        let b = photon_budget(&s);
        let r = s.occupations[0].r;
        assert_relative_eq!(b.total, b.coherent + 3.0 * r.sinh().powi(2), epsilon = 1e-12);
        assert_relative_eq!(b.total, 40.0, epsilon = 1e-12);
    }

    #[test]
    fn standard_probe_example() {
        let s = standard_probe(100.0, 0.75, None).unwrap();
        assert_relative_eq!(s.occupations[0].r, 5f64.asinh(), epsilon = 1e-14);
        assert_relative_eq!(5f64.asinh(), 2.3124, epsilon = 1e-4);
        let a = s.get(1).unwrap().alpha;
        assert_relative_eq!(a.norm(), 5.0, epsilon = 1e-12);
        assert_relative_eq!(a.arg(), -FRAC_PI_4, epsilon = 1e-14);
    }

    #[test]
    fn zero_photons_is_vacuum() {
        assert!(standard_probe(0.0, 0.75, None).unwrap().is_vacuum());
        assert!(standard_probe(-1.0, 0.75, None).is_err());
    }

    #[test]
    fn cap_clips_squeezing() {
        let s = standard_probe(1e4, 0.75, Some(R_CAP_20DB)).unwrap();
        assert_eq!(s.occupations[0].r, R_CAP_20DB);
        assert_relative_eq!(photon_budget(&s).total, 1e4, epsilon = 1e-9);
        assert_relative_eq!(squeezing_db_to_r(20.0), 2.302_585, epsilon = 1e-6);
    }

    #[test]
    fn three_mode_time_bandwidth_is_three_halves() {
        for f in [0.0, 0.25, 0.75, 1.0] {
            let s = standard_probe(100.0, f, None).unwrap();
            let (dt, dw) = duration_bandwidth(&s, &basis_for(&s)).unwrap();
            assert_relative_eq!(dt * dt, 3.0, epsilon = 1e-9);
            assert_relative_eq!(dw * dw, 0.75, epsilon = 1e-9);
            assert_relative_eq!(dt * dw, 1.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn coherent_gaussian_is_minimum_uncertainty() {
        let s = StateSpec::coherent(0, 7.0).unwrap();
        let (dt, dw) = duration_bandwidth(&s, &basis_for(&s)).unwrap();
        assert_relative_eq!(dt * dw, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn shifted_probe_product() {
        for k in [1usize, 2, 4] {
            let s = ProbeBuilder { offset: k, ..Default::default() }.build(50.0, 0.5).unwrap();
            let (dt, dw) = duration_bandwidth(&s, &basis_for(&s)).unwrap();
            assert_relative_eq!(dt * dw, k as f64 + 1.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn off_center_signal_is_rejected() {
        // Modes 0 and 1 in phase give an envelope skewed to one side.
        let s = StateSpec::new(vec![
            ModeOccupation::coherent(0, Complex64::new(1.0, 0.0)),
            ModeOccupation::coherent(1, Complex64::new(1.0, 0.0)),
        ])
        .unwrap();
        assert!(matches!(duration_bandwidth(&s, &basis_for(&s)), Err(Error::Centering { .. })));
    }

    #[test]
    fn json_schema() {
        let s = standard_probe(10.0, 0.5, None).unwrap();
        let text = s.to_json();
        assert!(text.starts_with("{\"occupations\":[{\"n\":0,\"alpha_re\":"));
        assert_eq!(StateSpec::from_json(&text).unwrap(), s);
        assert!(StateSpec::from_json(r#"{"occupations":[{"n":0,"r":-1}]}"#).is_err());
        assert!(StateSpec::from_json(r#"{"occupations":[{"n":0},{"n":0}]}"#).is_err());
    }

    proptest! {
        #[test]
        fn budget_survives_round_trip(n in 0.0f64..1e4, f in 0.0f64..=1.0) {
            let s = standard_probe(n, f, None).unwrap();
            let back = StateSpec::from_json(&s.to_json()).unwrap();
            prop_assert_eq!(photon_budget(&back).total.to_bits(), photon_budget(&s).total.to_bits());
        }

        #[test]
        fn uncertainty_relation(a0 in -3.0f64..3.0, a2 in -3.0f64..3.0, r in 0.0f64..1.5, m in 0usize..4) {
            // Modes 0 and 2 with real amplitudes keep the signal centered.
            let s = StateSpec::new(vec![
                ModeOccupation::coherent(0, Complex64::new(a0, 0.0)),
                ModeOccupation::coherent(2, Complex64::new(a2, 0.0)),
                ModeOccupation::squeezed(3 + m, r, 0.3),
            ]).unwrap();
            prop_assume!(!s.is_vacuum());
            let (dt, dw) = duration_bandwidth(&s, &basis_for(&s)).unwrap();
            prop_assert!(dt * dw >= 0.5 - 1e-9);
        }
    }
}
