//! Pulsed dynamics of the four-level model.
//!
//! A pulse program is a sequence of detuning-trajectory segments —
//! linear ramps, constant dwells, and microwave bursts with Gaussian
//! edges. Evolution is full 4×4 lab-frame integration (fixed-step RK4,
//! step ≤ 1/(40·f_max)), with an optional Lindblad relaxation channel
//! between the two lowest instantaneous eigenstates and quasistatic
//! Gaussian detuning noise averaged over per-shot realizations.
//!
//! Scan entry points ([`scans::rabi_scan`], [`scans::ramsey_scan`],
//! [`scans::tomography_scan`]) integrate pure states: over the
//! nanosecond-scale scan durations the relaxation probability is
//! bounded by Γ_max·τ ≲ 1e-3 at the default operating point, far below
//! every scan observable's tolerance. The general [`evolve`] entry
//! point and the ramp budget integrate the density matrix with the
//! relaxation channel active.

mod budget;
mod integrator;
pub mod scans;

pub use budget::{ramp_error_budget, RampBudget, RampSpec};
pub use integrator::evolve;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{levels, ModelParams};

/// Gaussian-edge half-width in units of sigma: edges are centered
/// `EDGE_K`·σ inside the segment so the envelope starts/ends at 1% of
/// peak before offset removal (and exactly 0 after).
pub const EDGE_K: f64 = 3.034_854_258_770_293; // sqrt(2 ln 100)

/// Quasistatic detuning-noise amplitude (h·GHz) calibrated so the
/// Ramsey envelope 1/e time at the default operating point is 7 ns.
/// Output of [`scans::calibrate_sigma_eps`] with default geometry.
pub const SIGMA_EPS_CALIBRATED: f64 = 0.5745;

/// One detuning-trajectory segment. Times in ns, energies in h·GHz,
/// frequencies in GHz, phases in rad.
///
/// Burst drive: ε(t) = eps_center + a_eps·env(t)·cos(2π f_mw t + phi)
/// with t measured from the segment start (the microwave phase is
/// reset at each burst, as for a triggered source).
#[derive(Debug, Clone, PartialEq)]
pub enum PulseSegment {
    Ramp { duration_ns: f64, eps_start_hghz: f64, eps_end_hghz: f64 },
    Dwell { duration_ns: f64, eps_hghz: f64 },
    Burst {
        duration_ns: f64,
        eps_center_hghz: f64,
        a_eps_hghz: f64,
        f_mw_ghz: f64,
        phi_rad: f64,
        edge_sigma_ns: f64,
    },
}

impl PulseSegment {
    pub fn duration_ns(&self) -> f64 {
        match *self {
            PulseSegment::Ramp { duration_ns, .. }
            | PulseSegment::Dwell { duration_ns, .. }
            | PulseSegment::Burst { duration_ns, .. } => duration_ns,
        }
    }

    /// Detuning range visited by the segment (for the step-size rule).
    pub fn eps_range(&self) -> (f64, f64) {
        match *self {
            PulseSegment::Ramp { eps_start_hghz, eps_end_hghz, .. } => (
                eps_start_hghz.min(eps_end_hghz),
                eps_start_hghz.max(eps_end_hghz),
            ),
            PulseSegment::Dwell { eps_hghz, .. } => (eps_hghz, eps_hghz),
            PulseSegment::Burst { eps_center_hghz, a_eps_hghz, .. } => {
                (eps_center_hghz - a_eps_hghz.abs(), eps_center_hghz + a_eps_hghz.abs())
            }
        }
    }

    /// Drive frequency if this is a burst.
    pub fn drive_frequency(&self) -> f64 {
        match *self {
            PulseSegment::Burst { f_mw_ghz, .. } => f_mw_ghz,
            _ => 0.0,
        }
    }

    /// Detuning at local time `t` within the segment.
    pub fn eps_at(&self, t: f64) -> f64 {
        match *self {
            PulseSegment::Ramp { duration_ns, eps_start_hghz, eps_end_hghz } => {
                eps_start_hghz + (eps_end_hghz - eps_start_hghz) * t / duration_ns
            }
            PulseSegment::Dwell { eps_hghz, .. } => eps_hghz,
            PulseSegment::Burst {
                duration_ns,
                eps_center_hghz,
                a_eps_hghz,
                f_mw_ghz,
                phi_rad,
                edge_sigma_ns,
            } => {
                let env = envelope(t, duration_ns, edge_sigma_ns);
                eps_center_hghz
                    + a_eps_hghz
                        * env
                        * (2.0 * std::f64::consts::PI * f_mw_ghz * t + phi_rad).cos()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_ns() > 0.0) {
            return Err(Error::Invalid("segment duration must be > 0".into()));
        }
        if let PulseSegment::Burst { duration_ns, edge_sigma_ns, .. } = *self {
            if !(edge_sigma_ns >= 0.0) {
                return Err(Error::Invalid("edge_sigma_ns must be >= 0".into()));
            }
            if edge_sigma_ns > 0.0 {
                // boundary envelope is 0.01 of raw peak before offset removal
                // and identically 0 after; assert the contract numerically
                let b0 = envelope(0.0, duration_ns, edge_sigma_ns);
                let b1 = envelope(duration_ns, duration_ns, edge_sigma_ns);
                if b0 > 0.01 || b1 > 0.01 {
                    return Err(Error::Invalid("burst envelope exceeds 1% at boundary".into()));
                }
            }
        }
        Ok(())
    }
}

// Serialized as a flat record with a "kind" discriminator. Deserialize
// is hand-written so unknown keys inside each variant are rejected
// (serde's derive cannot combine an internal tag with
// deny_unknown_fields).
impl Serialize for PulseSegment {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = ser.serialize_map(None)?;
        match *self {
            PulseSegment::Ramp { duration_ns, eps_start_hghz, eps_end_hghz } => {
                m.serialize_entry("kind", "ramp")?;
                m.serialize_entry("duration_ns", &duration_ns)?;
                m.serialize_entry("eps_start_hghz", &eps_start_hghz)?;
                m.serialize_entry("eps_end_hghz", &eps_end_hghz)?;
            }
            PulseSegment::Dwell { duration_ns, eps_hghz } => {
                m.serialize_entry("kind", "dwell")?;
                m.serialize_entry("duration_ns", &duration_ns)?;
                m.serialize_entry("eps_hghz", &eps_hghz)?;
            }
            PulseSegment::Burst {
                duration_ns,
                eps_center_hghz,
                a_eps_hghz,
                f_mw_ghz,
                phi_rad,
                edge_sigma_ns,
            } => {
                m.serialize_entry("kind", "burst")?;
                m.serialize_entry("duration_ns", &duration_ns)?;
                m.serialize_entry("eps_center_hghz", &eps_center_hghz)?;
                m.serialize_entry("a_eps_hghz", &a_eps_hghz)?;
                m.serialize_entry("f_mw_ghz", &f_mw_ghz)?;
                m.serialize_entry("phi_rad", &phi_rad)?;
                m.serialize_entry("edge_sigma_ns", &edge_sigma_ns)?;
            }
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for PulseSegment {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RampRec {
            duration_ns: f64,
            eps_start_hghz: f64,
            eps_end_hghz: f64,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct DwellRec {
            duration_ns: f64,
            eps_hghz: f64,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct BurstRec {
            duration_ns: f64,
            eps_center_hghz: f64,
            a_eps_hghz: f64,
            f_mw_ghz: f64,
            #[serde(default)]
            phi_rad: f64,
            #[serde(default)]
            edge_sigma_ns: f64,
        }

        let mut value = serde_json::Map::deserialize(de)?;
        let kind = value
            .remove("kind")
            .and_then(|v| v.as_str().map(str::to_owned))
            .ok_or_else(|| D::Error::custom("segment record needs a string \"kind\""))?;
        let rest = serde_json::Value::Object(value);
        match kind.as_str() {
            "ramp" => {
                let r: RampRec = serde_json::from_value(rest).map_err(D::Error::custom)?;
                Ok(PulseSegment::Ramp {
                    duration_ns: r.duration_ns,
                    eps_start_hghz: r.eps_start_hghz,
                    eps_end_hghz: r.eps_end_hghz,
                })
            }
            "dwell" => {
                let r: DwellRec = serde_json::from_value(rest).map_err(D::Error::custom)?;
                Ok(PulseSegment::Dwell { duration_ns: r.duration_ns, eps_hghz: r.eps_hghz })
            }
            "burst" => {
                let r: BurstRec = serde_json::from_value(rest).map_err(D::Error::custom)?;
                Ok(PulseSegment::Burst {
                    duration_ns: r.duration_ns,
                    eps_center_hghz: r.eps_center_hghz,
                    a_eps_hghz: r.a_eps_hghz,
                    f_mw_ghz: r.f_mw_ghz,
                    phi_rad: r.phi_rad,
                    edge_sigma_ns: r.edge_sigma_ns,
                })
            }
            other => Err(D::Error::custom(format!("unknown segment kind \"{other}\""))),
        }
    }
}

/// Flat-top envelope with Gaussian rise/fall.
///
/// The edge centers sit `EDGE_K`·σ inside the segment (fixed edge
/// shape, independent of duration), the raw Gaussian value at the
/// boundary (1%) is subtracted, and the result rescaled, so the
/// envelope is exactly 0 at t = 0 and t = τ and reaches 1 on the flat
/// top of long pulses. σ ≤ 0 gives a rectangular envelope.
pub fn envelope(t: f64, tau: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 1.0;
    }
    let te = EDGE_K * sigma;
    let b = 0.01; // exp(-EDGE_K²/2)
    let rise = if t < te { (-(t - te) * (t - te) / (2.0 * sigma * sigma)).exp() } else { 1.0 };
    let fall = if t > tau - te {
        (-(t - (tau - te)) * (t - (tau - te)) / (2.0 * sigma * sigma)).exp()
    } else {
        1.0
    };
    ((rise.min(fall) - b) / (1.0 - b)).max(0.0)
}

/// Quasistatic-noise and relaxation model for pulse programs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Std. dev. of the per-shot detuning offset, h·GHz.
    pub sigma_eps_quasistatic_hghz: f64,
    /// (eps h·GHz, T1 ns) knots, strictly increasing in eps;
    /// interpolated log-linearly.
    pub t1_table: Vec<(f64, f64)>,
    /// Number of quasistatic realizations to average.
    pub n_realizations: u32,
    /// Master seed for realization streams.
    pub seed: u64,
}

/// Default T1(ε) profile: hot spot of 20 ns near the anticrossing,
/// rising past 100 μs at the measurement point.
pub fn default_t1_table() -> Vec<(f64, f64)> {
    vec![
        (-300.0, 3e6),
        (-50.0, 1e6),
        (-20.0, 1e4),
        (-5.0, 20.0),
        (5.0, 1e3),
        (20.0, 2e4),
        (60.0, 1.02e5),
        (300.0, 2e5),
    ]
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            sigma_eps_quasistatic_hghz: SIGMA_EPS_CALIBRATED,
            t1_table: default_t1_table(),
            n_realizations: 1,
            seed: 0,
        }
    }
}

impl NoiseModel {
    /// Noise-free model (no detuning offsets, default T1 profile).
    pub fn noiseless() -> Self {
        NoiseModel { sigma_eps_quasistatic_hghz: 0.0, ..NoiseModel::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_eps_quasistatic_hghz >= 0.0) {
            return Err(Error::Invalid("sigma_eps_quasistatic_hghz must be >= 0".into()));
        }
        if self.n_realizations < 1 {
            return Err(Error::Invalid("n_realizations must be >= 1".into()));
        }
        if self.t1_table.is_empty() {
            return Err(Error::Invalid("t1_table must not be empty".into()));
        }
        for (i, pair) in self.t1_table.iter().enumerate() {
            if !(pair.1 > 0.0) {
                return Err(Error::Invalid(format!("t1_table entry {i}: T1 must be > 0")));
            }
        }
        if self.t1_table.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::Invalid("t1_table eps values must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Per-shot detuning offsets for `n_realizations` streams.
    pub fn offsets(&self) -> Vec<f64> {
        if self.sigma_eps_quasistatic_hghz == 0.0 {
            return vec![0.0];
        }
        (0..self.n_realizations)
            .map(|r| {
                let mut rng = crate::rng::stream(self.seed, u64::from(r), crate::rng::STREAM_PULSE);
                self.sigma_eps_quasistatic_hghz * crate::rng::normal(&mut rng)
            })
            .collect()
    }
}

/// Log-linear interpolation of a T1 table.
///
/// With `extrapolate`, queries outside the knot hull clamp to the edge
/// values; otherwise they are a range error.
pub fn t1_profile_eval(table: &[(f64, f64)], eps: f64, extrapolate: bool) -> Result<f64> {
    let (first, last) = (table[0], table[table.len() - 1]);
    if eps < first.0 || eps > last.0 {
        if !extrapolate {
            return Err(Error::Range(format!(
                "eps {eps} outside t1_table hull [{}, {}]",
                first.0, last.0
            )));
        }
        return Ok(if eps < first.0 { first.1 } else { last.1 });
    }
    let k = table.partition_point(|&(e, _)| e <= eps);
    if k == 0 {
        return Ok(first.1);
    }
    if k == table.len() {
        return Ok(last.1);
    }
    let (e0, t0) = table[k - 1];
    let (e1, t1) = table[k];
    let w = (eps - e0) / (e1 - e0);
    Ok((t0.ln() + w * (t1.ln() - t0.ln())).exp())
}

/// Density-matrix state of the four-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    pub rho: Matrix4<Complex64>,
}

impl QubitState {
    /// Pure eigenstate `k` of H(eps).
    pub fn eigenstate(eps: f64, k: usize, params: &ModelParams) -> Self {
        let l = levels(eps, params);
        let v = l.eigenvectors.column(k);
        let mut rho = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                rho[(i, j)] = Complex64::new(v[i] * v[j], 0.0);
            }
        }
        QubitState { rho }
    }

    /// Pure state from a complex amplitude vector (normalized here).
    pub fn from_vector(psi: &Vector4<Complex64>) -> Self {
        let n = psi.norm();
        let psi = psi / Complex64::new(n, 0.0);
        let mut rho = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                rho[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        QubitState { rho }
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.rho[(i, i)].re).sum()
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    /// Population of eigenstate `k` of H(eps).
    pub fn population(&self, eps: f64, k: usize, params: &ModelParams) -> f64 {
        let l = levels(eps, params);
        let v = l.eigenvectors.column(k);
        let mut p = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                p += Complex64::new(v[i] * v[j], 0.0) * self.rho[(j, i)];
            }
        }
        p.re
    }

    /// Check trace, Hermiticity and positivity contracts.
    pub fn validate(&self) -> Result<()> {
        if (self.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::Numerical(format!("trace(rho) = {} != 1", self.trace())));
        }
        let herm = (self.rho - self.rho.adjoint()).norm();
        if herm > 1e-12 {
            return Err(Error::Numerical(format!("rho not Hermitian: {herm}")));
        }
        let eig = self.rho.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(Error::Numerical(format!("rho has eigenvalue {min} < 0")));
        }
        Ok(())
    }
}

/// 1D scan output: axis values and excited-state probability.
#[derive(Debug, Clone, Serialize)]
pub struct Scan1D {
    pub axis: Vec<f64>,
    pub p1: Vec<f64>,
}

/// Clip tiny numerical excursions outside [0, 1].
pub(crate) fn clip01(p: f64) -> f64 {
    debug_assert!(p > -1e-6 && p < 1.0 + 1e-6, "P1 = {p} far outside [0,1]");
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn envelope_boundary_and_flat_top() {
        for tau in [1.0, 2.0, 5.0, 20.0, 200.0] {
            assert_eq!(envelope(0.0, tau, 0.6), 0.0);
            assert_abs_diff_eq!(envelope(tau, tau, 0.6), 0.0, epsilon = 1e-15);
        }
        // long pulse reaches full amplitude on the flat top
        assert_eq!(envelope(10.0, 20.0, 0.6), 1.0);
        // rectangular when sigma = 0
        assert_eq!(envelope(0.0, 5.0, 0.0), 1.0);
        // 10–90% rise time about 1 ns at sigma = 0.6
        let mut t10 = 0.0;
        let mut t90 = 0.0;
        for i in 0..4000 {
            let t = i as f64 * 1e-3;
            let e = envelope(t, 40.0, 0.6);
            if e < 0.1 {
                t10 = t;
            }
            if e < 0.9 {
                t90 = t;
            }
        }
        assert_relative_eq!(t90 - t10, 1.0, max_relative = 0.1);
    }

    #[test]
    fn envelope_short_pulse_suppressed() {
        // for tau = 1 ns the edges overlap and the peak is well below 1
        let peak = (0..100)
            .map(|i| envelope(i as f64 * 0.01, 1.0, 0.6))
            .fold(0.0f64, f64::max);
        assert!(peak < 0.1, "peak {peak}");
    }

    #[test]
    fn t1_interpolation() {
        let table = default_t1_table();
        // knots are exact
        for &(e, t) in &table {
            assert_relative_eq!(t1_profile_eval(&table, e, false).unwrap(), t, max_relative = 1e-12);
        }
        // log-midpoint of (100, 10000) is 1000
        let tab = vec![(0.0, 100.0), (10.0, 10000.0)];
        assert_relative_eq!(t1_profile_eval(&tab, 5.0, false).unwrap(), 1000.0, max_relative = 1e-12);
        // hull behavior
        assert!(t1_profile_eval(&tab, -1.0, false).is_err());
        assert_eq!(t1_profile_eval(&tab, -1.0, true).unwrap(), 100.0);
        assert_eq!(t1_profile_eval(&tab, 11.0, true).unwrap(), 10000.0);
    }

    #[test]
    fn segment_serde_round_trip() {
        let segs = vec![
            PulseSegment::Ramp { duration_ns: 60.0, eps_start_hghz: 60.0, eps_end_hghz: -40.0 },
            PulseSegment::Dwell { duration_ns: 5.0, eps_hghz: -40.0 },
            PulseSegment::Burst {
                duration_ns: 5.6,
                eps_center_hghz: -40.0,
                a_eps_hghz: 2.0,
                f_mw_ghz: 1.6133,
                phi_rad: 0.0,
                edge_sigma_ns: 0.6,
            },
        ];
        let json = serde_json::to_string(&segs).unwrap();
        assert!(json.contains("\"kind\":\"ramp\""));
        let back: Vec<PulseSegment> = serde_json::from_str(&json).unwrap();
        assert_eq!(segs, back);

        // unknown keys inside a record are rejected
        let bad = r#"{"kind":"dwell","duration_ns":1.0,"eps_hghz":0.0,"bogus":3}"#;
        assert!(serde_json::from_str::<PulseSegment>(bad).is_err());
        let bad_kind = r#"{"kind":"chirp","duration_ns":1.0}"#;
        assert!(serde_json::from_str::<PulseSegment>(bad_kind).is_err());
    }

    #[test]
    fn segment_validation() {
        assert!(PulseSegment::Dwell { duration_ns: 0.0, eps_hghz: 0.0 }.validate().is_err());
        assert!(PulseSegment::Burst {
            duration_ns: 5.0,
            eps_center_hghz: -40.0,
            a_eps_hghz: 2.0,
            f_mw_ghz: 1.6,
            phi_rad: 0.0,
            edge_sigma_ns: -0.1,
        }
        .validate()
        .is_err());
        assert!(PulseSegment::Burst {
            duration_ns: 8.0,
            eps_center_hghz: -40.0,
            a_eps_hghz: 2.0,
            f_mw_ghz: 1.6,
            phi_rad: 0.3,
            edge_sigma_ns: 0.6,
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn noise_model_validation_and_offsets() {
        assert!(NoiseModel::default().validate().is_ok());
        let mut bad = NoiseModel::default();
        bad.t1_table[2].1 = -5.0;
        assert!(bad.validate().is_err());
        let mut unsorted = NoiseModel::default();
        unsorted.t1_table.swap(0, 1);
        assert!(unsorted.validate().is_err());
        let mut zero = NoiseModel::default();
        zero.n_realizations = 0;
        assert!(zero.validate().is_err());

        let nm =
            NoiseModel { sigma_eps_quasistatic_hghz: 1.0, n_realizations: 5, ..Default::default() };
        let a = nm.offsets();
        let b = nm.offsets();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(NoiseModel::noiseless().offsets() == vec![0.0]);
    }

    #[test]
    fn qubit_state_contracts() {
        let p = ModelParams::default();
        let s = QubitState::eigenstate(-40.0, 0, &p);
        s.validate().unwrap();
        assert_abs_diff_eq!(s.purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.population(-40.0, 0, &p), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.population(-40.0, 1, &p), 0.0, epsilon = 1e-12);
    }
}
