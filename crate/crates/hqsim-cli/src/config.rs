//! One JSON configuration file drives every command. Sections are
//! optional and default to the fitted device parameters; unknown keys
//! anywhere are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use hqsim_core::error::{Error, Result};
use hqsim_core::fci::FciConfig;
use hqsim_core::model::ModelParams;
use hqsim_core::pulse::NoiseModel;
use hqsim_core::readout::TraceConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    /// Master seed for stochastic commands; `--seed` overrides it.
    pub seed: u64,
    /// Artifact directory; `--out` overrides it.
    pub out_dir: String,
    pub model: ModelParams,
    pub noise: NoiseModel,
    pub sensor: TraceConfig,
    pub spectrum: SpectrumConfig,
    pub rabi: RabiConfig,
    pub ramsey: RamseyConfig,
    pub tomo: TomoConfig,
    pub traces: TracesConfig,
    pub fidelity: FidelityConfig,
    pub fci: FciConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            seed: 0,
            out_dir: "out".into(),
            model: ModelParams::default(),
            noise: NoiseModel::default(),
            sensor: TraceConfig::default(),
            spectrum: SpectrumConfig::default(),
            rabi: RabiConfig::default(),
            ramsey: RamseyConfig::default(),
            tomo: TomoConfig::default(),
            traces: TracesConfig::default(),
            fidelity: FidelityConfig::default(),
            fci: FciConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub eps_min_hghz: f64,
    pub eps_max_hghz: f64,
    pub n_points: usize,
    /// When set, the summary reports a detuning with this qubit
    /// splitting, found by bisection.
    pub target_splitting_ghz: Option<f64>,
    /// Bisection bracket for the target search; defaults to
    /// (eps_min, grid argmin of the splitting).
    pub target_bracket_hghz: Option<(f64, f64)>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            eps_min_hghz: -300.0,
            eps_max_hghz: 100.0,
            n_points: 801,
            target_splitting_ghz: None,
            target_bracket_hghz: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiConfig {
    /// Operating detuning, h·GHz.
    pub eps_op_hghz: f64,
    /// Drive frequency, GHz; `null` = resonant with the qubit
    /// splitting at the operating point.
    pub f_mw_ghz: Option<f64>,
    /// Burst-length grid, ns.
    pub tau_min_ns: f64,
    pub tau_max_ns: f64,
    pub n_tau: usize,
    /// Drive amplitudes, h·GHz (one chevron row each).
    pub amplitudes_hghz: Vec<f64>,
    /// Gaussian edge width of the burst envelope, ns.
    pub edge_sigma_ns: f64,
    /// Apply the quasistatic/relaxation noise model (the chevron is
    /// normally run noise-free).
    pub use_noise: bool,
}

impl Default for RabiConfig {
    fn default() -> Self {
        RabiConfig {
            eps_op_hghz: -40.0,
            f_mw_ghz: None,
            tau_min_ns: 0.4,
            tau_max_ns: 26.0,
            n_tau: 52,
            amplitudes_hghz: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            edge_sigma_ns: 0.6,
            use_noise: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseyConfig {
    /// Operating detuning where the π/2 pulses are applied, h·GHz.
    pub eps_op_hghz: f64,
    /// Calibration drive amplitude for the π/2 pulse, h·GHz.
    pub a_cal_hghz: f64,
    /// Drive frequency, GHz; `null` = resonant at the operating point.
    pub f_mw_ghz: Option<f64>,
    /// Probe detunings visited during the free-evolution delay, h·GHz.
    pub eps_probe_hghz: Vec<f64>,
    /// Uniform delay grid, ns.
    pub te_min_ns: f64,
    pub te_step_ns: f64,
    pub n_te: usize,
    /// Detuning ramp time to/from the probe point, ns.
    pub t_ramp_ns: f64,
    pub edge_sigma_ns: f64,
    /// Average the fringes over quasistatic noise realizations.
    pub use_noise: bool,
}

impl Default for RamseyConfig {
    fn default() -> Self {
        RamseyConfig {
            eps_op_hghz: -40.0,
            a_cal_hghz: 2.0,
            f_mw_ghz: None,
            eps_probe_hghz: vec![-300.0, -150.0, -80.0, -50.0, -40.0, -30.0],
            te_min_ns: 0.0,
            te_step_ns: 0.1,
            n_te: 128,
            t_ramp_ns: 1.5,
            edge_sigma_ns: 0.6,
            use_noise: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomoConfig {
    pub eps_op_hghz: f64,
    pub a_cal_hghz: f64,
    pub f_mw_ghz: Option<f64>,
    /// Number of analysis phases over one turn.
    pub n_phi: usize,
    pub edge_sigma_ns: f64,
}

impl Default for TomoConfig {
    fn default() -> Self {
        TomoConfig {
            eps_op_hghz: -40.0,
            a_cal_hghz: 2.0,
            f_mw_ghz: None,
            n_phi: 64,
            edge_sigma_ns: 0.6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TracesConfig {
    pub n_traces: usize,
    /// True excited-state probability of each shot.
    pub p1_true: f64,
    /// How many individual traces to also export as CSV.
    pub n_csv: usize,
}

impl Default for TracesConfig {
    fn default() -> Self {
        TracesConfig { n_traces: 64, p1_true: 0.5, n_csv: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FidelityConfig {
    pub n_traces: usize,
    pub p1_true: f64,
    /// Also fit tunnel times on the batch.
    pub fit_tunnel_times: bool,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        FidelityConfig { n_traces: 8000, p1_true: 0.5, fit_tunnel_times: true }
    }
}

/// Parse a config file with a strict schema.
pub fn load(path: impl AsRef<Path>) -> Result<AppConfig> {
    let body = std::fs::read_to_string(path)?;
    serde_json::from_str(&body).map_err(|e| Error::Invalid(e.to_string()))
}

/// Full schema and physical-range validation without running anything.
/// An empty list means the configuration is valid.
pub fn diagnostics(cfg: &AppConfig) -> Vec<String> {
    let mut out = Vec::new();
    match cfg.model.validate() {
        Ok(warnings) => out.extend(warnings.into_iter().map(|w| format!("model: {w}"))),
        Err(e) => out.push(format!("model: {e}")),
    }
    if let Err(e) = cfg.noise.validate() {
        out.push(format!("noise: {e}"));
    }
    if let Err(e) = cfg.sensor.validate() {
        out.push(format!("sensor: {e}"));
    }
    if cfg.sensor.tau_in_us >= cfg.sensor.t_meas_us {
        out.push(format!(
            "sensor: mean tunnel-back time {} us does not fit in the {} us measurement window",
            cfg.sensor.tau_in_us, cfg.sensor.t_meas_us
        ));
    }
    if let Err(e) = cfg.fci.validate() {
        out.push(format!("fci: {e}"));
    }
    let s = &cfg.spectrum;
    if s.n_points < 2 || !(s.eps_min_hghz < s.eps_max_hghz) {
        out.push(format!(
            "spectrum: need n_points >= 2 and eps_min < eps_max, got {} points on [{}, {}]",
            s.n_points, s.eps_min_hghz, s.eps_max_hghz
        ));
    }
    let r = &cfg.rabi;
    if r.n_tau < 8 || !(r.tau_min_ns > 0.0 && r.tau_min_ns < r.tau_max_ns) {
        out.push(format!(
            "rabi: need n_tau >= 8 and 0 < tau_min < tau_max, got {} points on [{}, {}]",
            r.n_tau, r.tau_min_ns, r.tau_max_ns
        ));
    }
    if r.amplitudes_hghz.is_empty() || r.amplitudes_hghz.iter().any(|a| !(*a > 0.0)) {
        out.push("rabi: amplitudes_hghz must be non-empty and positive".into());
    }
    let ry = &cfg.ramsey;
    if ry.n_te < 8 || !(ry.te_step_ns > 0.0) || !(ry.te_min_ns >= 0.0) {
        out.push(format!(
            "ramsey: need n_te >= 8, te_step > 0 and te_min >= 0, got {} x {} from {}",
            ry.n_te, ry.te_step_ns, ry.te_min_ns
        ));
    }
    if ry.eps_probe_hghz.is_empty() {
        out.push("ramsey: eps_probe_hghz must be non-empty".into());
    }
    if !(ry.t_ramp_ns > 0.0) || !(ry.a_cal_hghz > 0.0) {
        out.push("ramsey: t_ramp_ns and a_cal_hghz must be positive".into());
    }
    if cfg.tomo.n_phi < 8 {
        out.push(format!("tomo: n_phi must be >= 8, got {}", cfg.tomo.n_phi));
    }
    if !(cfg.tomo.a_cal_hghz > 0.0) {
        out.push("tomo: a_cal_hghz must be positive".into());
    }
    for (name, n, p1) in [
        ("traces", cfg.traces.n_traces, cfg.traces.p1_true),
        ("fidelity", cfg.fidelity.n_traces, cfg.fidelity.p1_true),
    ] {
        if n == 0 {
            out.push(format!("{name}: n_traces must be >= 1"));
        }
        if !(0.0..=1.0).contains(&p1) {
            out.push(format!("{name}: p1_true must be in [0, 1], got {p1}"));
        }
    }
    out
}
