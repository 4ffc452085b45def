//! Single-shot charge-sensor trace synthesis and detection.
//!
//! A measurement lasts `t_meas_us`. A trace starts at the baseline
//! sensor level; an excited qubit can tunnel out (mean `tau_out_us`,
//! racing relaxation with mean `t1_us`), which drops the sensor to the
//! blip level until the electron tunnels back (mean `tau_in_us`). A
//! ground-state qubit shows occasional thermal blips with total
//! per-trace probability `p_thermal` (the arrival clock pauses while a
//! blip is in progress). White noise is added at the fast internal
//! rate, then a trailing boxcar of one integration time is applied and
//! decimated to the detector rate, so detector sample k covers
//! ((k)·t_int, (k+1)·t_int] and carries noise `sigma_eff` =
//! amplitude/snr. A trace is scored as "blip seen" when any detector
//! sample falls below the threshold.

pub mod fidelity;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Sensor-trace model parameters. Times in μs, rates in MHz; sensor
/// levels are arbitrary units with `level_blip < level_base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceConfig {
    /// Measurement window, μs.
    pub t_meas_us: f64,
    /// Internal synthesis sampling rate, MHz.
    pub internal_rate_mhz: f64,
    /// Detector integration time (boxcar width and output period), μs.
    pub t_int_us: f64,
    /// Mean tunnel-out time of the excited state, μs.
    pub tau_out_us: f64,
    /// Mean tunnel-back time, μs.
    pub tau_in_us: f64,
    /// Excited-state relaxation time, μs.
    pub t1_us: f64,
    /// Probability that a ground-state trace shows at least one
    /// thermal blip.
    pub p_thermal: f64,
    /// Blip amplitude over detector-sample noise.
    pub snr: f64,
    /// Sensor level with the electron in place.
    pub level_base: f64,
    /// Sensor level while the electron is out.
    pub level_blip: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            t_meas_us: 140.0,
            internal_rate_mhz: 10.0,
            t_int_us: 1.0,
            tau_out_us: 2.04,
            tau_in_us: 32.0,
            t1_us: 102.0,
            p_thermal: 0.04,
            snr: 5.0,
            level_base: 0.0,
            level_blip: -1.0,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_meas_us", self.t_meas_us),
            ("internal_rate_mhz", self.internal_rate_mhz),
            ("t_int_us", self.t_int_us),
            ("tau_out_us", self.tau_out_us),
            ("tau_in_us", self.tau_in_us),
            ("t1_us", self.t1_us),
            ("snr", self.snr),
        ] {
            if !(v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.p_thermal) {
            return Err(Error::Invalid(format!(
                "p_thermal must be in [0, 1), got {}",
                self.p_thermal
            )));
        }
        if !(self.level_blip < self.level_base) {
            return Err(Error::Invalid("level_blip must be below level_base".into()));
        }
        let w = self.t_int_us * self.internal_rate_mhz;
        if (w - w.round()).abs() > 1e-9 || w.round() < 1.0 {
            return Err(Error::Invalid(format!(
                "t_int_us x internal_rate_mhz must be a positive integer, got {w}"
            )));
        }
        let n = self.t_meas_us * self.internal_rate_mhz;
        if (n - n.round()).abs() > 1e-9 {
            return Err(Error::Invalid(
                "t_meas_us x internal_rate_mhz must be an integer".into(),
            ));
        }
        if (n.round() as u64) % (w.round() as u64) != 0 {
            return Err(Error::Invalid(
                "measurement window must hold a whole number of integration windows".into(),
            ));
        }
        Ok(())
    }

    /// Internal samples per trace.
    pub fn n_internal(&self) -> usize {
        (self.t_meas_us * self.internal_rate_mhz).round() as usize
    }

    /// Boxcar width (= decimation factor) in internal samples.
    pub fn window(&self) -> usize {
        (self.t_int_us * self.internal_rate_mhz).round() as usize
    }

    /// Detector samples per trace.
    pub fn n_detector(&self) -> usize {
        self.n_internal() / self.window()
    }

    /// Detector sample period, μs.
    pub fn dt_detector_us(&self) -> f64 {
        self.t_int_us
    }

    /// Noise of one detector sample: amplitude / snr.
    pub fn sigma_eff(&self) -> f64 {
        (self.level_base - self.level_blip) / self.snr
    }

    /// Noise of one internal sample (averages down to `sigma_eff`).
    pub fn sigma_sample(&self) -> f64 {
        self.sigma_eff() * (self.window() as f64).sqrt()
    }

    /// Thermal blip arrival rate (per μs of baseline time) giving
    /// `p_thermal` per trace.
    pub fn thermal_rate(&self) -> f64 {
        -(1.0 - self.p_thermal).ln() / self.t_meas_us
    }
}

/// Blip intervals [start, end) of one trace, μs.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvents {
    pub label: u8,
    pub blips: Vec<(f64, f64)>,
}

impl TraceEvents {
    pub fn first_blip(&self) -> Option<(f64, f64)> {
        self.blips.first().copied()
    }
}

/// Draw the blip intervals of one trace.
///
/// Excited traces blip at most once: tunnel-out races relaxation, and
/// a relaxed electron never leaves. Ground traces accumulate thermal
/// blips whose arrival clock pauses while a blip is in progress.
pub fn generate_events(cfg: &TraceConfig, rng: &mut ChaCha8Rng, label: u8) -> TraceEvents {
    let mut blips = Vec::new();
    if label == 1 {
        let t_tun = rng::exponential(rng, cfg.tau_out_us);
        let t_rel = rng::exponential(rng, cfg.t1_us);
        if t_tun < t_rel.min(cfg.t_meas_us) {
            let d = rng::exponential(rng, cfg.tau_in_us);
            blips.push((t_tun, (t_tun + d).min(cfg.t_meas_us)));
        }
    } else if cfg.p_thermal > 0.0 {
        let rate = cfg.thermal_rate();
        let mut t = 0.0;
        loop {
            t += rng::exponential(rng, 1.0 / rate);
            if t >= cfg.t_meas_us {
                break;
            }
            let d = rng::exponential(rng, cfg.tau_in_us);
            blips.push((t, (t + d).min(cfg.t_meas_us)));
            t += d;
        }
    }
    TraceEvents { label, blips }
}

/// Render events into detector samples: internal sampling at
/// (i + 0.5)/rate with white noise, trailing boxcar, decimation.
pub fn synthesize_trace(cfg: &TraceConfig, rng: &mut ChaCha8Rng, events: &TraceEvents) -> Vec<f64> {
    let n_int = cfg.n_internal();
    let w = cfg.window();
    let mut x = vec![cfg.level_base; n_int];
    for &(a, b) in &events.blips {
        // internal sample i is centered at (i + 0.5)/rate
        let lo = (a * cfg.internal_rate_mhz - 0.5).ceil().max(0.0) as usize;
        for (i, v) in x.iter_mut().enumerate().take(n_int).skip(lo) {
            let tt = (i as f64 + 0.5) / cfg.internal_rate_mhz;
            if tt >= b {
                break;
            }
            if tt >= a {
                *v = cfg.level_blip;
            }
        }
    }
    let mut noise = vec![0.0; n_int];
    rng::fill_normal(rng, &mut noise, cfg.sigma_sample());
    for (v, n) in x.iter_mut().zip(&noise) {
        *v += n;
    }
    let inv = 1.0 / w as f64;
    (0..cfg.n_detector()).map(|k| x[k * w..(k + 1) * w].iter().sum::<f64>() * inv).collect()
}

/// One synthesized shot: the true label and first-blip interval along
/// with the detector samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrace {
    pub label: u8,
    pub had_blip: bool,
    /// True first tunnel-out time, μs.
    pub t_out_us: Option<f64>,
    /// True first tunnel-back time, μs.
    pub t_back_us: Option<f64>,
    pub samples: Vec<f64>,
}

/// Synthesize `n` traces with excited-state probability `p1`. Trace i
/// uses its own seeded stream, so the batch is reproducible and
/// independent of thread count.
pub fn synthesize_batch(cfg: &TraceConfig, n: usize, p1: f64, seed: u64) -> Result<Vec<SyntheticTrace>> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::Invalid(format!("p1 must be in [0, 1], got {p1}")));
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64, rng::STREAM_TRACE);
            let label = u8::from(rng::uniform(&mut r) < p1);
            let events = generate_events(cfg, &mut r, label);
            let samples = synthesize_trace(cfg, &mut r, &events);
            let first = events.first_blip();
            SyntheticTrace {
                label,
                had_blip: first.is_some(),
                t_out_us: first.map(|f| f.0),
                t_back_us: first.map(|f| f.1),
                samples,
            }
        })
        .collect())
}

/// Blip detection: any detector sample below the threshold.
pub fn detect(samples: &[f64], threshold: f64) -> bool {
    samples.iter().any(|&v| v < threshold)
}

/// Raw excited-state fraction: share of traces with a detected blip.
pub fn estimate_p1_raw(traces: &[SyntheticTrace], threshold: f64) -> f64 {
    if traces.is_empty() {
        return f64::NAN;
    }
    traces.iter().filter(|t| detect(&t.samples, threshold)).count() as f64 / traces.len() as f64
}

/// Invert the readout-error map: with fidelities (f0, f1), a raw blip
/// fraction r estimates p1 = (r − (1 − f0)) / (f0 + f1 − 1).
pub fn correct_p1(raw: f64, f0: f64, f1: f64) -> Result<f64> {
    let vis = f0 + f1 - 1.0;
    if vis <= 0.0 {
        return Err(Error::Statistics(format!(
            "cannot correct p1 with non-positive visibility {vis}"
        )));
    }
    Ok((raw - (1.0 - f0)) / vis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn config_validation() {
        assert!(TraceConfig::default().validate().is_ok());
        assert!(TraceConfig { t_int_us: 0.25, ..Default::default() }.validate().is_err());
        assert!(TraceConfig { p_thermal: 1.0, ..Default::default() }.validate().is_err());
        assert!(
            TraceConfig { level_blip: 0.5, level_base: 0.0, ..Default::default() }
                .validate()
                .is_err()
        );
        let cfg = TraceConfig::default();
        assert_eq!(cfg.n_internal(), 1400);
        assert_eq!(cfg.window(), 10);
        assert_eq!(cfg.n_detector(), 140);
        assert_abs_diff_eq!(cfg.sigma_eff(), 0.2);
        assert_abs_diff_eq!(cfg.sigma_sample(), 0.2 * 10f64.sqrt());
    }

    #[test]
    fn excited_blip_probability_is_branching_ratio() {
        // tunnel-out at rate 1/tau_out races relaxation at 1/T1, so
        // P(blip | excited) = T1/(T1 + tau_out)
        let cfg = TraceConfig::default();
        let n = 200_000;
        let mut hits = 0;
        for i in 0..n {
            let mut r = rng::stream(11, i, rng::STREAM_TRACE);
            if !generate_events(&cfg, &mut r, 1).blips.is_empty() {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let expect = cfg.t1_us / (cfg.t1_us + cfg.tau_out_us); // 102/104.04
        assert_abs_diff_eq!(p, expect, epsilon = 3.0 * (expect * (1.0 - expect) / n as f64).sqrt());
    }

    #[test]
    fn thermal_blip_probability_matches_p_thermal() {
        let cfg = TraceConfig::default();
        let n = 200_000;
        let mut hits = 0;
        for i in 0..n {
            let mut r = rng::stream(12, i, rng::STREAM_TRACE);
            if !generate_events(&cfg, &mut r, 0).blips.is_empty() {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        assert_abs_diff_eq!(p, 0.04, epsilon = 3.0 * (0.04f64 * 0.96 / n as f64).sqrt());
        // and switching the channel off removes every event
        let quiet = TraceConfig { p_thermal: 0.0, ..Default::default() };
        for i in 0..1000 {
            let mut r = rng::stream(13, i, rng::STREAM_TRACE);
            assert!(generate_events(&quiet, &mut r, 0).blips.is_empty());
        }
    }

    #[test]
    fn detector_noise_averages_to_sigma_eff() {
        let cfg = TraceConfig::default();
        let mut acc = 0.0;
        let mut n = 0usize;
        for i in 0..500 {
            let mut r = rng::stream(14, i, rng::STREAM_TRACE);
            let ev = TraceEvents { label: 0, blips: vec![] };
            let y = synthesize_trace(&cfg, &mut r, &ev);
            for v in y {
                acc += v * v;
                n += 1;
            }
        }
        let sigma = (acc / n as f64).sqrt();
        assert_relative_eq!(sigma, cfg.sigma_eff(), max_relative = 0.01);
    }

    #[test]
    fn blip_interval_lands_on_the_right_samples() {
        let cfg = TraceConfig { snr: 1e12, ..Default::default() };
        let mut r = rng::stream(0, 0, rng::STREAM_TRACE);
        // blip [10.0, 13.0): detector samples 10..12 fully inside, with
        // boundaries at whole integration windows
        let ev = TraceEvents { label: 1, blips: vec![(10.0, 13.0)] };
        let y = synthesize_trace(&cfg, &mut r, &ev);
        for (k, v) in y.iter().enumerate() {
            let expect = if (10..13).contains(&k) { cfg.level_blip } else { cfg.level_base };
            assert_abs_diff_eq!(*v, expect, epsilon = 1e-6);
        }
        // a blip crossing a window boundary splits the mean
        let ev = TraceEvents { label: 1, blips: vec![(20.5, 21.5)] };
        let mut r = rng::stream(0, 0, rng::STREAM_TRACE);
        let y = synthesize_trace(&cfg, &mut r, &ev);
        assert_abs_diff_eq!(y[20], -0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(y[21], -0.5, epsilon = 1e-6);
    }

    #[test]
    fn batch_is_deterministic_and_half_excited() {
        let cfg = TraceConfig::default();
        let a = synthesize_batch(&cfg, 400, 0.5, 7).unwrap();
        let b = synthesize_batch(&cfg, 400, 0.5, 7).unwrap();
        assert_eq!(a, b);
        let n1 = a.iter().filter(|t| t.label == 1).count();
        assert!((150..=250).contains(&n1), "n1 = {n1}");
        // event bookkeeping matches the flag
        for t in &a {
            assert_eq!(t.had_blip, t.t_out_us.is_some());
        }
    }

    #[test]
    fn p1_correction_inverts_error_map() {
        let (f0, f1) = (0.956, 0.944);
        let p1_true = 0.37;
        let raw = p1_true * f1 + (1.0 - p1_true) * (1.0 - f0);
        assert_abs_diff_eq!(correct_p1(raw, f0, f1).unwrap(), p1_true, epsilon = 1e-12);
        assert!(correct_p1(0.5, 0.5, 0.5).is_err());
    }
}
