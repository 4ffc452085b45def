//! Threshold calibration and tunnel-time statistics on trace batches.
//!
//! Fidelity works on the per-trace minimum detector sample: a
//! threshold sweep from just above the blip-free floor down past the
//! blip level yields F0 (ground traces kept) and F1 (excited traces
//! caught) and their visibility. Tunnel times are re-estimated from
//! the traces alone with a hysteresis tagger and (truncated/censored)
//! geometric maximum likelihood, which undoes the discretization and
//! dead-time biases a naive exponential fit would pick up.

use serde::Serialize;

use super::{SyntheticTrace, TraceConfig};
use crate::error::{Error, Result};

/// Per-trace minimum detector sample.
pub fn min_values(traces: &[SyntheticTrace]) -> Vec<f64> {
    traces
        .iter()
        .map(|t| t.samples.iter().cloned().fold(f64::INFINITY, f64::min))
        .collect()
}

/// Histograms of the per-trace minima by true label, binned at
/// sigma_eff/5.
#[derive(Debug, Clone, Serialize)]
pub struct MinHistograms {
    pub bin_width: f64,
    /// Left edge of the first bin.
    pub first_edge: f64,
    pub counts_ground: Vec<u64>,
    pub counts_excited: Vec<u64>,
}

impl MinHistograms {
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.counts_ground.len()).map(|i| self.first_edge + i as f64 * self.bin_width).collect()
    }
}

pub fn min_histograms(traces: &[SyntheticTrace], cfg: &TraceConfig) -> Result<MinHistograms> {
    if traces.is_empty() {
        return Err(Error::Statistics("histogram needs at least one trace".into()));
    }
    let width = cfg.sigma_eff() / 5.0;
    let mins = min_values(traces);
    let bins: Vec<i64> = mins.iter().map(|&v| (v / width).floor() as i64).collect();
    let lo = *bins.iter().min().unwrap();
    let hi = *bins.iter().max().unwrap();
    let n = (hi - lo + 1) as usize;
    let mut counts_ground = vec![0u64; n];
    let mut counts_excited = vec![0u64; n];
    for (t, &b) in traces.iter().zip(&bins) {
        let k = (b - lo) as usize;
        if t.label == 1 {
            counts_excited[k] += 1;
        } else {
            counts_ground[k] += 1;
        }
    }
    Ok(MinHistograms {
        bin_width: width,
        first_edge: lo as f64 * width,
        counts_ground,
        counts_excited,
    })
}

/// Fidelity-vs-threshold sweep with its optimum.
#[derive(Debug, Clone, Serialize)]
pub struct FidelityReport {
    /// Thresholds in sweep order (descending, baseline side first).
    pub thresholds: Vec<f64>,
    /// P(no blip detected | ground) per threshold.
    pub f0: Vec<f64>,
    /// P(blip detected | excited) per threshold.
    pub f1: Vec<f64>,
    /// f0 + f1 − 1 per threshold.
    pub visibility: Vec<f64>,
    pub v_opt: f64,
    pub f0_opt: f64,
    pub f1_opt: f64,
    pub visibility_opt: f64,
    pub n_ground: usize,
    pub n_excited: usize,
}

/// Sweep the detection threshold from `level_base + 3σ` down to
/// `level_blip − 3σ` in σ/40 steps. Ties in visibility resolve to the
/// lowest threshold.
pub fn fidelity_scan(traces: &[SyntheticTrace], cfg: &TraceConfig) -> Result<FidelityReport> {
    cfg.validate()?;
    let mins = min_values(traces);
    let (mut mins0, mut mins1) = (Vec::new(), Vec::new());
    for (t, &m) in traces.iter().zip(&mins) {
        if t.label == 1 {
            mins1.push(m);
        } else {
            mins0.push(m);
        }
    }
    if mins0.is_empty() || mins1.is_empty() {
        return Err(Error::Statistics(format!(
            "fidelity needs both labels: {} ground, {} excited",
            mins0.len(),
            mins1.len()
        )));
    }
    let sigma = cfg.sigma_eff();
    let start = cfg.level_base + 3.0 * sigma;
    let stop = cfg.level_blip - 3.0 * sigma;
    let step = sigma / 40.0;
    let n_steps = ((start - stop) / step).floor() as usize;
    let mut report = FidelityReport {
        thresholds: Vec::with_capacity(n_steps + 1),
        f0: Vec::with_capacity(n_steps + 1),
        f1: Vec::with_capacity(n_steps + 1),
        visibility: Vec::with_capacity(n_steps + 1),
        v_opt: f64::NAN,
        f0_opt: f64::NAN,
        f1_opt: f64::NAN,
        visibility_opt: f64::NEG_INFINITY,
        n_ground: mins0.len(),
        n_excited: mins1.len(),
    };
    for i in 0..=n_steps {
        let vt = start - i as f64 * step;
        let f0 = mins0.iter().filter(|&&m| m >= vt).count() as f64 / mins0.len() as f64;
        let f1 = mins1.iter().filter(|&&m| m < vt).count() as f64 / mins1.len() as f64;
        let vis = f0 + f1 - 1.0;
        debug_assert!((0.0..=1.0).contains(&f0) && (0.0..=1.0).contains(&f1));
        // >= so that equal-visibility plateaus resolve to the lowest
        // threshold of the sweep
        if vis >= report.visibility_opt {
            report.visibility_opt = vis;
            report.v_opt = vt;
            report.f0_opt = f0;
            report.f1_opt = f1;
        }
        report.thresholds.push(vt);
        report.f0.push(f0);
        report.f1.push(f1);
        report.visibility.push(vis);
    }
    Ok(report)
}

/// Blip intervals recovered from detector samples by a hysteresis
/// tagger: enter just above the blip level, release just below the
/// baseline. Times tag the end of the integration window, `(k+1)·dt`
/// for sample k; `None` marks a blip still open at the trace end.
pub fn tag_events(samples: &[f64], cfg: &TraceConfig) -> Vec<(f64, Option<f64>)> {
    let enter = cfg.level_blip + 1.1 * cfg.sigma_eff();
    let release = cfg.level_base - 1.25 * cfg.sigma_eff();
    let dt = cfg.dt_detector_us();
    let n = samples.len();
    let mut events = Vec::new();
    let mut i = 0;
    while i < n {
        if samples[i] < enter {
            let mut j = i + 1;
            while j < n && samples[j] < release {
                j += 1;
            }
            let end = if j < n { Some((j + 1) as f64 * dt) } else { None };
            events.push(((i + 1) as f64 * dt, end));
            i = j + 1;
        } else {
            i += 1;
        }
    }
    events
}

/// First-blip timing statistics of a batch, in detector-sample bins.
#[derive(Debug, Clone, Default)]
pub struct EventStats {
    /// Tunnel-out bin (first event start) per tagged trace.
    pub k_out: Vec<u64>,
    /// Blip duration bins for events that closed inside the window.
    pub k_dur: Vec<u64>,
    /// Duration bins for events cut off by the end of the window.
    pub k_dur_censored: Vec<u64>,
}

pub fn collect_event_stats(traces: &[SyntheticTrace], cfg: &TraceConfig) -> EventStats {
    let dt = cfg.dt_detector_us();
    let mut stats = EventStats::default();
    for t in traces {
        let events = tag_events(&t.samples, cfg);
        let Some(&(t0, end)) = events.first() else { continue };
        stats.k_out.push((t0 / dt).round() as u64);
        // a release in the last window and a half is indistinguishable
        // from no release at all
        match end {
            Some(t1) if t1 < cfg.t_meas_us - 1.5 * dt => {
                stats.k_dur.push(((t1 - t0) / dt).round() as u64);
            }
            Some(t1) => stats.k_dur_censored.push(((t1 - t0) / dt).round() as u64),
            None => stats.k_dur_censored.push(((cfg.t_meas_us - t0) / dt).round() as u64),
        }
    }
    stats
}

/// A geometric-waiting-time estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeomFit {
    pub tau_us: f64,
    pub se_us: f64,
    pub n: usize,
}

/// Maximum-likelihood mean of a geometric waiting time observed only
/// inside a window of `kmax + 1` bins, by Newton iteration on the
/// moment equation of the truncated distribution.
pub fn truncated_geometric_mle(ks: &[u64], kmax: u64, dt: f64) -> Result<GeomFit> {
    if ks.is_empty() {
        return Err(Error::Statistics("truncated geometric fit needs samples".into()));
    }
    let n = ks.len();
    let m = ks.iter().sum::<u64>() as f64 / n as f64;
    let kk = kmax as f64 + 1.0;
    let mu = |q: f64| {
        let qk = q.powf(kk);
        q / (1.0 - q) - kk * qk / (1.0 - qk)
    };
    let mut q = m / (1.0 + m);
    for _ in 0..80 {
        let h = 1e-7;
        let m0 = mu(q);
        let slope = (mu(q + h) - m0) / h;
        q += (m - m0) / slope;
        q = q.clamp(1e-9, 1.0 - 1e-9);
    }
    let tau = -dt / q.ln();
    Ok(GeomFit { tau_us: tau, se_us: tau / (n as f64).sqrt(), n })
}

/// Maximum-likelihood mean of a geometric waiting time with
/// right-censored observations: q̂ = S/(S + N_uncensored), with S the
/// total exposure in bins.
pub fn censored_geometric_mle(ks: &[u64], censored: &[u64], dt: f64) -> Result<GeomFit> {
    if ks.is_empty() {
        return Err(Error::Statistics("censored geometric fit needs uncensored samples".into()));
    }
    let n = ks.len();
    let s = (ks.iter().sum::<u64>() + censored.iter().sum::<u64>()) as f64;
    if s == 0.0 {
        return Err(Error::Statistics("censored geometric fit needs nonzero exposure".into()));
    }
    let q = s / (s + n as f64);
    let tau = -dt / q.ln();
    Ok(GeomFit { tau_us: tau, se_us: tau / (n as f64).sqrt(), n })
}

/// Tunnel-time estimates recovered from a batch of traces.
#[derive(Debug, Clone, Serialize)]
pub struct TunnelTimeFit {
    pub tau_out: GeomFit,
    pub tau_in: GeomFit,
    pub n_censored: usize,
    /// First tunnel-out bin used by the fit window.
    pub kref_out: u64,
    /// First duration bin used by the fit.
    pub kref_dur: u64,
}

/// Estimate tunnel-out and tunnel-back times from tagged traces.
///
/// The first few tunnel-out bins are discarded (the boxcar smears the
/// crossing and early bins also carry the detection latency), then a
/// truncated geometric is fit on an 8-bin window. Durations shorter
/// than two bins are dropped the same way; longer ones feed the
/// censored geometric estimator.
pub fn tunnel_time_mle(traces: &[SyntheticTrace], cfg: &TraceConfig) -> Result<TunnelTimeFit> {
    let stats = collect_event_stats(traces, cfg);
    if stats.k_out.len() < 100 {
        return Err(Error::Statistics(format!(
            "tunnel-time fit needs >= 100 tagged traces, got {}",
            stats.k_out.len()
        )));
    }
    let dt = cfg.dt_detector_us();
    let kref = stats.k_out.iter().min().unwrap() + 3;
    let span = 8u64;
    let windowed: Vec<u64> = stats
        .k_out
        .iter()
        .filter(|&&k| (kref..=kref + span).contains(&k))
        .map(|&k| k - kref)
        .collect();
    let tau_out = truncated_geometric_mle(&windowed, span, dt)?;
    if stats.k_dur.is_empty() {
        return Err(Error::Statistics("no closed blips to fit tau_in".into()));
    }
    let dref = stats.k_dur.iter().min().unwrap() + 2;
    let durs: Vec<u64> =
        stats.k_dur.iter().filter(|&&k| k >= dref).map(|&k| k - dref).collect();
    let cens: Vec<u64> =
        stats.k_dur_censored.iter().filter(|&&k| k >= dref).map(|&k| k - dref).collect();
    let n_censored = cens.len();
    let tau_in = censored_geometric_mle(&durs, &cens, dt)?;
    Ok(TunnelTimeFit { tau_out, tau_in, n_censored, kref_out: kref, kref_dur: dref })
}
