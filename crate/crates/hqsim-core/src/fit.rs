//! Fitting and spectral-estimation helpers for scan postprocessing.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Result of a damped-free sinusoid fit `y = b - a·cos(2πf(t - t0))`.
#[derive(Debug, Clone, Copy)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub t0: f64,
    pub r_squared: f64,
}

/// Ordinary least squares line `y = slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - (slope * xi + intercept);
        ss_res += r * r;
        ss_tot += (yi - my) * (yi - my);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}

/// Dominant non-DC frequency of a uniformly sampled series, from the
/// magnitude peak of a 16×-zero-padded FFT.
pub fn fft_peak_frequency(dt: f64, y: &[f64]) -> f64 {
    assert!(y.len() >= 4 && dt > 0.0);
    let n = y.len() * 16;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut buf: Vec<Complex64> = y
        .iter()
        .map(|&v| Complex64::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let mut best = (1usize, 0.0f64);
    for (k, c) in buf.iter().enumerate().take(half + 1).skip(1) {
        let m = c.norm_sqr();
        if m > best.1 {
            best = (k, m);
        }
    }
    best.0 as f64 / (n as f64 * dt)
}

/// For a trial frequency, solve `y ≈ b + c·cos(2πft) + s·sin(2πft)` by
/// linear least squares and return (sse, b, c, s).
pub(crate) fn quadrature_lsq(t: &[f64], y: &[f64], f: f64) -> (f64, f64, f64, f64) {
    // normal equations for the 3-column design [1, cos, sin]
    let n = t.len() as f64;
    let (mut sc, mut ss, mut scc, mut sss, mut scs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sy, mut syc, mut sys) = (0.0, 0.0, 0.0);
    let w = 2.0 * std::f64::consts::PI * f;
    for (&ti, &yi) in t.iter().zip(y) {
        let (si, ci) = (w * ti).sin_cos();
        sc += ci;
        ss += si;
        scc += ci * ci;
        sss += si * si;
        scs += ci * si;
        sy += yi;
        syc += yi * ci;
        sys += yi * si;
    }
    // 3×3 symmetric solve by hand
    let a = [[n, sc, ss], [sc, scc, scs], [ss, scs, sss]];
    let rhs = [sy, syc, sys];
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-12 {
        return (f64::INFINITY, 0.0, 0.0, 0.0);
    }
    let solve_col = |k: usize| {
        let mut m = a;
        for (row, r) in rhs.iter().enumerate() {
            m[row][k] = *r;
        }
        (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
            / det
    };
    let (b, c, s) = (solve_col(0), solve_col(1), solve_col(2));
    let mut sse = 0.0;
    for (&ti, &yi) in t.iter().zip(y) {
        let (si, ci) = (w * ti).sin_cos();
        let r = yi - (b + c * ci + s * si);
        sse += r * r;
    }
    (sse, b, c, s)
}

/// Fit `y = b - a·cos(2πf(t - t0))` by a dense frequency sweep with
/// the amplitude/phase solved linearly at each trial frequency.
///
/// Deterministic (no random restarts); the sweep covers a quarter
/// period per window up to just below Nyquist, so slow rows that
/// complete less than one oscillation still land in the right basin.
/// Errors when the fitted oscillation amplitude is below
/// `min_amplitude`.
pub fn fit_sinusoid(t: &[f64], y: &[f64], min_amplitude: f64) -> Result<SinusoidFit> {
    assert_eq!(t.len(), y.len());
    if t.len() < 8 {
        return Err(Error::Statistics("sinusoid fit needs >= 8 samples".into()));
    }
    let dt = t[1] - t[0];
    let span = t[t.len() - 1] - t[0];
    let mut lo = 0.25 / span;
    let mut hi = 0.45 / dt;
    let mut best = (f64::INFINITY, lo, 0.0, 0.0, 0.0);
    let mut steps = 1600;
    for _ in 0..4 {
        for i in 0..=steps {
            let f = lo + (hi - lo) * i as f64 / steps as f64;
            let (sse, b, c, s) = quadrature_lsq(t, y, f);
            if sse < best.0 {
                best = (sse, f, b, c, s);
            }
        }
        let grid = (hi - lo) / steps as f64;
        lo = best.1 - 2.0 * grid;
        hi = best.1 + 2.0 * grid;
        steps = 160;
    }
    let (_, f, b, c, s) = best;
    let a = c.hypot(s);
    if a < min_amplitude {
        return Err(Error::Statistics(format!(
            "oscillation amplitude {a:.4} below {min_amplitude}"
        )));
    }
    // b + c·cos + s·sin = b - a·cos(2πf(t - t0)) with
    // c = -a·cos(2πf t0), s = -a·sin(2πf t0)
    let t0 = (-s).atan2(-c) / (2.0 * std::f64::consts::PI * f);
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|&v| (v - my) * (v - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - best.0 / ss_tot } else { 1.0 };
    Ok(SinusoidFit { offset: b, amplitude: a, frequency: f, t0, r_squared: r2 })
}

/// First time at which `env` decays to `env[0]/e`, log-interpolated
/// between grid points. `None` if the envelope never crosses.
pub fn one_over_e_time(t: &[f64], env: &[f64]) -> Option<f64> {
    let target = env[0] / std::f64::consts::E;
    for i in 1..env.len() {
        if env[i] <= target {
            let (a, b) = (env[i - 1], env[i]);
            if !(a > 0.0 && b > 0.0) {
                return Some(t[i]);
            }
            let frac = (a.ln() - target.ln()) / (a.ln() - b.ln());
            return Some(t[i - 1] + (t[i] - t[i - 1]) * frac);
        }
    }
    None
}
