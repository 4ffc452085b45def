//! Scan drivers built on the pulse integrator: Rabi amplitude/length
//! maps, Ramsey fringes with detuning pulses, two-pulse phase
//! tomography, and the quasistatic-noise calibration that ties the
//! dephasing model to a target coherence time.
//!
//! All scans integrate pure states (see the module note in
//! [`crate::pulse`]) and average over quasistatic detuning offsets
//! where a [`NoiseModel`] is given. Ramsey curves are evaluated in
//! factorized form: the pulse propagators are integrated once per
//! detuning/offset and the free-evolution time enters only through
//! eigenphases, so long delay scans cost no additional integration.

use nalgebra::{DMatrix, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{self, SinusoidFit};
use crate::model::{levels, qubit_splitting, ModelParams};
use crate::pulse::integrator::{dwell_propagator, propagate_psi, segment_propagator, Ham};
use crate::pulse::{clip01, NoiseModel, PulseSegment};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn burst_segment(eps_op: f64, a: f64, f_mw: f64, phi: f64, tau: f64, sigma: f64) -> PulseSegment {
    PulseSegment::Burst {
        duration_ns: tau,
        eps_center_hghz: eps_op,
        a_eps_hghz: a,
        f_mw_ghz: f_mw,
        phi_rad: phi,
        edge_sigma_ns: sigma,
    }
}

/// Excited-state probability after a single burst, starting from the
/// ground state at `eps_op + offset` and projecting onto the first
/// excited eigenstate there. `oversample` shrinks the integrator step
/// for convergence studies.
#[allow(clippy::too_many_arguments)]
pub fn burst_p1(
    params: &ModelParams,
    eps_op: f64,
    a_eps: f64,
    f_mw: f64,
    phi: f64,
    tau_ns: f64,
    edge_sigma_ns: f64,
    offset: f64,
    oversample: f64,
) -> f64 {
    let ham = Ham::new(params);
    burst_p1_inner(&ham, params, eps_op, a_eps, f_mw, phi, tau_ns, edge_sigma_ns, offset, oversample)
}

#[allow(clippy::too_many_arguments)]
fn burst_p1_inner(
    ham: &Ham,
    params: &ModelParams,
    eps_op: f64,
    a_eps: f64,
    f_mw: f64,
    phi: f64,
    tau_ns: f64,
    edge_sigma_ns: f64,
    offset: f64,
    oversample: f64,
) -> f64 {
    let l = levels(eps_op + offset, params);
    let mut psi = [Complex64::ZERO; 4];
    for i in 0..4 {
        psi[i] = Complex64::new(l.eigenvectors[(i, 0)], 0.0);
    }
    let seg = burst_segment(eps_op, a_eps, f_mw, phi, tau_ns, edge_sigma_ns);
    propagate_psi(ham, params, &seg, offset, oversample, &mut psi);
    let mut amp = Complex64::ZERO;
    for i in 0..4 {
        amp += psi[i] * l.eigenvectors[(i, 1)];
    }
    amp.norm_sqr()
}

/// Per-amplitude Rabi fit. `flagged` rows carry no fit values and are
/// excluded from the frequency-vs-amplitude law.
#[derive(Debug, Clone, Serialize)]
pub struct RabiFitRow {
    pub a_eps_hghz: f64,
    pub f_rabi_ghz: Option<f64>,
    pub amplitude: Option<f64>,
    pub r_squared: Option<f64>,
    pub flagged: bool,
}

/// `y = slope·x + intercept` with its coefficient of determination.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearLaw {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RabiScan {
    pub tau_ns: Vec<f64>,
    pub a_eps_hghz: Vec<f64>,
    /// p1[amplitude index][tau index]
    pub p1: Vec<Vec<f64>>,
    pub fits: Vec<RabiFitRow>,
    /// Linear law of Rabi frequency vs drive amplitude over the
    /// unflagged rows (needs at least two of them).
    pub frequency_vs_amplitude: Option<LinearLaw>,
}

/// Chevron-style Rabi map: burst length × drive amplitude at fixed
/// drive frequency. Each amplitude row is fit with a free sinusoid.
pub fn rabi_scan(
    params: &ModelParams,
    noise: &NoiseModel,
    eps_op: f64,
    f_mw: f64,
    tau_grid: &[f64],
    a_grid: &[f64],
    edge_sigma_ns: f64,
) -> Result<RabiScan> {
    params.validate()?;
    noise.validate()?;
    if tau_grid.len() < 8 || a_grid.is_empty() {
        return Err(Error::Invalid("rabi scan needs >= 8 burst lengths and >= 1 amplitude".into()));
    }
    if tau_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Invalid("burst lengths must be > 0".into()));
    }
    let ham = Ham::new(params);
    let offsets = noise.offsets();
    let jobs: Vec<(usize, usize)> =
        (0..a_grid.len()).flat_map(|ia| (0..tau_grid.len()).map(move |it| (ia, it))).collect();
    let flat: Vec<f64> = jobs
        .par_iter()
        .map(|&(ia, it)| {
            let mean = offsets
                .iter()
                .map(|&off| {
                    burst_p1_inner(
                        &ham,
                        params,
                        eps_op,
                        a_grid[ia],
                        f_mw,
                        0.0,
                        tau_grid[it],
                        edge_sigma_ns,
                        off,
                        1.0,
                    )
                })
                .sum::<f64>()
                / offsets.len() as f64;
            clip01(mean)
        })
        .collect();
    let p1: Vec<Vec<f64>> =
        (0..a_grid.len()).map(|ia| flat[ia * tau_grid.len()..(ia + 1) * tau_grid.len()].to_vec()).collect();

    let mut fits = Vec::with_capacity(a_grid.len());
    for (ia, &a) in a_grid.iter().enumerate() {
        match fit::fit_sinusoid(tau_grid, &p1[ia], 0.05) {
            Ok(f) if f.frequency.is_finite() && f.r_squared > 0.5 => fits.push(RabiFitRow {
                a_eps_hghz: a,
                f_rabi_ghz: Some(f.frequency),
                amplitude: Some(f.amplitude),
                r_squared: Some(f.r_squared),
                flagged: false,
            }),
            _ => fits.push(RabiFitRow {
                a_eps_hghz: a,
                f_rabi_ghz: None,
                amplitude: None,
                r_squared: None,
                flagged: true,
            }),
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = fits
        .iter()
        .filter(|r| !r.flagged)
        .map(|r| (r.a_eps_hghz, r.f_rabi_ghz.unwrap()))
        .unzip();
    let frequency_vs_amplitude = if xs.len() >= 2 {
        let (slope, intercept, r_squared) = fit::linear_fit(&xs, &ys);
        Some(LinearLaw { slope, intercept, r_squared })
    } else {
        None
    };
    Ok(RabiScan { tau_ns: tau_grid.to_vec(), a_eps_hghz: a_grid.to_vec(), p1, fits, frequency_vs_amplitude })
}

/// Calibrated π/2 pulse: length and Rabi frequency at the calibration
/// amplitude.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Pi2Calibration {
    pub tau_pi2_ns: f64,
    pub f_rabi_ghz: f64,
    pub a_cal_hghz: f64,
    pub fit_r_squared: f64,
}

/// Calibrate the π/2 burst length from a noiseless Rabi curve at the
/// calibration amplitude: τ_π/2 = t0 + 1/(4 f_R), where t0 absorbs the
/// effective envelope-edge delay.
pub fn calibrate_pi2(
    params: &ModelParams,
    eps_op: f64,
    a_cal: f64,
    f_mw: f64,
    edge_sigma_ns: f64,
) -> Result<Pi2Calibration> {
    let taus: Vec<f64> = (0..52).map(|i| 0.4 + 0.5 * i as f64).collect();
    let ham = Ham::new(params);
    let p1: Vec<f64> = taus
        .par_iter()
        .map(|&tau| {
            burst_p1_inner(&ham, params, eps_op, a_cal, f_mw, 0.0, tau, edge_sigma_ns, 0.0, 1.0)
        })
        .collect();
    let f: SinusoidFit = fit::fit_sinusoid(&taus, &p1, 0.05)?;
    let mut tau_pi2 = f.t0 + 0.25 / f.frequency;
    while tau_pi2 <= 0.0 {
        tau_pi2 += 0.5 / f.frequency;
    }
    Ok(Pi2Calibration {
        tau_pi2_ns: tau_pi2,
        f_rabi_ghz: f.frequency,
        a_cal_hghz: a_cal,
        fit_r_squared: f.r_squared,
    })
}

/// Factorized Ramsey response for one detuning offset: pulse and ramp
/// propagators folded into four complex weights, with the delay
/// entering through eigenphases at the probe detuning.
struct RamseyKernel {
    w: [f64; 4],
    g: [Complex64; 4],
}

impl RamseyKernel {
    /// |⟨E1| U_b D(te) U_b |E0⟩|² with ramps folded in
    fn p1(&self, te: f64) -> f64 {
        let mut m = Complex64::ZERO;
        for k in 0..4 {
            m += self.g[k] * Complex64::from_polar(1.0, -TWO_PI * self.w[k] * te);
        }
        m.norm_sqr()
    }

    /// Complex fringe term beating at the qubit splitting (the 0–1
    /// cross term of `p1`); its offset-averaged magnitude is the
    /// dephasing envelope.
    fn fringe(&self, te: f64) -> Complex64 {
        self.g[0]
            * self.g[1].conj()
            * Complex64::from_polar(2.0, -TWO_PI * (self.w[0] - self.w[1]) * te)
    }
}

#[allow(clippy::too_many_arguments)]
fn ramsey_kernel(
    ham: &Ham,
    params: &ModelParams,
    eps_op: f64,
    eps_probe: f64,
    pi2: &Pi2Calibration,
    f_mw: f64,
    t_ramp_ns: f64,
    edge_sigma_ns: f64,
    offset: f64,
) -> RamseyKernel {
    let l_op = levels(eps_op + offset, params);
    let burst =
        burst_segment(eps_op, pi2.a_cal_hghz, f_mw, 0.0, pi2.tau_pi2_ns, edge_sigma_ns);
    let ub = segment_propagator(ham, params, &burst, offset, 1.0);
    let (up, dn) = if (eps_probe - eps_op).abs() < 1e-9 {
        let u = dwell_propagator(params, eps_probe + offset, t_ramp_ns);
        (u, u)
    } else {
        let ramp_up = PulseSegment::Ramp {
            duration_ns: t_ramp_ns,
            eps_start_hghz: eps_op,
            eps_end_hghz: eps_probe,
        };
        let ramp_dn = PulseSegment::Ramp {
            duration_ns: t_ramp_ns,
            eps_start_hghz: eps_probe,
            eps_end_hghz: eps_op,
        };
        (
            segment_propagator(ham, params, &ramp_up, offset, 1.0),
            segment_propagator(ham, params, &ramp_dn, offset, 1.0),
        )
    };
    let l_probe = levels(eps_probe + offset, params);
    let psi0 = Vector4::from_fn(|i, _| Complex64::new(l_op.eigenvectors[(i, 0)], 0.0));
    let v1 = Vector4::from_fn(|i, _| Complex64::new(l_op.eigenvectors[(i, 1)], 0.0));
    // c_k = ⟨probe k| up·Ub |ψ0⟩, W_k = ⟨probe k| dn†·Ub† |E1⟩
    let fwd = up * (ub * psi0);
    let back = dn.adjoint() * (ub.adjoint() * v1);
    let mut w = [0.0; 4];
    let mut g = [Complex64::ZERO; 4];
    for k in 0..4 {
        let mut c = Complex64::ZERO;
        let mut wk = Complex64::ZERO;
        for i in 0..4 {
            let vk = l_probe.eigenvectors[(i, k)];
            c += fwd[i] * vk;
            wk += back[i] * vk;
        }
        w[k] = l_probe.eigenvalues[k];
        g[k] = wk.conj() * c;
    }
    RamseyKernel { w, g }
}

#[derive(Debug, Clone, Serialize)]
pub struct RamseyScan {
    pub te_ns: Vec<f64>,
    pub eps_probe_hghz: Vec<f64>,
    /// p1[probe index][delay index]
    pub p1: Vec<Vec<f64>>,
    /// Dominant fringe frequency per probe detuning (FFT peak).
    pub fft_peak_ghz: Vec<f64>,
    /// Qubit splitting of the model at each probe detuning.
    pub model_f01_ghz: Vec<f64>,
}

/// π/2 – detuning ramp – delay – ramp back – π/2 fringe scan.
#[allow(clippy::too_many_arguments)]
pub fn ramsey_scan(
    params: &ModelParams,
    noise: &NoiseModel,
    eps_op: f64,
    eps_probe_list: &[f64],
    te_grid: &[f64],
    pi2: &Pi2Calibration,
    f_mw: f64,
    t_ramp_ns: f64,
    edge_sigma_ns: f64,
) -> Result<RamseyScan> {
    params.validate()?;
    noise.validate()?;
    if te_grid.len() < 8 || eps_probe_list.is_empty() {
        return Err(Error::Invalid("ramsey scan needs >= 8 delays and >= 1 probe detuning".into()));
    }
    let dt = te_grid[1] - te_grid[0];
    if te_grid.windows(2).any(|w| (w[1] - w[0] - dt).abs() > 1e-9 * dt.abs()) {
        return Err(Error::Invalid("ramsey delay grid must be uniform".into()));
    }
    let ham = Ham::new(params);
    let offsets = noise.offsets();
    let rows: Vec<Vec<f64>> = eps_probe_list
        .par_iter()
        .map(|&ep| {
            let kernels: Vec<RamseyKernel> = offsets
                .iter()
                .map(|&off| {
                    ramsey_kernel(&ham, params, eps_op, ep, pi2, f_mw, t_ramp_ns, edge_sigma_ns, off)
                })
                .collect();
            te_grid
                .iter()
                .map(|&te| {
                    clip01(kernels.iter().map(|k| k.p1(te)).sum::<f64>() / kernels.len() as f64)
                })
                .collect()
        })
        .collect();
    let fft_peak_ghz: Vec<f64> = rows.iter().map(|row| fit::fft_peak_frequency(dt, row)).collect();
    let model_f01_ghz: Vec<f64> =
        eps_probe_list.iter().map(|&ep| qubit_splitting(ep, params)).collect();
    Ok(RamseyScan {
        te_ns: te_grid.to_vec(),
        eps_probe_hghz: eps_probe_list.to_vec(),
        p1: rows,
        fft_peak_ghz,
        model_f01_ghz,
    })
}

/// Gauss–Hermite nodes and weights for ∫e^{−x²}f(x)dx, from the
/// symmetric tridiagonal recurrence matrix (weights sum to √π).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        m[(k - 1, k)] = b;
        m[(k, k - 1)] = b;
    }
    let eig = m.symmetric_eigen();
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], sqrt_pi * eig.eigenvectors[(0, k)] * eig.eigenvectors[(0, k)]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gaussian-averaged Ramsey fringe envelope |⟨F(te)⟩| at the operating
/// point, using Gauss–Hermite quadrature over quasistatic offsets.
#[allow(clippy::too_many_arguments)]
fn ramsey_envelope_gh(
    ham: &Ham,
    params: &ModelParams,
    eps_op: f64,
    pi2: &Pi2Calibration,
    f_mw: f64,
    t_ramp_ns: f64,
    edge_sigma_ns: f64,
    sigma_eps: f64,
    te_grid: &[f64],
    nodes: &[f64],
    weights: &[f64],
) -> Vec<f64> {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let kernels: Vec<(f64, RamseyKernel)> = nodes
        .par_iter()
        .zip(weights)
        .map(|(&x, &w)| {
            let off = std::f64::consts::SQRT_2 * sigma_eps * x;
            (w / sqrt_pi, ramsey_kernel(ham, params, eps_op, eps_op, pi2, f_mw, t_ramp_ns, edge_sigma_ns, off))
        })
        .collect();
    te_grid
        .iter()
        .map(|&te| {
            let mut f = Complex64::ZERO;
            for (w, k) in &kernels {
                f += k.fringe(te) * *w;
            }
            f.norm()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SigmaCalibration {
    pub sigma_eps_hghz: f64,
    pub t2_star_ns: f64,
    pub tau_pi2_ns: f64,
}

/// Calibrate the quasistatic detuning-noise amplitude so the Ramsey
/// envelope at the operating point decays to 1/e of its initial value
/// at `target_t2_ns`. Bisection over `bracket`; the envelope time is
/// monotone decreasing in σ.
pub fn calibrate_sigma_eps(
    params: &ModelParams,
    eps_op: f64,
    a_cal: f64,
    f_mw: f64,
    edge_sigma_ns: f64,
    t_ramp_ns: f64,
    target_t2_ns: f64,
    bracket: (f64, f64),
) -> Result<SigmaCalibration> {
    params.validate()?;
    if !(bracket.0 > 0.0 && bracket.1 > bracket.0) {
        return Err(Error::Invalid("sigma bracket must satisfy 0 < lo < hi".into()));
    }
    let pi2 = calibrate_pi2(params, eps_op, a_cal, f_mw, edge_sigma_ns)?;
    let ham = Ham::new(params);
    let te_grid: Vec<f64> = (0..128).map(|i| 0.1 * i as f64).collect();
    let (nodes, weights) = gauss_hermite(80);
    let t2_of = |sigma: f64| -> Result<f64> {
        let env = ramsey_envelope_gh(
            &ham, params, eps_op, &pi2, f_mw, t_ramp_ns, edge_sigma_ns, sigma, &te_grid, &nodes,
            &weights,
        );
        fit::one_over_e_time(&te_grid, &env).ok_or_else(|| {
            Error::Numerical(format!("ramsey envelope does not reach 1/e for sigma = {sigma}"))
        })
    };
    let (mut lo, mut hi) = bracket;
    let t2_lo = t2_of(lo)?;
    let t2_hi = t2_of(hi)?;
    if !(t2_lo >= target_t2_ns && t2_hi <= target_t2_ns) {
        return Err(Error::Numerical(format!(
            "sigma bracket does not straddle the target: T2({lo}) = {t2_lo:.3}, T2({hi}) = {t2_hi:.3}, target {target_t2_ns}"
        )));
    }
    let mut mid = 0.5 * (lo + hi);
    let mut t2_mid = t2_of(mid)?;
    for _ in 0..12 {
        if t2_mid > target_t2_ns {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        t2_mid = t2_of(mid)?;
    }
    Ok(SigmaCalibration { sigma_eps_hghz: mid, t2_star_ns: t2_mid, tau_pi2_ns: pi2.tau_pi2_ns })
}

/// Dephasing envelope 1/e time for a given quasistatic noise amplitude
/// (the forward map that [`calibrate_sigma_eps`] inverts).
#[allow(clippy::too_many_arguments)]
pub fn t2_star_for_sigma(
    params: &ModelParams,
    eps_op: f64,
    a_cal: f64,
    f_mw: f64,
    edge_sigma_ns: f64,
    t_ramp_ns: f64,
    sigma_eps: f64,
) -> Result<f64> {
    let pi2 = calibrate_pi2(params, eps_op, a_cal, f_mw, edge_sigma_ns)?;
    let ham = Ham::new(params);
    let te_grid: Vec<f64> = (0..128).map(|i| 0.1 * i as f64).collect();
    let (nodes, weights) = gauss_hermite(80);
    let env = ramsey_envelope_gh(
        &ham, params, eps_op, &pi2, f_mw, t_ramp_ns, edge_sigma_ns, sigma_eps, &te_grid, &nodes,
        &weights,
    );
    fit::one_over_e_time(&te_grid, &env).ok_or_else(|| {
        Error::Numerical(format!("ramsey envelope does not reach 1/e for sigma = {sigma_eps}"))
    })
}

/// Sinusoid in quadrature form `p = offset + amplitude·sin(φ + phase)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TomoScan {
    pub phi_rad: Vec<f64>,
    pub p1_prep_plus: Vec<f64>,
    pub p1_prep_minus: Vec<f64>,
    pub fit_plus: QuadratureFit,
    pub fit_minus: QuadratureFit,
    /// |phase(+) − phase(−)| wrapped to [0, π].
    pub phase_diff_rad: f64,
}

fn quadrature_fit(phi: &[f64], y: &[f64]) -> QuadratureFit {
    let t: Vec<f64> = phi.iter().map(|&p| p / TWO_PI).collect();
    let (_, b, c, s) = fit::quadrature_lsq(&t, y, 1.0);
    QuadratureFit { offset: b, amplitude: c.hypot(s), phase_rad: c.atan2(s) }
}

/// Two-pulse phase tomography: prepare with a π/2 burst of phase 0
/// (plus) or π (minus), then analyze with a second π/2 burst of swept
/// phase φ. The two fitted fringes must sit π apart for orthogonal
/// preparations, with amplitude ≤ 1/2.
pub fn tomography_scan(
    params: &ModelParams,
    eps_op: f64,
    pi2: &Pi2Calibration,
    f_mw: f64,
    edge_sigma_ns: f64,
    n_phi: usize,
) -> Result<TomoScan> {
    params.validate()?;
    if n_phi < 8 {
        return Err(Error::Invalid("tomography needs >= 8 analysis phases".into()));
    }
    let phi: Vec<f64> = (0..n_phi).map(|i| TWO_PI * i as f64 / n_phi as f64).collect();
    let ham = Ham::new(params);
    let l = levels(eps_op, params);
    let psi0 = Vector4::from_fn(|i, _| Complex64::new(l.eigenvectors[(i, 0)], 0.0));
    let v1 = Vector4::from_fn(|i, _| Complex64::new(l.eigenvectors[(i, 1)], 0.0));
    let mut curves: Vec<Vec<f64>> = Vec::with_capacity(2);
    for prep_phase in [0.0, std::f64::consts::PI] {
        let prep =
            burst_segment(eps_op, pi2.a_cal_hghz, f_mw, prep_phase, pi2.tau_pi2_ns, edge_sigma_ns);
        let u_prep = segment_propagator(&ham, params, &prep, 0.0, 1.0);
        let prepared = u_prep * psi0;
        let row: Vec<f64> = phi
            .par_iter()
            .map(|&ph| {
                let ana =
                    burst_segment(eps_op, pi2.a_cal_hghz, f_mw, ph, pi2.tau_pi2_ns, edge_sigma_ns);
                let u = segment_propagator(&ham, params, &ana, 0.0, 1.0);
                clip01((v1.adjoint() * (u * prepared))[0].norm_sqr())
            })
            .collect();
        curves.push(row);
    }
    let fit_plus = quadrature_fit(&phi, &curves[0]);
    let fit_minus = quadrature_fit(&phi, &curves[1]);
    let mut d = (fit_plus.phase_rad - fit_minus.phase_rad).rem_euclid(TWO_PI);
    if d > std::f64::consts::PI {
        d = TWO_PI - d;
    }
    Ok(TomoScan {
        phi_rad: phi,
        p1_prep_plus: curves.swap_remove(0),
        p1_prep_minus: curves.pop().unwrap(),
        fit_plus,
        fit_minus,
        phase_diff_rad: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    const F01_OP: f64 = 1.613_326_430_308; // qubit splitting at eps = -40

    #[test]
    fn pi2_calibration_reference_point() {
        let p = params();
        let cal = calibrate_pi2(&p, -40.0, 2.0, F01_OP, 0.6).unwrap();
        assert_abs_diff_eq!(cal.f_rabi_ghz, 0.06951, epsilon = 5e-4);
        assert_abs_diff_eq!(cal.tau_pi2_ns, 5.647, epsilon = 0.02);
        assert!(cal.fit_r_squared > 0.99);
    }

    #[test]
    fn rabi_frequency_scales_linearly_with_amplitude() {
        let p = params();
        let taus: Vec<f64> = (0..52).map(|i| 0.4 + 0.5 * i as f64).collect();
        let scan = rabi_scan(
            &p,
            &NoiseModel::noiseless(),
            -40.0,
            F01_OP,
            &taus,
            &[1.0, 2.0, 3.0],
            0.6,
        )
        .unwrap();
        assert!(scan.fits.iter().all(|r| !r.flagged));
        let law = scan.frequency_vs_amplitude.unwrap();
        // slope is the charge-dipole matrix element at the operating point
        assert_abs_diff_eq!(law.slope, 0.034_977, epsilon = 5e-4);
        assert!(law.r_squared > 0.999, "r2 = {}", law.r_squared);
        assert!(law.intercept.abs() < 2e-3, "intercept {}", law.intercept);
    }

    #[test]
    fn short_bursts_are_edge_suppressed() {
        let p = params();
        for tau in [1.0, 1.5, 2.0] {
            let p1 = burst_p1(&p, -40.0, 4.0, F01_OP, 0.0, tau, 0.6, 0.0, 1.0);
            assert!(p1 < 0.05, "tau {tau}: P1 = {p1}");
        }
    }

    #[test]
    fn chevron_is_symmetric_off_resonance() {
        let p = params();
        // resonance shifts grow near full inversion, so stay away from
        // pulse areas close to odd multiples of pi
        for tau in [4.0, 8.0, 12.0] {
            for delta in [0.02, 0.05] {
                let hi = burst_p1(&p, -40.0, 1.0, F01_OP + delta, 0.0, tau, 0.6, 0.0, 1.0);
                let lo = burst_p1(&p, -40.0, 1.0, F01_OP - delta, 0.0, tau, 0.6, 0.0, 1.0);
                assert!(
                    (hi - lo).abs() <= 0.02,
                    "tau {tau} delta {delta}: asymmetry {}",
                    (hi - lo).abs()
                );
            }
        }
    }

    #[test]
    fn ramsey_fringe_matches_model_splitting() {
        let p = params();
        let cal = calibrate_pi2(&p, -40.0, 2.0, F01_OP, 0.6).unwrap();
        let te: Vec<f64> = (0..128).map(|i| 0.1 * i as f64).collect();
        let scan = ramsey_scan(
            &p,
            &NoiseModel::noiseless(),
            -40.0,
            &[-300.0, -80.0],
            &te,
            &cal,
            F01_OP,
            1.5,
            0.6,
        )
        .unwrap();
        for (i, &ep) in scan.eps_probe_hghz.iter().enumerate() {
            let dev = (scan.fft_peak_ghz[i] - scan.model_f01_ghz[i]).abs();
            assert!(dev < 0.005, "probe {ep}: fringe off by {dev}");
        }
    }

    #[test]
    fn ramsey_zero_delay_is_near_full_inversion() {
        let p = params();
        let cal = calibrate_pi2(&p, -40.0, 2.0, F01_OP, 0.6).unwrap();
        let te: Vec<f64> = (0..8).map(|i| 0.1 * i as f64).collect();
        let scan = ramsey_scan(
            &p,
            &NoiseModel::noiseless(),
            -40.0,
            &[-40.0],
            &te,
            &cal,
            F01_OP,
            1.5,
            0.6,
        )
        .unwrap();
        let row = &scan.p1[0];
        // two pi/2 pulses back to back act as a pi pulse; the first
        // fringe period never beats the zero-delay point by more than
        // fit slack
        let max_first = row.iter().cloned().fold(0.0f64, f64::max);
        assert!(row[0] > 0.95, "P1(0) = {}", row[0]);
        assert!(row[0] >= max_first - 0.02, "P1(0) = {} vs max {}", row[0], max_first);
    }

    #[test]
    fn gauss_hermite_moments() {
        for n in [5usize, 24, 80] {
            let (x, w) = gauss_hermite(n);
            let sqrt_pi = std::f64::consts::PI.sqrt();
            let m0: f64 = w.iter().sum();
            let m2: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi * xi).sum();
            let m4: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(4)).sum();
            assert_abs_diff_eq!(m0, sqrt_pi, epsilon = 1e-12);
            assert_abs_diff_eq!(m2, sqrt_pi / 2.0, epsilon = 1e-11);
            assert_abs_diff_eq!(m4, 3.0 * sqrt_pi / 4.0, epsilon = 1e-10);
            // nodes are symmetric about zero
            for k in 0..n / 2 {
                assert_abs_diff_eq!(x[k], -x[n - 1 - k], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn dephasing_time_tracks_noise_amplitude() {
        let p = params();
        // forward map frozen against two reference noise amplitudes
        let t2_a = t2_star_for_sigma(&p, -40.0, 2.0, F01_OP, 0.6, 1.5, 0.4688).unwrap();
        let t2_b = t2_star_for_sigma(&p, -40.0, 2.0, F01_OP, 0.6, 1.5, 0.6375).unwrap();
        assert_abs_diff_eq!(t2_a, 9.488, epsilon = 0.15);
        assert_abs_diff_eq!(t2_b, 5.973, epsilon = 0.15);
        assert!(t2_a > t2_b);
    }

    #[test]
    fn tomography_fringes_sit_pi_apart() {
        let p = params();
        let cal = calibrate_pi2(&p, -40.0, 2.0, F01_OP, 0.6).unwrap();
        let scan = tomography_scan(&p, -40.0, &cal, F01_OP, 0.6, 24).unwrap();
        assert_abs_diff_eq!(scan.phase_diff_rad, std::f64::consts::PI, epsilon = 0.01);
        assert!(scan.fit_plus.amplitude <= 0.5 + 1e-6);
        assert!(scan.fit_minus.amplitude <= 0.5 + 1e-6);
        assert!(scan.fit_plus.amplitude > 0.45);
        assert_abs_diff_eq!(scan.fit_plus.offset, 0.5, epsilon = 0.02);
    }
}
