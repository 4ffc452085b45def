//! One runner per command: build the request from the merged
//! configuration, call the library, write the artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use hqsim_core::error::{Error, Result};
use hqsim_core::io;
use hqsim_core::model::{dispersion_scan, find_detuning_for_splitting, qubit_splitting};
use hqsim_core::pulse::scans::{
    calibrate_pi2, rabi_scan, ramsey_scan, tomography_scan, Pi2Calibration,
};
use hqsim_core::pulse::NoiseModel;
use hqsim_core::readout::fidelity::{fidelity_scan, tunnel_time_mle, TunnelTimeFit};
use hqsim_core::readout::synthesize_batch;

use crate::config::AppConfig;
use crate::svg;

/// Flag-resolved run options.
#[derive(Debug, Clone)]
pub struct RunOpts {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub emit_svg: bool,
}

impl RunOpts {
    /// Merge `--seed`/`--out`/`--svg` over the config scalars.
    pub fn resolve(
        cfg: &AppConfig,
        seed: Option<u64>,
        out: Option<PathBuf>,
        emit_svg: bool,
    ) -> Self {
        RunOpts {
            seed: seed.unwrap_or(cfg.seed),
            out_dir: out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir)),
            emit_svg,
        }
    }
}

fn ensure_out(opts: &RunOpts) -> Result<()> {
    fs::create_dir_all(&opts.out_dir)?;
    Ok(())
}

fn write_svg(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body)?;
    Ok(())
}

/// The noise model a pulse command actually runs with: the section is
/// applied only when the command opts in, and the run seed replaces
/// the section seed.
fn effective_noise(cfg: &AppConfig, use_noise: bool, seed: u64) -> NoiseModel {
    if use_noise {
        NoiseModel { seed, ..cfg.noise.clone() }
    } else {
        NoiseModel::noiseless()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

#[derive(Serialize)]
struct SpectrumSummary {
    eps_min_hghz: f64,
    eps_max_hghz: f64,
    n_points: usize,
    f_qubit_left_ghz: f64,
    f_qubit_right_ghz: f64,
    min_f_qubit_ghz: f64,
    eps_at_min_hghz: f64,
    target_splitting_ghz: Option<f64>,
    eps_at_target_hghz: Option<f64>,
}

pub fn run_spectrum(cfg: &AppConfig, opts: &RunOpts) -> Result<()> {
    let s = &cfg.spectrum;
    if s.n_points < 2 || !(s.eps_min_hghz < s.eps_max_hghz) {
        return Err(Error::Invalid(format!(
            "spectrum needs n_points >= 2 and eps_min < eps_max, got {} on [{}, {}]",
            s.n_points, s.eps_min_hghz, s.eps_max_hghz
        )));
    }
    ensure_out(opts)?;
    let grid = linspace(s.eps_min_hghz, s.eps_max_hghz, s.n_points);
    let rows = dispersion_scan(&grid, &cfg.model)?;
    io::write_table_csv(
        opts.out_dir.join("dispersion.csv"),
        &["eps_hghz", "E0", "E1", "E2", "E3", "f_qubit_ghz"],
        rows.iter().map(|r| {
            vec![r.eps_hghz, r.levels[0], r.levels[1], r.levels[2], r.levels[3], r.f_qubit_ghz]
        }),
    )?;
    let (mut min_f, mut eps_min_f) = (f64::INFINITY, grid[0]);
    for r in &rows {
        if r.f_qubit_ghz < min_f {
            min_f = r.f_qubit_ghz;
            eps_min_f = r.eps_hghz;
        }
    }
    let eps_at_target = match s.target_splitting_ghz {
        Some(target) => {
            let bracket = s.target_bracket_hghz.unwrap_or((s.eps_min_hghz, eps_min_f));
            Some(find_detuning_for_splitting(target, bracket, &cfg.model)?)
        }
        None => None,
    };
    io::write_json(
        opts.out_dir.join("spectrum_summary.json"),
        &SpectrumSummary {
            eps_min_hghz: s.eps_min_hghz,
            eps_max_hghz: s.eps_max_hghz,
            n_points: s.n_points,
            f_qubit_left_ghz: rows.first().unwrap().f_qubit_ghz,
            f_qubit_right_ghz: rows.last().unwrap().f_qubit_ghz,
            min_f_qubit_ghz: min_f,
            eps_at_min_hghz: eps_min_f,
            target_splitting_ghz: s.target_splitting_ghz,
            eps_at_target_hghz: eps_at_target,
        },
    )?;
    if opts.emit_svg {
        let x: Vec<f64> = rows.iter().map(|r| r.eps_hghz).collect();
        let f: Vec<f64> = rows.iter().map(|r| r.f_qubit_ghz).collect();
        write_svg(
            &opts.out_dir.join("dispersion.svg"),
            &svg::polyline_figure(
                "detuning (h GHz)",
                "qubit splitting (GHz)",
                &[("f01", &x, &f)],
            ),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RabiSummary<'a> {
    eps_op_hghz: f64,
    f_mw_ghz: f64,
    edge_sigma_ns: f64,
    scan: &'a hqsim_core::pulse::scans::RabiScan,
}

pub fn run_rabi(cfg: &AppConfig, opts: &RunOpts) -> Result<()> {
    let r = &cfg.rabi;
    if r.n_tau < 8 || !(r.tau_min_ns > 0.0 && r.tau_min_ns < r.tau_max_ns) {
        return Err(Error::Invalid(format!(
            "rabi needs n_tau >= 8 and 0 < tau_min < tau_max, got {} on [{}, {}]",
            r.n_tau, r.tau_min_ns, r.tau_max_ns
        )));
    }
    ensure_out(opts)?;
    let f_mw = r.f_mw_ghz.unwrap_or_else(|| qubit_splitting(r.eps_op_hghz, &cfg.model));
    let noise = effective_noise(cfg, r.use_noise, opts.seed);
    let taus = linspace(r.tau_min_ns, r.tau_max_ns, r.n_tau);
    let scan = rabi_scan(
        &cfg.model,
        &noise,
        r.eps_op_hghz,
        f_mw,
        &taus,
        &r.amplitudes_hghz,
        r.edge_sigma_ns,
    )?;
    io::write_table_csv(
        opts.out_dir.join("rabi.csv"),
        &["x", "y", "p1"],
        scan.a_eps_hghz.iter().enumerate().flat_map(|(ai, &a)| {
            let p = &scan.p1[ai];
            scan.tau_ns.iter().zip(p).map(move |(&tau, &p1)| vec![tau, a, p1]).collect::<Vec<_>>()
        }),
    )?;
    io::write_table_csv(
        opts.out_dir.join("rabi_fits.csv"),
        &["a_eps_hghz", "f_rabi_ghz", "amplitude", "r_squared", "flagged"],
        scan.fits.iter().map(|f| {
            vec![
                f.a_eps_hghz,
                f.f_rabi_ghz.unwrap_or(f64::NAN),
                f.amplitude.unwrap_or(f64::NAN),
                f.r_squared.unwrap_or(f64::NAN),
                f64::from(u8::from(f.flagged)),
            ]
        }),
    )?;
    io::write_json(
        opts.out_dir.join("rabi_summary.json"),
        &RabiSummary {
            eps_op_hghz: r.eps_op_hghz,
            f_mw_ghz: f_mw,
            edge_sigma_ns: r.edge_sigma_ns,
            scan: &scan,
        },
    )?;
    if opts.emit_svg {
        write_svg(
            &opts.out_dir.join("rabi.svg"),
            &svg::heatmap_figure(
                "burst length (ns)",
                "drive amplitude (h GHz)",
                &scan.tau_ns,
                &scan.a_eps_hghz,
                &scan.p1,
            ),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RamseySummary<'a> {
    eps_op_hghz: f64,
    f_mw_ghz: f64,
    t_ramp_ns: f64,
    pi2: Pi2Calibration,
    scan: &'a hqsim_core::pulse::scans::RamseyScan,
}

pub fn run_ramsey(cfg: &AppConfig, opts: &RunOpts) -> Result<()> {
    let r = &cfg.ramsey;
    if r.n_te < 8 || !(r.te_step_ns > 0.0) {
        return Err(Error::Invalid(format!(
            "ramsey needs n_te >= 8 and te_step > 0, got {} x {}",
            r.n_te, r.te_step_ns
        )));
    }
    ensure_out(opts)?;
    let f_mw = r.f_mw_ghz.unwrap_or_else(|| qubit_splitting(r.eps_op_hghz, &cfg.model));
    let pi2 = calibrate_pi2(&cfg.model, r.eps_op_hghz, r.a_cal_hghz, f_mw, r.edge_sigma_ns)?;
    let te: Vec<f64> = (0..r.n_te).map(|i| r.te_min_ns + r.te_step_ns * i as f64).collect();
    let noise = effective_noise(cfg, r.use_noise, opts.seed);
    let scan = ramsey_scan(
        &cfg.model,
        &noise,
        r.eps_op_hghz,
        &r.eps_probe_hghz,
        &te,
        &pi2,
        f_mw,
        r.t_ramp_ns,
        r.edge_sigma_ns,
    )?;
    io::write_table_csv(
        opts.out_dir.join("ramsey.csv"),
        &["x", "y", "p1"],
        scan.eps_probe_hghz.iter().enumerate().flat_map(|(pi, &ep)| {
            let row = &scan.p1[pi];
            scan.te_ns.iter().zip(row).map(move |(&t, &p1)| vec![t, ep, p1]).collect::<Vec<_>>()
        }),
    )?;
    io::write_table_csv(
        opts.out_dir.join("ramsey_peaks.csv"),
        &["eps_probe_hghz", "fft_peak_ghz", "model_f01_ghz"],
        (0..scan.eps_probe_hghz.len())
            .map(|i| vec![scan.eps_probe_hghz[i], scan.fft_peak_ghz[i], scan.model_f01_ghz[i]]),
    )?;
    io::write_json(
        opts.out_dir.join("ramsey_summary.json"),
        &RamseySummary {
            eps_op_hghz: r.eps_op_hghz,
            f_mw_ghz: f_mw,
            t_ramp_ns: r.t_ramp_ns,
            pi2,
            scan: &scan,
        },
    )?;
    if opts.emit_svg {
        write_svg(
            &opts.out_dir.join("ramsey.svg"),
            &svg::heatmap_figure(
                "free evolution time (ns)",
                "probe detuning (h GHz)",
                &scan.te_ns,
                &scan.eps_probe_hghz,
                &scan.p1,
            ),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TomoSummary<'a> {
    eps_op_hghz: f64,
    f_mw_ghz: f64,
    pi2: Pi2Calibration,
    scan: &'a hqsim_core::pulse::scans::TomoScan,
}

pub fn run_tomo(cfg: &AppConfig, opts: &RunOpts) -> Result<()> {
    let t = &cfg.tomo;
    ensure_out(opts)?;
    let f_mw = t.f_mw_ghz.unwrap_or_else(|| qubit_splitting(t.eps_op_hghz, &cfg.model));
    let pi2 = calibrate_pi2(&cfg.model, t.eps_op_hghz, t.a_cal_hghz, f_mw, t.edge_sigma_ns)?;
    let scan = tomography_scan(&cfg.model, t.eps_op_hghz, &pi2, f_mw, t.edge_sigma_ns, t.n_phi)?;
    io::write_table_csv(
        opts.out_dir.join("tomo.csv"),
        &["phi_rad", "p1_plus", "p1_minus"],
        (0..scan.phi_rad.len())
            .map(|i| vec![scan.phi_rad[i], scan.p1_prep_plus[i], scan.p1_prep_minus[i]]),
    )?;
    io::write_json(
        opts.out_dir.join("tomo_summary.json"),
        &TomoSummary { eps_op_hghz: t.eps_op_hghz, f_mw_ghz: f_mw, pi2, scan: &scan },
    )?;
    if opts.emit_svg {
        write_svg(
            &opts.out_dir.join("tomo.svg"),
            &svg::polyline_figure(
                "analysis phase (rad)",
                "P1",
                &[
                    ("prep +Y", &scan.phi_rad, &scan.p1_prep_plus),
                    ("prep -Y", &scan.phi_rad, &scan.p1_prep_minus),
                ],
            ),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TracesSummary {
    n_traces: usize,
    p1_true: f64,
    seed: u64,
    n_excited_true: usize,
    n_with_blip: usize,
    dt_us: f64,
    samples_per_trace: usize,
}

pub fn run_traces(cfg: &AppConfig, opts: &RunOpts) -> Result<()> {
    let t = &cfg.traces;
    if t.n_traces == 0 {
        return Err(Error::Invalid("traces: n_traces must be >= 1".into()));
    }
    ensure_out(opts)?;
    let batch = synthesize_batch(&cfg.sensor, t.n_traces, t.p1_true, opts.seed)?;
    let dt = cfg.sensor.dt_detector_us();
    io::write_traces(opts.out_dir.join("traces.bin"), dt, &batch)?;
    for (i, tr) in batch.iter().take(t.n_csv).enumerate() {
        io::write_table_csv(
            opts.out_dir.join(format!("trace_{i:03}.csv")),
            &["t_us", "value"],
            tr.samples.iter().enumerate().map(|(k, &v)| vec![(k + 1) as f64 * dt, v]),
        )?;
    }
    io::write_json(
        opts.out_dir.join("traces_summary.json"),
        &TracesSummary {
            n_traces: t.n_traces,
            p1_true: t.p1_true,
            seed: opts.seed,
            n_excited_true: batch.iter().filter(|t| t.label == 1).count(),
            n_with_blip: batch.iter().filter(|t| t.had_blip).count(),
            dt_us: dt,
            samples_per_trace: batch.first().map_or(0, |t| t.samples.len()),
        },
    )?;
    if opts.emit_svg {
        let first = &batch[0];
        let x: Vec<f64> = (0..first.samples.len()).map(|k| (k + 1) as f64 * dt).collect();
        write_svg(
            &opts.out_dir.join("trace_000.svg"),
            &svg::polyline_figure("time (us)", "sensor signal", &[("trace 0", &x, &first.samples)]),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FidelitySummary {
    n_traces: usize,
    p1_true: f64,
    seed: u64,
    v_opt: f64,
    f0_opt: f64,
    f1_opt: f64,
    visibility_opt: f64,
    n_ground: usize,
    n_excited: usize,
    tunnel_fit: Option<TunnelTimeFit>,
}

pub fn run_fidelity(cfg: &AppConfig, opts: &RunOpts) -> Result<()> {
    let f = &cfg.fidelity;
    if f.n_traces == 0 {
        return Err(Error::Invalid("fidelity: n_traces must be >= 1".into()));
    }
    ensure_out(opts)?;
    let batch = synthesize_batch(&cfg.sensor, f.n_traces, f.p1_true, opts.seed)?;
    let report = fidelity_scan(&batch, &cfg.sensor)?;
    io::write_table_csv(
        opts.out_dir.join("fidelity.csv"),
        &["threshold", "F0", "F1", "visibility"],
        (0..report.thresholds.len())
            .map(|i| vec![report.thresholds[i], report.f0[i], report.f1[i], report.visibility[i]]),
    )?;
    let tunnel_fit =
        if f.fit_tunnel_times { Some(tunnel_time_mle(&batch, &cfg.sensor)?) } else { None };
    io::write_json(
        opts.out_dir.join("fidelity_summary.json"),
        &FidelitySummary {
            n_traces: f.n_traces,
            p1_true: f.p1_true,
            seed: opts.seed,
            v_opt: report.v_opt,
            f0_opt: report.f0_opt,
            f1_opt: report.f1_opt,
            visibility_opt: report.visibility_opt,
            n_ground: report.n_ground,
            n_excited: report.n_excited,
            tunnel_fit,
        },
    )?;
    if opts.emit_svg {
        write_svg(
            &opts.out_dir.join("fidelity.svg"),
            &svg::polyline_figure(
                "threshold",
                "fraction",
                &[
                    ("F0", &report.thresholds, &report.f0),
                    ("F1", &report.thresholds, &report.f1),
                    ("visibility", &report.thresholds, &report.visibility),
                ],
            ),
        )?;
    }
    Ok(())
}

pub fn run_fci(cfg: &AppConfig, opts: &RunOpts) -> Result<()> {
    ensure_out(opts)?;
    let problem = cfg.fci.build_problem()?;
    let run = problem.run(&cfg.fci.lambda_grid)?;
    io::write_table_csv(
        opts.out_dir.join("fci.csv"),
        &["lambda", "E0_hghz", "E1_hghz", "splitting_hghz"],
        run.rows.iter().map(|r| vec![r.lambda, r.e0_hghz, r.e1_hghz, r.splitting_hghz]),
    )?;
    io::write_json(opts.out_dir.join("fci_summary.json"), &run)?;
    if opts.emit_svg {
        let x: Vec<f64> = run.rows.iter().map(|r| r.lambda).collect();
        let y: Vec<f64> = run.rows.iter().map(|r| r.splitting_hghz).collect();
        write_svg(
            &opts.out_dir.join("fci.svg"),
            &svg::polyline_figure(
                "interaction scale",
                "splitting (h GHz)",
                &[("E1 - E0", &x, &y)],
            ),
        )?;
    }
    Ok(())
}
