//! `hqsim` binary: parse arguments, cap the worker pool, dispatch to a
//! runner, and map failures onto exit codes with machine-readable
//! error JSON on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hqsim::config;
use hqsim::runners::{self, RunOpts};
use hqsim_core::error::Error;

const CONFIG_KEY_HELP: &str = "\
CONFIGURATION KEYS (one JSON file; every section is optional and falls back to
the fitted device defaults; unknown keys are rejected):

  seed                    integer   master seed for stochastic commands (default 0)
  out_dir                 string    artifact directory (default \"out\")

  model.delta_L_ghz       h GHz     left-configuration excited-state offset
  model.delta_R_ghz       h GHz     right-configuration excited-state offset
  model.t_ghz             [4] h GHz tunnel couplings [t1, t2, t3, t4]
  model.lever_arm         eV/V      gate-voltage lever arm

  noise.sigma_eps_quasistatic_hghz  h GHz  std dev of the per-shot detuning offset
  noise.t1_table          [[h GHz, ns]]    relaxation-time knots, eps ascending
  noise.n_realizations    integer   quasistatic averages per scan point
  noise.seed              integer   noise stream seed (run seed overrides)

  sensor.t_meas_us        us        measurement window
  sensor.internal_rate_mhz MHz      internal synthesis sampling rate
  sensor.t_int_us         us        detector integration time
  sensor.tau_out_us       us        mean tunnel-out time of the excited state
  sensor.tau_in_us        us        mean tunnel-back time
  sensor.t1_us            us        excited-state relaxation time
  sensor.p_thermal        1         ground-trace thermal-blip probability
  sensor.snr              1         blip amplitude over detector noise
  sensor.level_base       arb       sensor level with the electron in place
  sensor.level_blip       arb       sensor level while the electron is out

  spectrum.eps_min_hghz   h GHz     detuning scan start
  spectrum.eps_max_hghz   h GHz     detuning scan end
  spectrum.n_points       integer   scan points
  spectrum.target_splitting_ghz GHz|null  report a detuning with this splitting
  spectrum.target_bracket_hghz [2] h GHz|null  bisection bracket for the target

  rabi.eps_op_hghz        h GHz     operating detuning
  rabi.f_mw_ghz           GHz|null  drive frequency (null = resonant)
  rabi.tau_min_ns         ns        shortest burst
  rabi.tau_max_ns         ns        longest burst
  rabi.n_tau              integer   burst-length points
  rabi.amplitudes_hghz    [] h GHz  drive amplitudes (one chevron row each)
  rabi.edge_sigma_ns      ns        Gaussian envelope edge width
  rabi.use_noise          bool      apply the noise section (default false)

  ramsey.eps_op_hghz      h GHz     pulse operating detuning
  ramsey.a_cal_hghz       h GHz     pi/2 calibration amplitude
  ramsey.f_mw_ghz         GHz|null  drive frequency (null = resonant)
  ramsey.eps_probe_hghz   [] h GHz  probe detunings for the free evolution
  ramsey.te_min_ns        ns        first delay
  ramsey.te_step_ns       ns        delay step (uniform grid)
  ramsey.n_te             integer   delay points
  ramsey.t_ramp_ns        ns        detuning ramp time to/from the probe
  ramsey.edge_sigma_ns    ns        Gaussian envelope edge width
  ramsey.use_noise        bool      average over quasistatic noise (default false)

  tomo.eps_op_hghz        h GHz     operating detuning
  tomo.a_cal_hghz         h GHz     pi/2 calibration amplitude
  tomo.f_mw_ghz           GHz|null  drive frequency (null = resonant)
  tomo.n_phi              integer   analysis phases over one turn
  tomo.edge_sigma_ns      ns        Gaussian envelope edge width

  traces.n_traces         integer   shots to synthesize
  traces.p1_true          1         true excited-state probability
  traces.n_csv            integer   how many traces to also export as CSV

  fidelity.n_traces       integer   shots for the threshold sweep
  fidelity.p1_true        1         true excited-state probability
  fidelity.fit_tunnel_times bool    also fit tau_out/tau_in on the batch

  fci.potential           string    \"harmonic\" | \"gaussian\" | \"csv\"
  fci.nx, fci.ny          integer   grid points per axis
  fci.lx_nm, fci.ly_nm    nm        Dirichlet box extents (analytic wells)
  fci.hw_x_mev, fci.hw_y_mev meV    harmonic level spacings
  fci.depth_mev           meV       gaussian well depth
  fci.sigma_x_nm, fci.sigma_y_nm nm gaussian well widths
  fci.csv_path            string    potential file (# nx,ny,hx_nm,hy_nm header)
  fci.m_star              1         effective mass over the electron mass
  fci.kappa               1         relative dielectric constant
  fci.n_spatial           integer   single-particle orbitals kept
  fci.k_lowest            integer   eigenvalues resolved per interaction scale
  fci.lambda_grid         [] 1      interaction scales in [0, 1]
  fci.regularization_nm   nm|null   Coulomb softening length (null = min h/2)
  fci.memory_cap_mb       MiB       integral-table memory cap

ENVIRONMENT:
  HQSIM_THREADS           integer   caps worker parallelism (0 or unset = auto)

EXIT CODES:
  0 success, 2 configuration/schema error, 3 numerical failure, 4 I/O failure.
Failures print one JSON object to stderr: {\"error_code\", \"message\", \"context\"}.";

/// Hybrid-qubit simulation toolkit: energy spectra, driven dynamics,
/// single-shot readout synthesis, and two-electron interaction
/// quenching, with CSV/JSON/SVG artifacts.
#[derive(Parser)]
#[command(name = "hqsim", version, after_help = CONFIG_KEY_HELP)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config artifact directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render SVG quick-look figures.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Energy levels and qubit splitting over a detuning scan.
    Spectrum(RunArgs),
    /// Chevron map of driven oscillations vs burst length and amplitude.
    Rabi(RunArgs),
    /// Free-evolution fringes at a set of probe detunings.
    Ramsey(RunArgs),
    /// Two-pulse phase tomography of +Y / -Y preparations.
    Tomo(RunArgs),
    /// Synthesize single-shot sensor traces.
    Traces(RunArgs),
    /// Threshold sweep, optimal fidelities, and tunnel-time fits.
    Fidelity(RunArgs),
    /// Two-electron interaction quenching of the orbital splitting.
    Fci(RunArgs),
    /// Check a configuration file without running anything.
    Validate {
        /// JSON configuration file.
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Invalid(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn fail(e: &Error, command: &str, config: &PathBuf) -> ExitCode {
    let payload = serde_json::json!({
        "error_code": e.code(),
        "message": e.to_string(),
        "context": { "command": command, "config": config.display().to_string() },
    });
    eprintln!("{payload}");
    ExitCode::from(exit_code_for(e))
}

fn init_thread_pool() -> Result<(), String> {
    let Ok(raw) = std::env::var("HQSIM_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("HQSIM_THREADS must be a non-negative integer, got {raw:?}"))?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("failed to build the worker pool: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_thread_pool() {
        let payload = serde_json::json!({
            "error_code": "config_schema",
            "message": msg,
            "context": { "source": "HQSIM_THREADS" },
        });
        eprintln!("{payload}");
        return ExitCode::from(2);
    }

    let (name, args): (&str, &RunArgs) = match &cli.cmd {
        Command::Spectrum(a) => ("spectrum", a),
        Command::Rabi(a) => ("rabi", a),
        Command::Ramsey(a) => ("ramsey", a),
        Command::Tomo(a) => ("tomo", a),
        Command::Traces(a) => ("traces", a),
        Command::Fidelity(a) => ("fidelity", a),
        Command::Fci(a) => ("fci", a),
        Command::Validate { config } => {
            return match config::load(config) {
                Ok(cfg) => {
                    let diags = config::diagnostics(&cfg);
                    println!("{}", serde_json::json!(diags));
                    if diags.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(2)
                    }
                }
                Err(e) => fail(&e, "validate", config),
            };
        }
    };

    let cfg = match config::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e, name, &args.config),
    };
    let opts = RunOpts::resolve(&cfg, args.seed, args.out.clone(), args.svg);
    let run = match name {
        "spectrum" => runners::run_spectrum(&cfg, &opts),
        "rabi" => runners::run_rabi(&cfg, &opts),
        "ramsey" => runners::run_ramsey(&cfg, &opts),
        "tomo" => runners::run_tomo(&cfg, &opts),
        "traces" => runners::run_traces(&cfg, &opts),
        "fidelity" => runners::run_fidelity(&cfg, &opts),
        _ => runners::run_fci(&cfg, &opts),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e, name, &args.config),
    }
}
