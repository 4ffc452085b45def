//! Cross-module integration: thread-count independence of batch
//! synthesis, config-driven solver runs, and potential-file round
//! trips.

use hqsim_core::fci::{self, FciConfig, Material, PotentialGrid};
use hqsim_core::io;
use hqsim_core::readout::{synthesize_batch, TraceConfig};

#[test]
fn batch_synthesis_is_independent_of_worker_count() {
    let cfg = TraceConfig { t_meas_us: 60.0, ..TraceConfig::default() };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| synthesize_batch(&cfg, 64, 0.4, 11).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one.len(), three.len());
    for (a, b) in one.iter().zip(&three) {
        assert_eq!(a.label, b.label);
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.t_out_us, b.t_out_us);
    }
}

#[test]
fn config_driven_quench_run_is_monotone() {
    let cfg: FciConfig = serde_json::from_str(
        r#"{
            "nx": 24, "ny": 24, "lx_nm": 260.0, "ly_nm": 110.0,
            "hw_x_mev": 0.7, "hw_y_mev": 2.4,
            "n_spatial": 8, "k_lowest": 4,
            "lambda_grid": [0.0, 0.5, 1.0]
        }"#,
    )
    .unwrap();
    cfg.validate().unwrap();
    let problem = cfg.build_problem().unwrap();
    let run = problem.run(&cfg.lambda_grid).unwrap();

    assert_eq!(run.det_counts, (1, 28, 91));
    assert!(run.wigner.unwrap() > 1.0, "elongated shallow well should be interaction-dominated");
    assert!(run.orthonormality_defect < 1e-8);
    assert!(run.residual_defect < 1e-6);
    for w in run.rows.windows(2) {
        assert!(
            w[1].splitting_hghz < w[0].splitting_hghz,
            "splitting must shrink with interaction strength: {:?}",
            run.rows
        );
    }
    for row in &run.rows {
        assert!(row.splitting_hghz > 0.0);
        assert_eq!(row.splitting_hghz, row.e1_hghz - row.e0_hghz);
    }
}

#[test]
fn potential_csv_round_trip_matches_in_memory_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("well.csv");
    let grid =
        PotentialGrid::gaussian_well(20, 16, 6.0, 6.0, 3.0, 40.0, 22.0, Material::default())
            .unwrap();
    io::write_potential_csv(&path, &grid).unwrap();

    let cfg: FciConfig = serde_json::from_str(&format!(
        r#"{{"potential": "csv", "csv_path": {:?}, "n_spatial": 5, "k_lowest": 3,
            "lambda_grid": [0.0]}}"#,
        path.to_str().unwrap()
    ))
    .unwrap();
    let from_file = cfg.build_problem().unwrap();
    assert_eq!(from_file.grid.nx, 20);
    assert_eq!(from_file.grid.ny, 16);

    let direct = fci::solve_basis(&grid, 5).unwrap();
    let via_csv = fci::solve_basis(&from_file.grid, 5).unwrap();
    for (a, b) in direct.energies_hghz.iter().zip(&via_csv.energies_hghz) {
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
    }
}
