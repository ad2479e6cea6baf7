use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hic_cli::commands::{run_landscape, run_sweep};
use hic_cli::config::{parse_config, Config};
use hic_cli::table::{parse_csv, OutputTable};
use hic_core::interaction::{build_joint_state, project, CouplingParams, SignalMode};
use hic_core::polarization::PoincareBasis;
use tempfile::TempDir;

fn hic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_table(out: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    parse_csv(&String::from_utf8(out.stdout.clone()).unwrap()).expect("numeric csv")
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i]).collect()
}

const THETA_SWEEP: &str = "[sweep]\nvariable = theta\nstart = 0\nstop = 180\nn_points = 181\nphi = 180\n";

fn ideal_config() -> Config {
    parse_config(THETA_SWEEP).unwrap()
}

fn value(t: &OutputTable, row: usize, name: &str) -> f64 {
    t.rows()[row][t.column_index(name).unwrap()]
}

#[test]
fn theta_sweep_reference_rows() {
    let cfg = ideal_config();
    let table = run_sweep(cfg.sweep.as_ref().unwrap(), &cfg).unwrap();
    assert_eq!(table.rows().len(), 181);
    assert_eq!(value(&table, 0, "gain_ideal"), 1.0);
    assert_eq!(value(&table, 0, "phase_ideal"), 0.0);

    let flagged: Vec<f64> = table
        .rows()
        .iter()
        .filter(|r| r[table.column_index("fock_projected").unwrap()] == 1.0)
        .map(|r| r[0])
        .collect();
    assert_eq!(flagged, vec![90.0]);
    assert!(value(&table, 90, "gain_ideal").is_nan());

    let signal = SignalMode::from_mean_photon_number(0.2).unwrap();
    let coupling = CouplingParams::resonant(8.6).unwrap();
    for deg in [64usize, 118] {
        let b = PoincareBasis::from_degrees(deg as f64, 180.0).unwrap();
        let expected = project(&build_joint_state(&signal, &coupling), &b);
        assert!((value(&table, deg, "gain_ideal") - expected.gain.unwrap()).abs() < 1e-9);
        assert!((value(&table, deg, "phase_ideal") - expected.phase_shift.unwrap()).abs() < 1e-9);
        assert!((value(&table, deg, "p1_ideal") - expected.p1).abs() < 1e-9);
    }
    assert!((value(&table, 64, "gain_ideal") - 6.21).abs() < 0.01);
    assert!((value(&table, 64, "p1_ideal") - 0.1030).abs() < 5e-4);
}

#[test]
fn ideal_columns_ignore_noise_and_geometry() {
    let base = ideal_config();
    let variants = [
        "[noise]\nepsilon = 0.3\nqe = 0.9\njitter_deg = 3\n",
        "[geometry]\nfinesse = 1000\nw_c = 1e-5\nsigma_axial = 0\n",
        "[noise]\nepsilon = 0\n[geometry]\nlambda = 7.8e-7\nnodes = 11\n",
    ];
    let reference = run_sweep(base.sweep.as_ref().unwrap(), &base).unwrap();
    for extra in variants {
        let cfg = parse_config(&format!("{THETA_SWEEP}model = imperfect\n{extra}")).unwrap();
        let table = run_sweep(cfg.sweep.as_ref().unwrap(), &cfg).unwrap();
        for name in ["theta", "phi", "gain_ideal", "phase_ideal", "p1_ideal", "fock_projected"] {
            let a: Vec<u64> = reference.column(name).unwrap().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = table.column(name).unwrap().iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b, "column {name} with {extra:?}");
        }
    }
}

#[test]
fn landscape_peak_and_gain_40_row() {
    let cfg = parse_config("[landscape]\ngain_min = 1\ngain_max = 10\ngain_points = 19\nphase_points = 37\n").unwrap();
    let table = run_landscape(&cfg).unwrap();
    let p1 = table.column("p1").unwrap();
    let gain = table.column("gain").unwrap();
    let phase = table.column("phase").unwrap();
    let best = (0..p1.len())
        .filter(|&i| !p1[i].is_nan())
        .max_by(|&a, &b| p1[a].total_cmp(&p1[b]))
        .unwrap();
    assert_eq!((gain[best], phase[best]), (1.0, 0.0));

    let mut along_zero: Vec<(f64, f64)> = (0..p1.len())
        .filter(|&i| phase[i] == 0.0)
        .map(|i| (gain[i], p1[i]))
        .collect();
    along_zero.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(along_zero.len() > 5);
    assert!(along_zero.windows(2).all(|w| w[1].1 < w[0].1), "{along_zero:?}");

    let weak = parse_config(
        "[signal]\nn_s = 0.02\n[landscape]\ngain_min = 39.7\ngain_max = 40.7\ngain_points = 2\nphase_min = 0\nphase_max = 0\nphase_points = 1\n",
    )
    .unwrap();
    let table = run_landscape(&weak).unwrap();
    assert_eq!(value(&table, 0, "gain"), 39.7);
    assert!((value(&table, 0, "p1") - 0.0107).abs() < 2e-4, "{}", value(&table, 0, "p1"));
}

#[test]
fn epsilon_out_of_range_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.cfg", "[signal]\nn_s = 0.2\n[noise]\nepsilon = 1.5\n");
    let out = hic(&["-c", &cfg, "params"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("epsilon out of range"), "{err}");
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(hic(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hic(&["sweep"]).status.code(), Some(1), "no [sweep] section");
    assert_eq!(hic(&["-c", "/nonexistent/x.cfg", "params"]).status.code(), Some(1));
    assert_eq!(hic(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_output_path_exits_2() {
    let out = hic(&["params", "--out", "/nonexistent-dir/out.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent-dir/out.csv"));
}

#[test]
fn params_reports_cooperativity() {
    let (header, rows) = stdout_table(&hic(&["params"]));
    assert_eq!(rows.len(), 1);
    let eta0 = column(&header, &rows, "eta0_geometry")[0];
    assert!((eta0 - 8.6).abs() < 0.1);
    assert!((column(&header, &rows, "t_re")[0] - 1.0 / 9.6).abs() < 1e-12);
}

#[test]
fn waveplate_sweep_has_plate_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "wp.cfg",
        "[sweep]\nvariable = theta_q\nstart = 0\nstop = 90\nn_points = 10\ntheta_h = 0\n",
    );
    let (header, rows) = stdout_table(&hic(&["-c", &cfg, "sweep"]));
    assert_eq!(&header[..4], ["theta", "phi", "theta_h", "theta_q"]);
    assert_eq!(rows.len(), 10);
    assert_eq!(column(&header, &rows, "theta_q")[9], 90.0);
    // (θ_h, θ_q) = (0, 0) is the σ⁺ pole.
    assert_eq!(column(&header, &rows, "theta")[0], 180.0);
}

#[test]
fn montecarlo_sweep_adds_estimates() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "mc.cfg",
        "[sweep]\nvariable = theta\nstart = 30\nstop = 150\nn_points = 3\nmodel = montecarlo\n[montecarlo]\ntrials = 50000\n",
    );
    let (header, rows) = stdout_table(&hic(&["-c", &cfg, "sweep"]));
    for name in ["gain_imperfect", "p1_hat", "p1_hat_se", "g2_hat_se", "gain_hat", "phase_hat_se", "n_heralds"] {
        assert!(header.iter().any(|h| h == name), "{name}");
    }
    let p1 = column(&header, &rows, "p1_hat");
    let se = column(&header, &rows, "p1_hat_se");
    let expected = column(&header, &rows, "herald_fraction");
    for i in 0..3 {
        assert!((p1[i] - expected[i]).abs() < 5.0 * se[i]);
    }
    assert!(column(&header, &rows, "error_flag").iter().all(|&f| f == 0.0));
}

#[test]
fn mc_event_log_and_json() {
    let dir = TempDir::new().unwrap();
    let events = dir.path().join("events.csv");
    let out = hic(&["mc", "--trials", "2000", "--format", "json", "--events", events.to_str().unwrap()]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["metadata"]["seed"], "1");
    assert_eq!(json["columns"]["n_trials"][0], 2000.0);
    let log = fs::read_to_string(&events).unwrap();
    let mut lines = log.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,y,eta,signal_excited,ancilla_click,background,signal_click,ref_bin,perp_click,fringe_counts"
    );
    assert_eq!(lines.count(), 2000);
}

#[test]
fn json_marks_undefined_as_null() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.cfg", "[sweep]\nstart = 80\nstop = 100\nn_points = 3\n");
    let out = hic(&["-c", &cfg, "--format", "json", "sweep"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["columns"]["gain_ideal"][1].is_null());
    assert_eq!(json["columns"]["fock_projected"][1], 1.0);
}

#[test]
fn fit_beatnote_recovers_phase() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("time_s,counts\n");
    for i in 0..24 {
        let t = i as f64 / (12.0 * 30e6);
        let c = 400.0 + 150.0 * (2.0 * std::f64::consts::PI * 30e6 * t - 0.8).cos();
        text.push_str(&format!("{t:e},{c}\n"));
    }
    let path = write(&dir, "beat.csv", &text);
    let (header, rows) = stdout_table(&hic(&["fit-beatnote", &path]));
    assert!((column(&header, &rows, "phase")[0] + 0.8).abs() < 1e-9);
    assert!((column(&header, &rows, "amplitude")[0] - 150.0).abs() < 1e-6);
    assert_eq!(column(&header, &rows, "zero_amplitude")[0], 0.0);

    let short = write(&dir, "short.csv", "time_s,counts\n0,1\n1e-9,2\n");
    assert_eq!(hic(&["fit-beatnote", &short]).status.code(), Some(2));
    let missing = write(&dir, "cols.csv", "t,counts\n0,1\n");
    assert_eq!(hic(&["fit-beatnote", &missing]).status.code(), Some(2));
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = hic(&["mc", "--seed", "17", "--trials", "30000", "--out", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    hic(&["mc", "--seed", "18", "--trials", "30000", "--out", c.to_str().unwrap()]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(Path::new(&c)).unwrap());
}
