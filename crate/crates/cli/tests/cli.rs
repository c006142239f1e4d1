use std::process::Command;

use rwo_cli::emit::{csv_bytes, emit, read_csv, write_csv};
use rwo_cli::flags::ConfigFlags;
use rwo_cli::{run_experiment, CliError, ExperimentConfig, ExperimentKind, FieldKind, RunRecord, Value};

fn rwo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rwo"))
}

fn small_ball() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::OneCity, 0.7, vec![2000.0], vec![61, 61], 1);
    cfg.field = FieldKind::SingleBall;
    cfg.ball_radius = Some(12.0);
    cfg.lambda_star = Some(0.9);
    cfg.eps = Some(0.002);
    cfg.r_local = Some(12.0);
    cfg.pocket_radius = Some(16.0);
    cfg
}

fn concentration(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::LwgfConcentration, 0.7, vec![1000.0], vec![41, 41], 6);
    cfg.distances = vec![4, 8];
    cfg.seed = seed;
    cfg
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn zero_replicates_is_a_config_error() {
    let mut v: serde_json::Value = serde_json::from_str(&small_ball().to_json()).unwrap();
    v["replicates"] = 0.into();
    let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    assert_eq!(err.exit_code(), 2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, v.to_string()).unwrap();
    let out = rwo().arg("localize").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicates"));
}

#[test]
fn config_file_wins_over_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"p": 0.8, "replicates": 3}"#).unwrap();
    let flags = ConfigFlags {
        config: Some(path),
        p: Some(0.6),
        n: Some(vec![500.0]),
        sides: Some(vec![21, 21]),
        replicates: Some(9),
        distances: Some(vec![3]),
        ..ConfigFlags::default()
    };
    let cfg = flags.resolve(ExperimentKind::LwgfConcentration).unwrap();
    assert_eq!((cfg.p, cfg.replicates), (0.8, 3));
    assert_eq!(cfg.sides, [21, 21]);
    assert_eq!(cfg.kind, ExperimentKind::LwgfConcentration);
}

#[test]
fn csv_round_trip_is_exact() {
    let mut rec = in_pool(1, || run_experiment(&concentration(5)).unwrap());
    rec.rows[0].value = Value::Num(f64::INFINITY);
    rec.rows[1].value = Value::Na;
    rec.rows[1].error_kind = "zero-survival".into();
    let bytes = csv_bytes(&rec).unwrap();
    let rows = read_csv(bytes.as_slice()).unwrap();
    assert_eq!(rows, rec.rows);
    assert!(String::from_utf8(bytes.clone()).unwrap().contains(",inf,"));

    let again = RunRecord { rows, ..rec.clone() };
    assert_eq!(csv_bytes(&again).unwrap(), bytes);
}

#[test]
fn empty_record_gives_header_only() {
    let mut rec = in_pool(1, || run_experiment(&concentration(1)).unwrap());
    rec.rows.clear();
    let mut buf = Vec::new();
    write_csv(&rec, &mut buf).unwrap();
    assert_eq!(buf, b"experiment,replicate,point,metric,value,error_kind\r\n");
    assert!(read_csv(buf.as_slice()).unwrap().is_empty());
}

#[test]
fn emitted_files_match_record() {
    let rec = in_pool(1, || run_experiment(&concentration(2)).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = emit(&rec, dir.path()).unwrap();
    assert_eq!(std::fs::read(csv).unwrap(), csv_bytes(&rec).unwrap());
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(json).unwrap()).unwrap();
    assert!(summary.get("rows").is_none());
    assert_eq!(summary["config"]["kind"], "lwgf-concentration");
}

#[test]
fn thread_count_does_not_change_output() {
    let cfg = concentration(11);
    let one = in_pool(1, || csv_bytes(&run_experiment(&cfg).unwrap()).unwrap());
    let three = in_pool(3, || csv_bytes(&run_experiment(&cfg).unwrap()).unwrap());
    assert_eq!(one, three);
}

#[test]
fn single_ball_holds_the_mass() {
    let rec = in_pool(1, || run_experiment(&small_ball()).unwrap());
    assert_eq!(rec.failed_replicates, 0);
    let mass = rec.finite_column("n=2000", "mass_b_hat");
    assert_eq!(mass.len(), 1);
    assert!(mass[0] >= 0.9, "mass {}", mass[0]);
}

#[test]
fn gen_then_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("f.snap");
    let st = rwo().args(["gen", "--sides", "21,21", "--p", "0.8", "--seed", "3", "--output"]).arg(&snap).status().unwrap();
    assert!(st.success());
    let from_snap = rwo().arg("spectrum").arg("--snapshot").arg(&snap).output().unwrap();
    let sampled = rwo().args(["spectrum", "--sides", "21,21", "--p", "0.8", "--seed", "3"]).output().unwrap();
    assert!(from_snap.status.success() && sampled.status.success());
    assert_eq!(from_snap.stdout, sampled.stdout);
    let v: serde_json::Value = serde_json::from_slice(&sampled.stdout).unwrap();
    let lambda = v["lambda"].as_f64().unwrap();
    assert!(lambda > 0.0 && lambda < 1.0);
}
