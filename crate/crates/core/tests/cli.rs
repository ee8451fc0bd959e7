use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bounce-lab"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn gamma2_simulate_gains_two_per_hop() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("simulate").arg(config("gamma2_resonant.toml")).arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    let traj = &s["trajectories"][0];
    let v = traj["final_speed"].as_f64().unwrap();
    assert!((v - (3.0 + 2.0 * 100.0)).abs() < 1e-6, "final speed {v}");
    let csv = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert!(csv.starts_with("event_index,kind,time,body,v_pre,v_post,plate_velocity,z\n"));
    assert_eq!(csv.lines().count() - 1, traj["n_events"].as_u64().unwrap() as usize);
}

#[test]
fn missing_g_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("simulate").arg(config("missing_g.toml")).arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`g`"), "{err}");
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn singular_run_with_speed_threshold_completes_before_contact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("simulate").arg(config("singular_linear.toml")).arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = &summary(dir.path())["trajectories"][0];
    assert_eq!(traj["stopped_by"], "speed_reached");
    assert!(traj["final_time"].as_f64().unwrap() < 0.0);
    assert!(traj["final_speed"].as_f64().unwrap() > 1000.0);
    assert_eq!(traj["extras"]["contact_gain"].as_f64(), Some(2.0));
}

#[test]
fn triple_collision_exits_with_singular_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("simulate").arg(config("triple_collision.toml")).arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = &summary(dir.path())["trajectories"][0];
    assert_eq!(traj["outcome"]["kind"], "triple_collision");
    assert_eq!(traj["stopped_by"], "terminated");
}

#[test]
fn empty_grid_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("sweep").arg(config("one_ball_sweep.toml")).args(["--grid", ""]).arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv, "cell,verdict,n_events,final_speed,trend_slope,outcome,error\n");
}

#[test]
fn malformed_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().arg("sweep").arg(config("one_ball_sweep.toml")).args(["--grid", "t0=1:0"]).arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_is_identical_across_thread_counts() {
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(bin()
            .env("BOUNCE_LAB_THREADS", threads)
            .arg("sweep")
            .arg(config("one_ball_sweep.toml"))
            .args(["--grid", "t0=0:0.9:4,v0=2:6:3"])
            .arg("--out")
            .arg(dir.path()));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(dir.path().join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert_eq!(text.lines().count(), 1 + 12);
    assert!(text.starts_with("cell,t0,v0,verdict,"));
}

#[test]
fn bad_thread_variable_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .env("BOUNCE_LAB_THREADS", "many")
        .arg("sweep")
        .arg(config("one_ball_sweep.toml"))
        .args(["--grid", "v0=2:6:2"])
        .arg("--out")
        .arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn portrait_in_both_coordinate_systems() {
    for (coords, lo, hi) in [("tv", 10.0, f64::INFINITY), ("ty", 0.0, 1.0)] {
        let dir = tempfile::tempdir().unwrap();
        let out = run(bin()
            .arg("portrait")
            .arg(config("fermi_ulam_smooth.toml"))
            .args(["--coords", coords])
            .arg("--out")
            .arg(dir.path()));
        assert_eq!(out.status.code(), Some(0), "{coords}: {}", String::from_utf8_lossy(&out.stderr));
        let mut reader = csv::Reader::from_path(dir.path().join("portrait.csv")).unwrap();
        let mut n = 0;
        for row in reader.records() {
            let row = row.unwrap();
            let t_mod: f64 = row[2].parse().unwrap();
            let value: f64 = row[3].parse().unwrap();
            assert!((0.0..1.0).contains(&t_mod));
            assert!(value > lo && value <= hi, "{coords} value {value}");
            n += 1;
        }
        assert!(n > 1000, "{coords}: {n} rows");
    }
}

#[test]
fn validate_subset_reports_only_requested_criteria() {
    let out = run(bin().args(["validate", "--only", "3,6"]));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert!(lines[0].starts_with("[PASS]  3 "));
    assert!(lines[1].starts_with("[PASS]  6 "));
}
