use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use geoconsensus::verify::{replay, Suite, Witness};

const BIN: &str = env!("CARGO_BIN_EXE_geoconsensus");

const SO3: &str = r#"
[manifold]
kind = "so3"

[potential]
kind = "power_law"
beta = 2.0

[particles]
n = 12

[sampling]
scheme = "axis_angle"
radius = 0.7
seed = 5

[time]
dt = 0.01
t_end = 3.0
snapshot_stride = 5
"#;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn with_config(text: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), text).unwrap();
    dir
}

#[test]
fn simulate_writes_one_row_per_snapshot() {
    let dir = with_config(SO3);
    let o = run(&["simulate", "--config", "run.toml", "--out", "out", "--svg"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,diameter,energy,dissipation_residual,w2_to_mean,consensus_integral,rate_lhs,rate_rhs,weak_functional"
    );
    // 300 steps with stride 5
    assert_eq!(lines.count(), 61);
    assert!(!csv.contains('\r'));
    let jsonl = fs::read_to_string(dir.path().join("out/trajectory.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 61);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["rate"]["model"], "exponential");
    assert!(fs::read_to_string(dir.path().join("out/diameter.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn reruns_are_byte_identical_for_any_worker_count() {
    let dir = with_config(&SO3.replace("n = 12", "n = 24"));
    for (out, workers) in [("a", "1"), ("b", "4"), ("c", "4")] {
        let o = run(&["simulate", "--config", "run.toml", "--out", out, "--workers", workers], dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for file in ["diagnostics.csv", "trajectory.jsonl", "report.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        for other in ["b", "c"] {
            assert_eq!(a, fs::read(dir.path().join(other).join(file)).unwrap(), "{file} differs");
        }
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = with_config(SO3);
    assert_eq!(code(&run(&["simulate", "--config", "run.toml", "--out", "a"], dir.path())), 0);
    assert_eq!(code(&run(&["simulate", "--config", "run.toml", "--out", "b", "--seed", "6"], dir.path())), 0);
    let a = fs::read(dir.path().join("a/diagnostics.csv")).unwrap();
    let b = fs::read(dir.path().join("b/diagnostics.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn config_errors_exit_2_before_writing() {
    let cases = [
        SO3.replace("t_end = 3.0", "t_end = 3.0\nball_radius = 1.6"),
        SO3.replace("dt = 0.01", "dt = 0.0"),
        SO3.replace("dt = 0.01", "dt = -1.0"),
        SO3.replace("beta = 2.0", "beta = 2.0\nbeat = 2.0"),
        SO3.replace("beta = 2.0", "beta = 1.0"),
    ];
    for text in &cases {
        let dir = with_config(text);
        let o = run(&["simulate", "--config", "run.toml", "--out", "out"], dir.path());
        assert_eq!(code(&o), 2, "{text}\n{}", stderr(&o));
        assert!(!dir.path().join("out/diagnostics.csv").exists());
    }
    let dir = with_config(&cases[0]);
    let o = run(&["simulate", "--config", "run.toml"], dir.path());
    assert!(stderr(&o).contains("r_w"), "{}", stderr(&o));
    assert_eq!(code(&run(&["simulate", "--config", "missing.toml"], dir.path())), 2);
}

#[test]
fn step_failure_exits_3_with_time_and_no_outputs() {
    let text = r#"
[manifold]
kind = "sphere"

[potential]
kind = "power_law"
beta = 2.0
scale = 1000.0

[particles]
n = 10

[sampling]
scheme = "uniform_direction"
radius = 1.0

[time]
dt = 0.1
t_end = 1.0
"#;
    let dir = with_config(text);
    let o = run(&["simulate", "--config", "run.toml", "--out", "out"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("t = 0.1"), "{}", stderr(&o));
    let leftovers = fs::read_dir(dir.path().join("out")).map(|d| d.count()).unwrap_or(0);
    assert_eq!(leftovers, 0);
}

#[test]
fn figure1_quadratic_row_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = run(&["reproduce-figure1", "--beta", "2", "--out", out], dir.path());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let text = stdout(&o);
        assert!(text.contains("semi-log") && text.contains("PASS"), "{text}");
    }
    let a = fs::read(dir.path().join("a/figure1_beta2.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/figure1_beta2.csv")).unwrap());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/figure1_report.json")).unwrap()).unwrap();
    let slope = report[0]["slope"].as_f64().unwrap();
    assert!((-1.05..=-0.95).contains(&slope), "{slope}");
    assert_eq!(code(&run(&["reproduce-figure1", "--beta", "5"], dir.path())), 2);
}

#[test]
fn verify_geometry_passes_and_catches_a_corrupted_log() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["verify-geometry", "--samples", "300"], dir.path());
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
    assert!(stdout(&ok).contains("cosine-law equality"));

    let bad = run(&["verify-geometry", "--samples", "50", "--corrupt-log", "--out", "w"], dir.path());
    assert_eq!(code(&bad), 4);
    assert!(stderr(&bad).contains("witness"));
    let text = fs::read_to_string(dir.path().join("w/witnesses.jsonl")).unwrap();
    let witnesses: Vec<Witness> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!witnesses.is_empty());
    // against the genuine sphere the same instances pass
    let round_trip = witnesses.iter().find(|w| w.value > 1e-6 && w.suite == Suite::RoundTrip).unwrap();
    assert!(replay(round_trip).unwrap() < 1e-10);
}

#[test]
fn weak_demo_passes_with_builtin_setup() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["weak-demo", "--out", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/weak_demo.json")).unwrap()).unwrap();
    assert!(report["final_diameter"].as_f64().unwrap() <= 0.301);
}

#[test]
fn weak_demo_inside_the_dead_zone_is_constant() {
    let text = r#"
[manifold]
kind = "euclidean:2"

[potential]
kind = "truncated_power_law"
beta = 3.0
zeta = 0.3

[particles]
n = 8

[sampling]
scheme = "uniform_direction"
radius = 0.1

[time]
dt = 0.05
t_end = 2.0
snapshot_stride = 4
"#;
    let dir = with_config(text);
    let o = run(&["weak-demo", "--config", "run.toml", "--out", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    let diameters: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(diameters.iter().all(|d| *d == diameters[0]));
}

#[test]
fn weak_demo_rejects_strong_potentials() {
    let dir = with_config(SO3);
    assert_eq!(code(&run(&["weak-demo", "--config", "run.toml"], dir.path())), 2);
}

#[test]
fn fit_rate_reads_simulate_output() {
    let dir = with_config(SO3);
    assert_eq!(code(&run(&["simulate", "--config", "run.toml", "--out", "out"], dir.path())), 0);
    let o = run(&["fit-rate", "out/diagnostics.csv", "--model", "exponential", "--out", "fit"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["model"], "exponential");
    assert!(report["slope"].as_f64().unwrap() < 0.0);
    assert!(dir.path().join("fit/rate_report.json").exists());

    fs::write(dir.path().join("bad.csv"), "a,b\n1,2\n").unwrap();
    assert_eq!(code(&run(&["fit-rate", "bad.csv", "--model", "power"], dir.path())), 2);
    assert_eq!(code(&run(&["fit-rate", "out/diagnostics.csv", "--model", "cubic"], dir.path())), 2);
}

#[test]
fn unknown_subcommand_and_bad_workers_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["bogus"], dir.path())), 2);
    assert_eq!(code(&run(&["verify-geometry", "--workers", "0"], dir.path())), 2);
}
