use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scenario(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn driftfree(task: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftfree"))
        .arg(task)
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn last_row(csv: &str) -> Vec<f64> {
    csv.lines()
        .rev()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect()
}

const RIGID_BODY: &str = r#"
model = "rigid-body-2osc"
controls = [1.0, 1.0]
[grid]
t0 = 0.0
t1 = 1.0
nodes = 101
"#;

#[test]
fn simulate_rigid_body_with_unit_controls() {
    let dir = TempDir::new().unwrap();
    let out = driftfree("simulate", &scenario(&dir, "rb.toml", RIGID_BODY), &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("t,x1,x2,theta,oracle_x1,oracle_x2,oracle_theta,deviation\n"));
    let row = last_row(&text);
    assert_eq!(row[0], 1.0);
    for (got, want) in row[1..4].iter().zip([1.0, 1.0, 0.0]) {
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
    assert!(row[7] <= 1e-8);
    assert!(text.contains("# tolerances: ode="));
}

#[test]
fn wn_on_g4bar_matches_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(
        &dir,
        "wn.toml",
        "algebra = \"g4bar\"\ncontrols = [1.0, 1.0, 0.0, 0.0]\n[grid]\nt0 = 0.0\nt1 = 1.0\nnodes = 11\n",
    );
    let out = driftfree("wn", &cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let row = last_row(&text);
    assert!((row[1] - 1.0).abs() < 1e-12);
    assert!((row[2] - 1.0).abs() < 1e-12);
    assert!((row[3] - 0.5).abs() < 1e-9);
    assert!((row[4] - 1.0 / 6.0).abs() < 1e-9);
    assert!(text.contains("# method: quadrature"));
    assert!(text.contains("# v4' = b2*(0.5*v1^2)"));
}

#[test]
fn rank_of_the_raw_car_is_full_away_from_the_origin() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(
        &dir,
        "rank.toml",
        "model = \"car-raw\"\npoints = [[0.0, 0.0, 0.3, 0.2]]\n",
    );
    let out = driftfree("rank", &cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("rank at (0, 0, 0.3, 0.2) = 4"));
}

#[test]
fn close_reports_the_heisenberg_fields() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(&dir, "close.toml", "model = \"brockett\"\n");
    let out = driftfree("close", &cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("closed: yes"));
    assert!(text.contains("dimension: 3"));
}

#[test]
fn verify_exits_one_when_a_printed_form_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(&dir, "v.toml", "model = \"car-raw\"\n");
    let out = driftfree("verify", &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));

    let cfg = scenario(&dir, "v2.toml", "model = \"brockett\"\n");
    assert_eq!(driftfree("verify", &cfg, &[]).status.code(), Some(0));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [
        ("syntax.toml", "controls = ["),
        ("unknown.toml", "colour = 1\n"),
        ("nogrid.toml", "model = \"brockett\"\ncontrols = [1.0, 1.0]\n"),
    ] {
        let out = driftfree("simulate", &scenario(&dir, name, text), &[]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(!out.stderr.is_empty());
    }
    let missing = dir.path().join("absent.toml");
    assert_eq!(driftfree("wn", &missing, &[]).status.code(), Some(2));
}

#[test]
fn leaving_the_car_domain_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(
        &dir,
        "car.toml",
        "model = \"car-raw\"\ncontrols = [1.0, 0.0]\ninitial = [0.0, 0.0, 2.0, 0.0]\n[grid]\nt0 = 0.0\nt1 = 1.0\nnodes = 11\n",
    );
    let out = driftfree("simulate", &cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain error"));
}

#[test]
fn breakdown_of_second_kind_coordinates_exits_four() {
    // Rotation by pi about (1, 0, 1) reaches the gimbal-lock set of the chart.
    let dir = TempDir::new().unwrap();
    let cfg = scenario(
        &dir,
        "so3.toml",
        r#"
controls = [1.0, 0.0, 1.0]
[algebra]
names = ["a1", "a2", "a3"]
brackets = [
  { left = "a1", right = "a2", terms = { a3 = 1.0 } },
  { left = "a2", right = "a3", terms = { a1 = 1.0 } },
  { left = "a3", right = "a1", terms = { a2 = 1.0 } },
]
[grid]
t0 = 0.0
t1 = 3.0
nodes = 31
"#,
    );
    let out = driftfree("wn", &cfg, &[]);
    assert_eq!(out.status.code(), Some(4));
    assert!(!out.stderr.is_empty());
}

#[test]
fn output_is_deterministic_and_written_to_file() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(
        &dir,
        "rank.toml",
        "model = \"car-raw\"\nsamples = 20\nbounds = [[-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]]\n",
    );
    let a = stdout(&driftfree("rank", &cfg, &["--seed", "7"]));
    let b = stdout(&driftfree("rank", &cfg, &["--seed", "7"]));
    assert_eq!(a, b);
    assert!(a.contains("points: 20"));

    let cfg = scenario(&dir, "rb.toml", RIGID_BODY);
    let file = dir.path().join("rb.csv");
    let out = driftfree("simulate", &cfg, &["--out", file.to_str().unwrap(), "--tol", "1e-11"]);
    assert_eq!(out.status.code(), Some(0));
    let summary = stdout(&out);
    assert!(summary.contains("max deviation"));
    let first = std::fs::read_to_string(&file).unwrap();
    driftfree("simulate", &cfg, &["--out", file.to_str().unwrap(), "--tol", "1e-11"]);
    assert_eq!(first, std::fs::read_to_string(&file).unwrap());
    assert!(first.lines().any(|l| l == "# tolerances: ode=1e-11, quad=1e-11"));
}

#[test]
fn reduce_agrees_with_the_direct_solution() {
    let dir = TempDir::new().unwrap();
    let cfg = scenario(
        &dir,
        "red.toml",
        "algebra = \"g4\"\ncontrols = [\"sin(t)\", \"cos(t)\", 0.0, 0.0]\n[grid]\nt0 = 0.0\nt1 = 2.0\nnodes = 21\n[tolerances]\node = 1e-12\n",
    );
    let out = driftfree("reduce", &cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("# y3' = -b3 + 0.5*y1*b2 - 0.5*y2*b1"));
    let dev = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(dev < 1e-6, "{dev}");
}
