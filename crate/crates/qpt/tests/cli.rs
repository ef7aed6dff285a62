use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_optomech-qpt");

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn qpt(task: &str, config: &Path, extra: &[&str]) -> Run {
    let out = Command::new(BIN).arg(task).arg("--config").arg(config).args(extra).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    (header, lines.map(|l| l.split(',').map(str::to_owned).collect()).collect())
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn staircase_matches_ceiling_rule() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"schema": 1, "task": "staircase", "control": {"name": "kappa", "lo": 0.5, "hi": 3.0, "steps": 251}}"#,
    );
    let r = qpt("staircase", &cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header[0], "kappa (1)");
    assert_eq!(header[1], "photon_number (photons)");
    assert_eq!(rows.len(), 251);
    for row in rows {
        let k = num(&row[0]);
        let n: i64 = row[1].parse().unwrap();
        let want = if k > 1.0 { ((k * k - 1.0) / 2.0).ceil() as i64 } else { 0 };
        assert_eq!(n, want, "kappa {k}");
    }
}

#[test]
fn phase_diagram_boundary_straddles_circle() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"schema": 1, "task": "phase-diagram", "params": {"alpha_A2": 0},
            "control": {"name": "mu", "lo": 0, "hi": 1.5, "steps": 101},
            "control2": {"name": "gamma", "lo": 0, "hi": 1.5, "steps": 101}}"#,
    );
    let r = qpt("phase-diagram", &cfg, &["--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 101 * 101);
    let cell = |i: usize, j: usize| {
        let r = &rows[i * 101 + j];
        (r[0].as_f64().unwrap(), r[1].as_f64().unwrap(), r[2].as_str().unwrap() == "superradiant")
    };
    let mut flips = 0;
    for i in 0..101 {
        for j in 0..100 {
            let (m, g0, s0) = cell(i, j);
            let (_, g1, s1) = cell(i, j + 1);
            assert_eq!(s0, m * m + g0 * g0 > 1.0 + 1e-12);
            if s0 != s1 {
                flips += 1;
                assert!(m * m + g0 * g0 <= 1.0 + 1e-12 && m * m + g1 * g1 > 1.0, "mu {m}, gamma {g0}..{g1}");
            }
        }
    }
    // every mu row below 1 crosses the circle once along gamma
    assert_eq!(flips, (0..101).filter(|&i| cell(i, 0).0 <= 1.0).count());
}

#[test]
fn flipped_landscape_has_ring_of_minima() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "l.json",
        r#"{"schema": 1, "task": "landscape", "params": {"kappa": 2, "eta": 100},
            "control": {"name": "re_alpha", "lo": -2, "hi": 2, "steps": 161}}"#,
    );
    let r = qpt("landscape", &cfg, &["--frame", "flipped", "--format", "json"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(doc["metadata"]["config"]["frame"], "flipped");
    let pts: Vec<[f64; 3]> = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| [r[0].as_f64().unwrap(), r[1].as_f64().unwrap(), r[2].as_f64().unwrap()])
        .collect();
    let emin = pts.iter().map(|p| p[2]).fold(f64::INFINITY, f64::min);
    let h = 4.0 / 160.0;
    let radius = 1.5f64.sqrt();
    let near: Vec<&[f64; 3]> = pts.iter().filter(|p| p[2] <= emin + 1e-3).collect();
    assert!(near.len() > 8);
    for p in near {
        assert!((p[0].hypot(p[1]) - radius).abs() < 2.0 * h, "{p:?}");
    }
    assert!((emin + 0.5625).abs() < 1e-3);
    let note = &doc["metadata"]["notes"]["minimum"];
    assert!((note["alpha_mag"].as_f64().unwrap() - radius).abs() < 1e-12);
    assert_eq!(note["degenerate_ring"], true);
}

#[test]
fn output_is_reproducible_and_echo_reruns() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "g.json",
        r#"{"schema": 1, "task": "gap-sweep", "model": "ApproxHom", "params": {"omega_m": 0.5, "kappa": 1.5},
            "control": {"name": "kappa", "lo": 0.8, "hi": 2.0, "steps": 7}, "dims": [12, 24], "seed": 7}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let ra = qpt("gap-sweep", &cfg, &["--out", a.to_str().unwrap(), "--workers", "1"]);
    let rb = qpt("gap-sweep", &cfg, &["--out", b.to_str().unwrap(), "--workers", "4"]);
    assert!(matches!(ra.code, 0 | 3), "{}", ra.stderr);
    assert_eq!(ra.code, rb.code);
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    assert!(!ta.contains(&b'\r'));

    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 7);
    let echo = write(dir.path(), "echo.json", &serde_json::to_string_pretty(&meta["config"]).unwrap());
    let c = dir.path().join("c.csv");
    qpt("gap-sweep", &echo, &["--out", c.to_str().unwrap()]);
    assert_eq!(ta, std::fs::read(&c).unwrap());
}

#[test]
fn golden_crossing_scan() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"schema": 1, "task": "crossing-scan", "control": {"name": "kappa", "lo": 0.5, "hi": 2.5, "steps": 21}, "dims": [16]}"#,
    );
    let r = qpt("crossing-scan", &cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/crossing-scan.csv")).unwrap();
    assert_eq!(r.stdout, golden);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let v = write(
        dir.path(),
        "v.json",
        r#"{"schema": 1, "task": "variational", "params": {"eta": 20}, "control": {"name": "gamma", "lo": 0.5, "hi": 0.99, "steps": 2}}"#,
    );
    let r = qpt("variational", &v, &[]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert!(r.stdout.lines().last().unwrap().ends_with("true,divergence_suspected"));

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"schema": 1, "task": "staircase", "control": {"name": "kappa", "lo": 0.5, "hi": 3, "steps": 5}, "colour": 1}"#,
    );
    let r = qpt("staircase", &bad, &[]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("colour"), "{}", r.stderr);

    let contradict = write(
        dir.path(),
        "x.json",
        r#"{"schema": 1, "task": "staircase", "params": {"g": 0.5, "gamma": 0.5}, "control": {"name": "kappa", "lo": 0.5, "hi": 3, "steps": 5}}"#,
    );
    assert_eq!(qpt("staircase", &contradict, &[]).code, 1);
    assert_eq!(qpt("not-a-task", &bad, &[]).code, 1);
    assert_eq!(qpt("staircase", &dir.path().join("missing.json"), &[]).code, 1);
}

#[test]
fn unconverged_rows_are_flagged_not_dropped() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "a.json",
        r#"{"schema": 1, "task": "convergence-audit", "model": "QuadraticLimit",
            "control": {"name": "gamma", "lo": 0.0, "hi": 0.95, "steps": 2}, "dims": [8],
            "options": {"max_total_dim": 64}}"#,
    );
    let r = qpt("convergence-audit", &cfg, &[]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    let status = header.iter().position(|h| h == "status (text)").unwrap();
    assert_eq!(rows[0][status], "converged");
    let last = rows.last().unwrap();
    assert_eq!(num(&last[0]), 0.95);
    assert_ne!(last[status], "converged");
    // escalation from 8 stops once the next check would exceed the cap
    assert!(rows.iter().filter(|r| num(&r[0]) == 0.95).count() >= 2);
}

#[test]
fn variational_and_hybrid_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "h.json",
        r#"{"schema": 1, "task": "hybrid-spectrum", "params": {"alpha_A2": 0, "gamma": 0.8},
            "control": {"name": "mu", "lo": 0.2, "hi": 0.6, "steps": 3}}"#,
    );
    let r = qpt("hybrid-spectrum", &cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    let em = header.iter().position(|h| h == "eps_minus (omega_c)").unwrap();
    // mu = 0.6, gamma = 0.8 lies on the critical line
    assert!(num(&rows[2][em]).abs() < 1e-6, "{}", rows[2][em]);
    assert!(num(&rows[0][em]) > 0.1);

    let cfg = write(
        dir.path(),
        "v.json",
        r#"{"schema": 1, "task": "variational", "options": {"regime": "classical_limit"},
            "control": {"name": "gamma", "lo": 0.2, "hi": 0.6, "steps": 3}}"#,
    );
    let r = qpt("variational", &cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let (_, rows) = csv_rows(&r.stdout);
    assert_eq!(rows[2][1], "inf");
    assert!((num(&rows[2][2]) + 0.25 * 0.64f64.ln()).abs() < 1e-12);
}
