//! End-to-end tests of the binary: file outputs, exit codes, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn kdqsl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kdqsl"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_matrix(path: &Path, dim: usize, re: &[f64], im: &[f64]) {
    let json = serde_json::json!({ "dim": dim, "re": re, "im": im });
    std::fs::write(path, serde_json::to_string(&json).unwrap()).unwrap();
}

fn write_two_qubit_fixtures(dir: &Path) {
    write_matrix(&dir.join("rho.json"), 2, &[0.5, -0.5, -0.5, 0.5], &[0.0; 4]);
    write_matrix(&dir.join("a.json"), 2, &[-0.5, 0.0, 0.0, 0.5], &[0.0; 4]);
    write_matrix(&dir.join("b.json"), 2, &[-0.5, 0.0, 0.0, 0.5], &[0.0; 4]);
    write_matrix(&dir.join("h.json"), 2, &[-0.5, 2.5, 2.5, 0.5], &[0.0; 4]);
}

#[test]
fn two_qubit_emits_figure_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = kdqsl(
        &[
            "two-qubit",
            "--out",
            ".",
            "--steps",
            "60",
            "--sweep-points",
            "8",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let bounds = std::fs::read_to_string(dir.path().join("two_qubit_bounds.csv")).unwrap();
    let mut lines = bounds.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,re_q11,im_q11,re_lower"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let re_q0: f64 = first[1].parse().unwrap();
    assert!((re_q0 - 0.5).abs() < 1e-12);
    // negativity must appear somewhere in [0, pi]
    let negatives = bounds
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(11).unwrap() == "true")
        .count();
    assert!(negatives > 0, "no negative Re q11 rows");

    let sweep = std::fs::read_to_string(dir.path().join("two_qubit_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 9); // header + 8 rows
    for line in sweep.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[6] == "true" {
            let t_max: f64 = fields[2].parse().unwrap();
            let t_neg: f64 = fields[3].parse().unwrap();
            assert!(t_neg <= t_max + 1e-9);
        } else {
            assert_eq!(fields[3], "", "non-negativity rows leave T_neg empty");
        }
    }
}

#[test]
fn two_qubit_separable_limit_has_no_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = kdqsl(
        &[
            "two-qubit",
            "--omega-int",
            "0",
            "--out",
            ".",
            "--steps",
            "40",
            "--sweep-points",
            "6",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bounds = std::fs::read_to_string(dir.path().join("two_qubit_bounds.csv")).unwrap();
    for line in bounds.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[11], "false", "no negativity flag at omega_int = 0");
        assert_eq!(fields[12], "false", "no imaginary flag at omega_int = 0");
        let im_q: f64 = fields[2].parse().unwrap();
        assert!(im_q.abs() < 1e-12);
    }
}

#[test]
fn outputs_are_deterministic() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let out = kdqsl(
            &[
                "two-qubit",
                "--out",
                ".",
                "--steps",
                "40",
                "--sweep-points",
                "5",
            ],
            d.path(),
        );
        assert!(out.status.success());
    }
    for name in ["two_qubit_bounds.csv", "two_qubit_sweep.csv"] {
        let a = std::fs::read(d1.path().join(name)).unwrap();
        let b = std::fs::read(d2.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn bounds_respect_trajectory_and_emit_times() {
    let dir = tempfile::tempdir().unwrap();
    write_two_qubit_fixtures(dir.path());
    let out = kdqsl(
        &[
            "bounds", "--rho", "rho.json", "--a", "a.json", "--b", "b.json", "--h-op", "h.json",
            "--out", "out", "--steps", "80",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("out/bounds.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let fields: Vec<f64> = line
            .split(',')
            .take(14)
            .map(|f| f.parse().unwrap())
            .collect();
        let (re_q, im_q) = (fields[3], fields[4]);
        let (re_lower, re_upper) = (fields[6], fields[9]);
        let (im_lower, im_upper) = (fields[10], fields[13]);
        assert!(re_q >= re_lower - 1e-9 && re_q <= re_upper + 1e-9);
        assert!(im_q >= im_lower - 1e-9 && im_q <= im_upper + 1e-9);
    }
    let times: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/times.json")).unwrap())
            .unwrap();
    let entries = times.as_array().unwrap();
    // 4 pairs x 3 criteria
    assert_eq!(entries.len(), 12);
    assert!(entries.iter().all(|e| e.get("deltaL").is_some()));
}

#[test]
fn bounds_rejects_invalid_operators() {
    let dir = tempfile::tempdir().unwrap();
    write_two_qubit_fixtures(dir.path());
    write_matrix(
        &dir.path().join("h_bad.json"),
        2,
        &[0.0, 1.0, 0.2, 0.0],
        &[0.0; 4],
    );
    let out = kdqsl(
        &[
            "bounds",
            "--rho",
            "rho.json",
            "--a",
            "a.json",
            "--b",
            "b.json",
            "--h-op",
            "h_bad.json",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("Hermitian"),
        "diagnostic names the invariant: {stderr}"
    );

    // non-PSD rho
    write_matrix(
        &dir.path().join("rho_bad.json"),
        2,
        &[1.2, 0.0, 0.0, -0.2],
        &[0.0; 4],
    );
    let out = kdqsl(
        &[
            "bounds",
            "--rho",
            "rho_bad.json",
            "--a",
            "a.json",
            "--b",
            "b.json",
            "--h-op",
            "h.json",
            "--out",
            "out",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("positive semidefinite"));
}

#[test]
fn qsl_times_formats_unreachable() {
    let dir = tempfile::tempdir().unwrap();
    // commuting diagonal state: sigma = 0 so im_threshold is unreachable
    write_matrix(
        &dir.path().join("rho.json"),
        2,
        &[0.7, 0.0, 0.0, 0.3],
        &[0.0; 4],
    );
    write_two_qubit_fixtures_partial(dir.path());
    let out = kdqsl(
        &[
            "qsl-times",
            "--rho",
            "rho.json",
            "--a",
            "a.json",
            "--b",
            "b.json",
            "--h-op",
            "h.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"unreachable\""));

    let out = kdqsl(
        &[
            "qsl-times",
            "--rho",
            "rho.json",
            "--a",
            "a.json",
            "--b",
            "b.json",
            "--h-op",
            "h.json",
            "--format",
            "csv",
            "--out",
            "times.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("times.csv")).unwrap();
    assert!(csv.starts_with("criterion,ell,j,time,deltaL,tau0,tau_target"));
    // unreachable renders as an empty CSV field
    assert!(csv
        .lines()
        .any(|l| l.starts_with("im_threshold") && l.split(',').nth(3) == Some("")));
}

fn write_two_qubit_fixtures_partial(dir: &Path) {
    write_matrix(&dir.join("a.json"), 2, &[-0.5, 0.0, 0.0, 0.5], &[0.0; 4]);
    write_matrix(&dir.join("b.json"), 2, &[-0.5, 0.0, 0.0, 0.5], &[0.0; 4]);
    write_matrix(&dir.join("h.json"), 2, &[-0.5, 2.5, 2.5, 0.5], &[0.0; 4]);
}

#[test]
fn sweep_without_negativity_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = kdqsl(
        &[
            "sweep",
            "--sweep-min",
            "0.1",
            "--sweep-max",
            "0.5",
            "--sweep-points",
            "3",
            "--out",
            "sweep.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    // the file is still written for inspection
    assert!(dir.path().join("sweep.csv").exists());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.conf"),
        "omega_int = 5.0\nsweep_points = 4\nsweep_min = 2.0\nsweep_max = 8.0\nsteps = 30\n",
    )
    .unwrap();
    let out = kdqsl(
        &[
            "two-qubit",
            "--config",
            "run.conf",
            "--out",
            ".",
            "--steps",
            "25",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let bounds = std::fs::read_to_string(dir.path().join("two_qubit_bounds.csv")).unwrap();
    // flag overrides the config's steps=30
    assert_eq!(bounds.lines().count(), 26);
    let sweep = std::fs::read_to_string(dir.path().join("two_qubit_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 5);

    let out = kdqsl(
        &["two-qubit", "--config", "missing.conf", "--out", "."],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = kdqsl(&["two-qubit", "--steps", "1", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = kdqsl(&["two-qubit", "--t-max", "-1", "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_small_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = kdqsl(
        &["verify", "--seeds", "6", "--dim-min", "2", "--dim-max", "3"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("bound_validity"));
    assert!(stdout.contains("checks passed, 0 failed"));
}

#[test]
fn saturation_fixture_trajectory_sits_on_lower_bound() {
    // Emit the saturation geometry as matrix files and check the bounds CSV
    // column equality through the CLI path.
    use kdqsl::linop::MatrixJson;
    use kdqsl::oracle::kdq_saturation_instance;

    let dir = tempfile::tempdir().unwrap();
    let inst = kdq_saturation_instance(std::f64::consts::PI / 3.0).unwrap();
    let dump = |name: &str, op: &kdqsl::linop::HermitianOperator| {
        let json = MatrixJson::from_operator(op);
        std::fs::write(dir.path().join(name), serde_json::to_string(&json).unwrap()).unwrap();
    };
    dump("rho.json", inst.rho.op());
    dump("a.json", &inst.a.observable());
    dump("b.json", &inst.b.observable());
    dump("h.json", &inst.h);
    let branch_end = std::f64::consts::PI * (2.0 / 3.0);
    let out = kdqsl(
        &[
            "bounds",
            "--rho",
            "rho.json",
            "--a",
            "a.json",
            "--b",
            "b.json",
            "--h-op",
            "h.json",
            "--out",
            "out",
            "--steps",
            "50",
            "--t-max",
            &format!("{branch_end}"),
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("out/bounds.csv")).unwrap();
    let mut saturated_rows = 0;
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[1] == "1" && fields[2] == "1" {
            let re_q: f64 = fields[3].parse().unwrap();
            let re_lower: f64 = fields[6].parse().unwrap();
            assert!(
                (re_q - re_lower).abs() < 1e-9,
                "saturation broken at t={}: {re_q} vs {re_lower}",
                fields[0]
            );
            saturated_rows += 1;
        }
    }
    assert_eq!(saturated_rows, 50);
}
