use std::path::PathBuf;
use std::process::{Command, Output};

fn problems() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn lienard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lienard")).args(args).output().unwrap()
}

fn problem(name: &str) -> String {
    problems().join(name).to_str().unwrap().to_string()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn check_reports_theorem1_satisfied() {
    let out = lienard(&["check", &problem("t1_constant.toml")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).lines().any(|l| l == "T1 satisfied, residual 0.0e0"));
}

#[test]
fn check_reports_theorem1_violated() {
    let out = lienard(&["check", &problem("t1_violated.toml"), "--condition", "t1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stdout).starts_with("T1 violated"));
    let out = lienard(&["check", &problem("t1_violated.toml")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_needs_an_applicable_condition() {
    let out = lienard(&["check", &problem("cubic.toml")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("r = s = 0"));
}

#[test]
fn solve_constant_branch() {
    let out = lienard(&["solve", &problem("t1_constant.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = text(&out.stdout);
    assert!(csv.contains("y,v,u,x,residual_abel,residual_lienard"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 201);
    for row in rows {
        assert!((row[1] - (2f64.sqrt() - 1.0)).abs() <= 1e-12);
    }
}

#[test]
fn every_solved_problem_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let mut solved = 0;
    for entry in std::fs::read_dir(problems()).unwrap() {
        let path = entry.unwrap().path();
        let body = std::fs::read_to_string(&path).unwrap();
        if !body.contains("[solve]") {
            continue;
        }
        let file = path.to_str().unwrap();
        let csv = dir.path().join(path.file_stem().unwrap()).with_extension("csv");
        let csv = csv.to_str().unwrap();
        let out = lienard(&["solve", file, "--out", csv]);
        assert_eq!(out.status.code(), Some(0), "{file}: {}", text(&out.stderr));
        assert!(out.stdout.is_empty());
        let out = lienard(&["verify", csv, file]);
        assert_eq!(out.status.code(), Some(0), "{file}: {}", text(&out.stderr));
        assert_eq!(text(&out.stdout).matches(" pass").count(), 3);
        solved += 1;
    }
    assert!(solved >= 6);
}

#[test]
fn stdout_and_file_outputs_match() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let file = problem("riccati_rational.toml");
    let to_file = lienard(&["solve", &file, "--out", csv.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    let to_stdout = lienard(&["solve", &file]);
    assert_eq!(std::fs::read(&csv).unwrap(), to_stdout.stdout);
}

#[test]
fn corrupted_curve_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let file = problem("t2.toml");
    let csv = lienard(&["solve", &file]).stdout;
    let mut corrupted = String::new();
    for line in text(&csv).lines() {
        if line.starts_with('#') || line.starts_with('y') {
            corrupted.push_str(line);
        } else {
            let mut fields: Vec<String> = line.split(',').map(str::to_string).collect();
            let v: f64 = fields[1].parse().unwrap();
            fields[1] = format!("{:.16e}", v * 1.01);
            corrupted.push_str(&fields.join(","));
        }
        corrupted.push('\n');
    }
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, corrupted).unwrap();
    let out = lienard(&["verify", path.to_str().unwrap(), &file]);
    assert_eq!(out.status.code(), Some(3));
    assert!(text(&out.stdout).contains("fail"));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[equation]\nn = 2\nm = 3\nextra = 1\n[domain]\nmin = 0.0\nmax = 1.0\n").unwrap();
    let out = lienard(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("extra"));
    assert!(out.stdout.is_empty());

    let out = lienard(&["solve", &problem("t1_violated.toml")]);
    assert_eq!(out.status.code(), Some(2), "missing [solve] block");

    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "not a curve\n").unwrap();
    let out = lienard(&["verify", garbage.to_str().unwrap(), &problem("t2.toml")]);
    assert_eq!(out.status.code(), Some(2));

    let out = lienard(&["check"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn violated_and_numerical_solves() {
    let dir = tempfile::tempdir().unwrap();
    let violated = dir.path().join("violated.toml");
    let body = std::fs::read_to_string(problem("t1_violated.toml")).unwrap()
        + "\n[solve]\ntheorem = \"T1\"\nbranch = \"+\"\nconstants = { C = 0.0 }\n";
    std::fs::write(&violated, body).unwrap();
    let out = lienard(&["solve", violated.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // theta(1) = 1 leaves the monotone segment near y = 1.75.
    let blowup = dir.path().join("blowup.toml");
    let body = std::fs::read_to_string(problem("t2.toml"))
        .unwrap()
        .replace("K0 = 1.50855217818209569e-1", "K0 = 0.20647935185328714");
    std::fs::write(&blowup, body).unwrap();
    let out = lienard(&["solve", blowup.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));
}

#[test]
fn invariants_table() {
    let out = lienard(&["invariants", &problem("constant_invariants.toml")]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("\nx,S3,S5,S7,I1,I2\n"));
    let rows = data_rows(&stdout);
    assert_eq!(rows.len(), 21);
    for row in rows {
        assert_eq!(&row[1..4], &[1.0, -3.0, 15.0]);
        assert!((row[4] + 27.0).abs() <= 1e-12 && (row[5] - 5.0 / 3.0).abs() <= 1e-12);
    }
    assert!(stdout.contains("# I1 constant"));
    assert!(stdout.contains("# I3 constant mean=-1.05"));
}

#[test]
fn reduce_modes() {
    let file = problem("cubic.toml");
    let out = lienard(&["reduce", &file, "--particular", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("# separable true"));
    assert!(stdout.contains("x,E,Phi1,Phi2"));
    assert!(data_rows(&stdout).iter().all(|r| r[3] == 0.0));

    let out = lienard(&["reduce", &file, "--particular", "x"]);
    assert_eq!(out.status.code(), Some(2));

    let out = lienard(&["reduce", &file, "--normal-form"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("x,omega,xi,I"));

    let out = lienard(&["reduce", &file, "--normal-form", "--particular", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
