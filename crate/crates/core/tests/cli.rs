use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclap-lab"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// `(x, u)` rows of a solution CSV.
fn read_solution(path: &Path) -> Vec<(f64, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|t| t.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

#[test]
fn solve_reproduces_the_closed_form_at_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.csv");
    let o = lab(&[
        "solve",
        "--p",
        "2",
        "--s",
        "0.5",
        "--rhs",
        "const:1",
        "--n",
        "2048",
        "--L",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_solution(&out);
    let u0 = rows.iter().find(|r| r.0 == 0.0).unwrap().1;
    assert!((u0 - 1.0).abs() <= 0.02, "{u0}");
}

#[test]
fn parameter_errors_exit_with_one() {
    assert_eq!(
        code(&lab(&["solve", "--p", "0.9", "--n", "64", "--L", "4"])),
        1
    );
    assert_eq!(
        code(&lab(&["solve", "--s", "1.5", "--n", "64", "--L", "4"])),
        1
    );
    assert_eq!(code(&lab(&["solve", "--bogus", "1"])), 1);
    assert_eq!(code(&lab(&["frobnicate"])), 1);
    assert_eq!(code(&lab(&["verify", "--suite", "nonsense"])), 1);
    assert_eq!(code(&lab(&["--help"])), 0);
}

#[test]
fn convergence_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "p = 3\nn = 128\nL = 4\nmax-iter = 1\n").unwrap();
    let o = lab(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn measure_slopes_and_measurement_errors() {
    let o = lab(&["measure", "--input", "abs", "--p", "2"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let fit = text.lines().find(|l| l.starts_with("# fit,")).unwrap();
    let slope: f64 = fit.split(',').nth(1).unwrap().parse().unwrap();
    assert!((slope - 1.5).abs() <= 0.05, "{slope}");

    let o = lab(&["measure", "--p", "2", "--s", "0.5"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let fit = text.lines().find(|l| l.starts_with("# fit,")).unwrap();
    let slope: f64 = fit.split(',').nth(1).unwrap().parse().unwrap();
    assert!((slope - 1.0).abs() <= 0.1, "{slope}");

    assert_eq!(code(&lab(&["measure", "--input", "const:0"])), 3);
}

#[test]
fn verify_writes_checks() {
    let o = lab(&["verify", "--suite", "duality,commutator"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,check,value,limit,pass"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().any(|l| l.starts_with("duality,")));
    assert!(rows.iter().any(|l| l.starts_with("commutator,identity")));
    assert!(rows.iter().any(|l| l.starts_with("commutator,bound")));
    assert!(rows.iter().all(|l| l.ends_with(",true")));
}

#[test]
fn sweep_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let o = lab(&[
        "sweep",
        "--p-list",
        "3,1.5",
        "--s-list",
        "0.8,0.3",
        "--n",
        "1024",
        "--hmin",
        "0.0078125",
        "--hmax",
        "0.125",
        "--workers",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "p,s,predicted,measured,residual,pass");
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        let f: Vec<&str> = row.split(',').collect();
        let (predicted, measured): (f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        assert!(measured >= predicted - 0.1, "{row}");
        assert_eq!(f[5], "true");
    }
}
