use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tev::report::{run_experiment, RunConfig};

fn tev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tev")).args(args).output().expect("binary runs")
}

fn lines(dir: &Path, file: &str) -> Vec<String> {
    fs::read_to_string(dir.join(file)).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn single_level_bundle_is_the_coarse_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = tev(&["run", "--coarse-div", "4", "--levels", "1", "--q", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let eig = lines(&out, "eigenvalues.csv");
    assert_eq!(eig[0], "level,h,j,k_re,k_im,residual,seconds");
    assert_eq!(eig.len(), 3);
    assert!(eig[1..].iter().all(|l| l.starts_with("1,0.3535533906,")));
    assert_eq!(lines(&out, "errors.csv"), vec!["h,j,abs_error"]);
    assert_eq!(lines(&out, "orders.csv"), vec!["j,slope"]);
    let svg = fs::read_to_string(out.join("errors_loglog.svg")).unwrap();
    assert!(!svg.contains("<polyline"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("o");
    fs::write(&cfg, format!("domain=unit_square\nn=affine 8 1 -1\ncoarse_div=8 levels=3 q=1\nshift=8\nout={}\n", out.display())).unwrap();
    let o = tev(&["run", "--config", cfg.to_str().unwrap(), "--coarse-div", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let eig = lines(&out, "eigenvalues.csv");
    assert_eq!(eig.len(), 4);
    assert!(eig[1].starts_with("1,0.3535533906,1,"));
    assert_eq!(lines(&out, "errors.csv").len(), 3);
    // two error points are not enough for an order
    assert_eq!(lines(&out, "orders.csv").len(), 1);
    assert_eq!(lines(&out, "diagnostics.csv").len(), 4);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert_eq!(tev(&["run", "--n", "0.5", "--out", o]).status.code(), Some(1));
    assert_eq!(tev(&["run", "--levels", "0", "--out", o]).status.code(), Some(1));
    assert_eq!(tev(&["run", "--domain", "disc", "--out", o]).status.code(), Some(1));
    assert_eq!(tev(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(tev(&["run", "--config", "/nonexistent/run.cfg"]).status.code(), Some(1));
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "colour=blue").unwrap();
    assert_eq!(tev(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn solver_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hard.cfg");
    fs::write(&cfg, "coarse_div=4 levels=1 tol=1e-300 max_restarts=0").unwrap();
    let out = dir.path().join("o");
    let o = tev(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    // partial outputs are still written
    assert_eq!(lines(&out, "eigenvalues.csv").len(), 1);
}

#[test]
fn negative_shift_and_affine_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = tev(&[
        "run", "--n-affine", "8", "1", "-1", "--coarse-div", "4", "--levels", "1", "--q", "2", "--shift-re", "19.46",
        "--shift-im", "-7.84", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let eig = lines(&out, "eigenvalues.csv");
    assert!(eig.len() >= 3);
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let text = format!("coarse_div=4 levels=3 q=2 record_time=false out={}", out.display());
        let config = RunConfig::parse(&text).unwrap();
        let bundle = run_experiment(&config).unwrap();
        assert_eq!(bundle.orders.len(), 0);
        let files: Vec<String> = ["eigenvalues.csv", "errors.csv", "orders.csv", "diagnostics.csv", "errors_loglog.svg"]
            .iter()
            .map(|f| fs::read_to_string(out.join(f)).unwrap())
            .collect();
        texts.push(files);
    }
    assert_eq!(texts[0], texts[1]);
    // errors are recomputable from the eigenvalue table
    let eig: Vec<Vec<f64>> = texts[0][0]
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    for row in texts[0][1].lines().skip(1) {
        let r: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        let at = |lvl_h: f64, j: f64| eig.iter().find(|e| e[1] == lvl_h && e[2] == j).unwrap().clone();
        let finest = eig.iter().filter(|e| e[2] == r[1]).last().unwrap();
        let e = at(r[0], r[1]);
        let err = ((e[3] - finest[3]).powi(2) + (e[4] - finest[4]).powi(2)).sqrt();
        assert!((err - r[2]).abs() <= 1e-9 * err.max(1e-12) + 1e-9);
    }
}
