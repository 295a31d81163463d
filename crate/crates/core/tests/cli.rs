//! End-to-end runs of the `sparsephase` binary on small problems.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sparsephase::experiment::read_records;
use sparsephase::inference::parse_zscores;

fn sparsephase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsephase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_run(dir: &Path, name: &str, suites: &str, seed: &str) -> PathBuf {
    let out = dir.join(name);
    let o = sparsephase(&[
        "run", "--suites", suites, "--N", "40,64", "--deltas", "0.3:0.6:2", "--M", "20", "--pilot-M", "10",
        "--seed", seed, "--workers", "1", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", text(&o));
    out
}

#[test]
fn run_analyze_and_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let base = small_run(d, "base.txt", "1,2", "1");
    let alt = small_run(d, "alt.txt", "1,2", "2");
    let records = read_records(&base).unwrap();
    assert!(records.iter().any(|r| r.suite == 1) && records.iter().any(|r| r.suite == 2));

    let curve = d.join("curve.txt");
    std::fs::write(&curve, "# test curve\ndelta rhoT rhoC\n0.05 0.1 0.05\n0.95 0.95 0.9\n").unwrap();

    let o = sparsephase(&["analyze", "ld50", "--in", s(&base), "--ref", s(&curve)]);
    assert!(o.status.success(), "{}", text(&o));
    let table = String::from_utf8_lossy(&o.stdout).to_string();
    assert!(table.starts_with("E N n delta ld50 width gap"));
    assert!(table.lines().count() > 4);

    let z = d.join("z.txt");
    let o = sparsephase(&["analyze", "zscores", "--in", s(&alt), "--baseline", s(&base), "--out", s(&z)]);
    assert!(o.status.success(), "{}", text(&o));
    let zs = parse_zscores(&std::fs::read_to_string(&z).unwrap(), Some(&z)).unwrap();
    assert!(!zs.is_empty());
    assert!(d.join("z.pp.csv").exists());

    for sub in [&["analyze", "hc", "--in"][..], &["analyze", "scaling", "--in"][..]] {
        let mut args = sub.to_vec();
        args.push(s(&z));
        let o = sparsephase(&args);
        assert!(o.status.success(), "{sub:?}: {}", text(&o));
    }
    let o = sparsephase(&["analyze", "glm", "--in", s(&base), "--link", "probit"]);
    assert!(o.status.success(), "{}", text(&o));

    let report = d.join("report");
    let o = sparsephase(&[
        "report", "--in", s(&base), "--ref", s(&curve), "--baseline", s(&base), "--out-dir", s(&report),
    ]);
    assert!(o.status.success(), "{}", text(&o));
    for f in ["level_E1.csv", "level_E2.csv", "heatmap_E1.csv", "heatmap_E2.csv", "pp.csv"] {
        assert!(report.join(f).exists(), "{f} missing");
    }
    let level = std::fs::read_to_string(report.join("level_E2.csv")).unwrap();
    assert!(level.starts_with("N,delta,ld50,width,rho_ref"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sparsephase(&["frobnicate"]).status.code(), Some(1));
    let missing = dir.path().join("nope.txt");
    assert_eq!(sparsephase(&["analyze", "ld50", "--in", s(&missing)]).status.code(), Some(2));
    let o = sparsephase(&["verify", "--matrices", "1", "--draws", "50", "--lps", "10", "--k", "1", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o));
    let bad_curve = dir.path().join("bad.txt");
    std::fs::write(&bad_curve, "delta rhoT rhoC\n0.5 0.2 0.3\n").unwrap();
    let rec = dir.path().join("r.txt");
    std::fs::write(&rec, "E N n k M S\n2 40 20 5 10 9\n2 40 20 10 10 1\n").unwrap();
    let o = sparsephase(&["analyze", "ld50", "--in", s(&rec), "--ref", s(&bad_curve)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("order violated"), "{}", text(&o));
}

#[test]
fn config_file_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg");
    let out = dir.path().join("r.txt");
    std::fs::write(&cfg, format!("suites = 2\nN = 40\ndeltas = 0.5\nM = 8\npilot-M = 8\nout = {}\n", out.display())).unwrap();
    let o = sparsephase(&["run", "--config", s(&cfg), "--M", "6"]);
    assert!(o.status.success(), "{}", text(&o));
    let r = read_records(&out).unwrap();
    assert!(!r.is_empty() && r.iter().all(|c| c.trials == 6 && c.n == 20));
}
