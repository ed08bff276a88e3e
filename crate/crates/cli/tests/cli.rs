use std::path::Path;
use std::process::{Command, Output};

use bleach_cli::records::{read_rows, Figure1Row, SweepRow};
use bleach_cli::RunConfig;
use bleach_core::kernel::{kernel_ode_march, save_table, MarchConfig};
use bleach_core::optimizer::BetaSweep;
use bleach_core::KernelTable;

const SMALL: [&str; 8] = [
    "--r-max", "1", "--r-step", "0.25", "--beta-max", "2", "--beta-step", "0.5",
];

fn bleach(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bleach"))
        .current_dir(dir)
        .env("RUST_LOG", "info")
        .args(args)
        .args(SMALL)
        .output()
        .expect("run bleach")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn tabulate_then_reuse_cache() {
    let dir = tempfile::tempdir().unwrap();
    let first = bleach(dir.path(), &["tabulate"]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(dir.path().join("kernel.ktab").exists());
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert!(stdout.contains("sha256"), "{stdout}");
    let second = bleach(dir.path(), &["tabulate"]);
    assert!(second.status.success());
    assert!(stderr(&second).contains("cache hit"), "{}", stderr(&second));
    let resolved = std::fs::read_to_string(dir.path().join("out/tabulate.config")).unwrap();
    let mut cfg = RunConfig::default();
    cfg.apply_text(&resolved).unwrap();
    assert_eq!(cfg.r_step, 0.25);
    assert_eq!(cfg.beta_max, 2.0);
}

#[test]
fn missing_table_names_tabulate() {
    let dir = tempfile::tempdir().unwrap();
    let out = bleach(dir.path(), &["optimize"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bleach tabulate"), "{}", stderr(&out));
}

#[test]
fn optimize_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bleach(dir.path(), &["tabulate"]).status.success());
    let out = bleach(dir.path(), &["optimize"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let o = dir.path().join("out");

    let header = std::fs::read_to_string(o.join("figure1.csv")).unwrap();
    let columns = header.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        columns,
        "beta,log_kernel_sum_overall,nstar,log_best_n1,log_best_n2,log_best_n3,log_best_n4"
    );

    let sweep: BetaSweep = serde_json::from_str(&std::fs::read_to_string(o.join("sweep.json")).unwrap()).unwrap();
    let expected: Vec<SweepRow> = sweep.results.iter().map(SweepRow::from).collect();
    let parsed: Vec<SweepRow> = read_rows(&o.join("sweep.csv")).unwrap();
    assert_eq!(parsed, expected);
    let fig1: Vec<Figure1Row> = read_rows(&o.join("figure1.csv")).unwrap();
    assert_eq!(fig1, sweep.results.iter().map(Figure1Row::from).collect::<Vec<_>>());
    assert_eq!(fig1.len(), 5);

    let transitions = std::fs::read_to_string(o.join("transitions.csv")).unwrap();
    assert_eq!(transitions.lines().skip(1).filter(|l| !l.is_empty()).count(), sweep.transitions.len());
    for name in ["figure1.svg", "figure2.svg", "figure3.svg"] {
        let svg = std::fs::read_to_string(o.join(name)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"), "{name}");
    }
}

#[test]
fn problem2_cells_are_valid() {
    let dir = tempfile::tempdir().unwrap();
    assert!(bleach(dir.path(), &["tabulate"]).status.success());
    let out = bleach(dir.path(), &["problem2", "--energy-bins", "10"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows: Vec<bleach_cli::records::Problem2Row> = read_rows(&dir.path().join("out/problem2.csv")).unwrap();
    assert_eq!(rows.len(), 5 * 10);
    assert!(rows.iter().all(|r| r.nstar.is_none_or(|n| (1..=4).contains(&n))));
    assert!(rows.iter().any(|r| r.nstar.is_some()));
    assert!(dir.path().join("out/figure4.svg").exists());
}

#[test]
fn validate_reports_injected_asymmetry() {
    let dir = tempfile::tempdir().unwrap();
    let r = KernelTable::uniform_grid(1.0, 0.25).unwrap();
    let b = KernelTable::uniform_grid(2.0, 0.5).unwrap();
    let table = kernel_ode_march(&r, &b, &MarchConfig::default()).unwrap();
    let mut values = table.values().to_vec();
    let n = r.len();
    values[(2 * n + 1) * n + 3] *= 1.01;
    let broken = KernelTable::from_raw_parts(r, b, values, table.meta.clone()).unwrap();
    save_table(&broken, dir.path().join("kernel.ktab")).unwrap();

    let out = bleach(dir.path(), &["validate", "--criteria", "7"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/validation.json")).unwrap()).unwrap();
    let symmetry = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "kernel symmetry")
        .expect("symmetry check present");
    assert_eq!(symmetry["passed"], false);
}

#[test]
fn estimate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bleach(
        dir.path(),
        &["estimate", "--shape", "1.0", "--beta", "1", "--sigma", "0.05", "--trials", "10", "--seed", "3"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/estimation.json")).unwrap()).unwrap();
    for key in ["predicted", "empirical", "estimates", "failures", "seed"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["seed"], 3);
    assert_eq!(report["estimates"].as_array().unwrap().len(), 10);
}

#[test]
fn invalid_ranges_fail_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bleach"))
        .current_dir(dir.path())
        .args(["tabulate", "--r-step", "-1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("kernel.ktab").exists());
}
