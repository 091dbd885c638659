use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use replica_es::error::exit;
use replica_es::io::Manifest;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_replica-es")).args(args).env("REPLICA_ES_LOG", "error").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn solve_output_is_byte_identical() {
    let args = ["solve", "--alpha", "0.975", "--r", "0.1", "--eta", "0.01"];
    let (a, b) = (cli(&args), cli(&args));
    assert_eq!(code(&a), exit::OK);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "alpha,r,eta,q0,rel_error,delta,epsilon,free_energy,es_in,es_in_cvar,residual_norm"
    );
    // Every number carries at least 12 significant digits.
    for cell in lines.next().unwrap().split(',') {
        let mantissa = cell.split('e').next().unwrap().replace(['-', '.'], "");
        assert!(mantissa.len() >= 12, "{cell}");
    }
}

#[test]
fn json_output_mirrors_columns() {
    let o = cli(&["--format", "json", "solve", "--alpha", "0.9", "--r", "0.2"]);
    assert_eq!(code(&o), exit::OK);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "complete");
    assert_eq!(v["columns"].as_array().unwrap().len(), 11);
    assert!(v["rows"][0]["q0"].as_f64().unwrap() > 1.0);
}

#[test]
fn exit_codes() {
    let cases: [(&[&str], i32); 6] = [
        (&["solve", "--alpha", "0.9", "--r", "0.2"], exit::OK),
        (&["solve", "--alpha", "1.5", "--r", "0.2"], exit::USAGE),
        (&["solve", "--alpha", "0.975", "--r", "0.8"], exit::INFEASIBLE_REGION),
        (&["curve", "iso-delta", "--level", "2", "--eta", "0.3"], exit::LEVEL_UNREACHABLE),
        (&["mc", "--n-assets", "45", "--n-obs", "50", "--alpha", "0.9", "--samples", "2"], exit::UNBOUNDED),
        (&["figure", "fig9"], exit::USAGE),
    ];
    for (args, want) in cases {
        assert_eq!(code(&cli(args)), want, "{args:?}");
    }
    assert_eq!(code(&cli(&["frobnicate"])), exit::USAGE);
    let blocked = ["--output", "/dev/null/x.csv", "solve", "--alpha", "0.9", "--r", "0.2"];
    assert_eq!(code(&cli(&blocked)), exit::IO);
}

#[test]
fn shift_too_large_is_reported() {
    let o = cli(&["mc", "--n-assets", "100", "--n-obs", "400", "--alpha", "0.9", "--eta", "0.05", "--samples", "4", "--shift-xi", "1"]);
    assert_eq!(code(&o), exit::SHIFT_TOO_LARGE);
}

#[test]
fn mc_results_do_not_depend_on_workers() {
    let base = ["mc", "--n-assets", "20", "--n-obs", "60", "--alpha", "0.9", "--eta", "0.1", "--samples", "8", "--seed", "4"];
    let one = cli(&[&["--workers", "1"], &base[..]].concat());
    let four = cli(&[&["--workers", "4"], &base[..]].concat());
    assert_eq!(code(&one), exit::OK);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn two_branch_iso_q0_curve() {
    let o = cli(&["curve", "iso-q0", "--level", "1.05", "--eta", "0.05", "--alpha-min", "0.6", "--alpha-max", "0.995"]);
    assert_eq!(code(&o), exit::OK);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.contains(",lower,")));
    assert!(text.lines().any(|l| l.contains(",upper,")));
}

#[test]
fn figure_directory_has_hashed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1");
    let o = cli(&["--output", out.to_str().unwrap(), "figure", "fig1"]);
    assert_eq!(code(&o), exit::OK);
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(m.files.len(), 1);
    assert!(m.stale_files(&out).is_empty());
    fs::write(out.join(&m.files[0].path), "tampered\n").unwrap();
    assert_eq!(m.stale_files(&out), vec![m.files[0].path.clone()]);
    assert!(Path::new(&out.join("phase_boundary.csv")).exists());
}
