use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypstab"))
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn out_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hypstab-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(args: &[&str], out: &Path) -> (i32, String) {
    let o = bin().args(args).arg("--out").arg(out).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned())
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn check_cauchy_passes_for_upwind() {
    let out = out_dir("cauchy");
    let (code, _) = run(&["check-cauchy", "--scheme", &fixture("upwind")], &out);
    assert_eq!(code, 0);
    let r = report(&out);
    assert_eq!(r["schema"], "hypstab.report/1");
    assert_eq!(r["verdicts"][0]["pass"], true);
    let csv = std::fs::read_to_string(out.join("branches.csv")).unwrap();
    assert!(csv.starts_with("branch,eta,re,im,abs\n"));
}

#[test]
fn check_glancing_flags_leapfrog() {
    let out = out_dir("glancing");
    let (code, _) = run(&["check-glancing", "--scheme", &fixture("leapfrog")], &out);
    assert_eq!(code, 1);
    let r = report(&out);
    let etas: Vec<f64> = r["data"]["hits"].as_array().unwrap().iter().map(|h| h["eta"].as_f64().unwrap()).collect();
    assert!(!etas.is_empty());
    let pi = std::f64::consts::PI;
    for eta in etas {
        assert!((eta - pi / 2.0).abs() < 1e-6 || (eta - 1.5 * pi).abs() < 1e-6, "{eta}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let out = out_dir("usage");
    assert_eq!(run(&["check-cauchy", "--scheme", "/nonexistent/scheme.json"], &out).0, 2);
    assert_eq!(run(&["frobnicate"], &out).0, 2);
    assert_eq!(run(&["check-uklc", "--scheme", &fixture("upwind"), "--tol-kl", "0"], &out).0, 2);
    assert_eq!(run(&["verify", "--scheme", &fixture("upwind"), "--estimate", "nope"], &out).0, 2);
    assert!(!out.join("report.json").exists());
}

#[test]
fn reports_are_byte_stable() {
    let (a, b) = (out_dir("det-a"), out_dir("det-b"));
    let args = ["simulate", "--scheme", &fixture("lax_friedrichs"), "--seed", "17", "--horizon", "2"];
    assert_eq!(run(&args, &a).0, 0);
    assert_eq!(run(&args, &b).0, 0);
    for f in ["report.json", "series.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = out_dir("det-c");
    let other = ["simulate", "--scheme", &fixture("lax_friedrichs"), "--seed", "18", "--horizon", "2"];
    run(&other, &c);
    assert_ne!(std::fs::read(a.join("series.csv")).unwrap(), std::fs::read(c.join("series.csv")).unwrap());
    assert_eq!(report(&a)["seed"], 17);
}

#[test]
fn verify_and_uklc_commands() {
    let out = out_dir("verify");
    let (code, stdout) = run(
        &["verify", "--estimate", "semigroup", "--scheme", &fixture("upwind"), "--horizon", "4"],
        &out,
    );
    assert_eq!(code, 0, "{stdout}");
    assert!(std::fs::read_to_string(out.join("cells.csv")).unwrap().starts_with("dx,dt,c2,"));
    let out = out_dir("uklc");
    assert_eq!(run(&["check-uklc", "--scheme", &fixture("lax_wendroff"), "--ntheta", "32"], &out).0, 1);
    assert_eq!(run(&["check-uklc", "--scheme", &fixture("upwind"), "--ntheta", "32"], &out).0, 0);
}

#[test]
fn sbp_and_blocks_commands() {
    let out = out_dir("sbp");
    assert_eq!(run(&["sbp-decompose", "--scheme", &fixture("lax_friedrichs")], &out).0, 0);
    let r = report(&out);
    assert!((r["data"]["d1"].as_f64().unwrap() + 0.75).abs() < 1e-12);
    let out = out_dir("blocks");
    let (code, _) = run(&["classify-blocks", "--scheme", &fixture("leapfrog"), "--z-angle", "-0.5235987755982988"], &out);
    assert_eq!(code, 1);
    assert!(std::fs::read_to_string(out.join("blocks.csv")).unwrap().contains("glancing"));
}

#[test]
fn in_process_entry_point() {
    let out = out_dir("inproc");
    let code = hypstab::cli::run_command([
        "hypstab",
        "check-cauchy",
        "--scheme",
        "fixture:lax-wendroff",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(hypstab::cli::run_command(["hypstab", "--help"]), 0);
}
