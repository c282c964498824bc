use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn tlid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlid"))
        .args(args)
        .env_remove("TLID_THREADS")
        .output()
        .expect("run tlid")
}

fn json(args: &[&str]) -> Value {
    let out = tlid(args);
    assert!(
        out.status.success(),
        "tlid {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tlid-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// `(param, b)` rows of a curve written to stdout.
fn curve_rows(args: &[&str]) -> Vec<(f64, Option<f64>)> {
    let out = tlid(args);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest: {"));
    assert_eq!(lines.next().unwrap(), "param,mu,sigma2,b,branch");
    lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].parse().unwrap(), cols[3].parse().ok())
        })
        .collect()
}

#[test]
fn moments_negbin() {
    let v = json(&[
        "moments", "--family", "negbin", "--alpha", "2", "--p", "0.5",
    ]);
    assert_eq!(f(&v["mu"]), 2.0);
    assert_eq!(f(&v["sigma2"]), 4.0);
    assert!((f(&v["b"]) - 2.0).abs() < 1e-15);
    assert_eq!(v["manifest"]["command"], "moments");
    assert_eq!(v["manifest"]["params"]["family"]["family"], "negbin");
}

#[test]
fn moments_gamma_unit_shape_is_fixed_point() {
    let v = json(&[
        "moments", "--family", "gamma", "--alpha", "1", "--beta", "3",
    ]);
    assert_eq!(f(&v["b"]), 2.0);
    assert_eq!(v["branch"], "FixedPoint");
}

#[test]
fn moments_tweble_alpha_one_is_domain_error() {
    let out = tlid(&[
        "moments", "--family", "tweble", "--alpha", "1", "--theta", "1",
    ]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.starts_with("error: domain: alpha = 1"), "{err}");
    assert_eq!(err.lines().count(), 1);
    assert!(out.stdout.is_empty());
}

#[test]
fn moments_missing_parameter_names_flag() {
    let out = tlid(&["moments", "--family", "negbin", "--alpha", "2"]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).starts_with("error: config: --p is required"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn usage_errors_are_one_line() {
    let out = tlid(&["moments", "--family"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.starts_with("error: usage: "), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn curve_negbin_changes_sign_at_golden_point() {
    let rows = curve_rows(&[
        "curve", "--family", "negbin", "--alpha", "1", "--from", "0.30", "--to", "0.46",
        "--points", "17",
    ]);
    let p0 = (3.0 - 5f64.sqrt()) / 2.0;
    for w in rows.windows(2) {
        let (b0, b1) = (w[0].1.unwrap(), w[1].1.unwrap());
        let brackets = w[0].0 < p0 && p0 < w[1].0;
        assert_eq!(b0 > 0.0 && b1 < 0.0, brackets, "{w:?}");
    }
}

#[test]
fn curve_tweble_has_pole_at_one() {
    let rows = curve_rows(&[
        "curve", "--family", "tweble", "--theta", "1", "--from", "0.05", "--to", "1.95",
        "--points", "20",
    ]);
    for &(alpha, b) in &rows {
        let b = b.unwrap();
        assert!((b - (2.0 - alpha) / (1.0 - alpha)).abs() < 1e-12);
        assert!(!(0.0 < b && b < 1.0));
    }
    let near = |a: f64| {
        rows.iter()
            .find(|r| (r.0 - a).abs() < 1e-9)
            .unwrap()
            .1
            .unwrap()
    };
    assert!(near(0.95) > 20.0 && near(1.05) < -18.0);
}

#[test]
fn curve_gamma_unit_scale_is_constant() {
    let rows = curve_rows(&[
        "curve", "--family", "gamma", "--beta", "1", "--from", "0.5", "--to", "5", "--points", "10",
    ]);
    assert!(rows.iter().all(|r| r.1 == Some(1.0)));
}

#[test]
fn curve_to_file_writes_manifest_sidecar() {
    let path = tmp("curve.csv");
    let out = tlid(&[
        "curve",
        "--family",
        "cpgeo",
        "--alpha",
        "1",
        "--from",
        "0.1",
        "--to",
        "0.9",
        "--points",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("param,mu,sigma2,b,branch\n"));
    assert_eq!(csv.lines().count(), 6);
    let m: Value = serde_json::from_str(
        &std::fs::read_to_string(path.with_extension("csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(m["schema"], "curve/v1");
    assert_eq!(m["command"], "curve");
}

#[test]
fn sd_check_negbin_is_sd() {
    for p in ["0.1", "0.5", "0.9"] {
        let v = json(&["sd-check", "--family", "negbin", "--alpha", "1.5", "--p", p]);
        assert_eq!(v["verdict"], "SD");
        assert_eq!(v["reference_claim"]["agrees_with_oracle"], true);
    }
}

#[test]
fn sd_check_polya_aeppli_flags_reference_disagreement() {
    let v = json(&[
        "sd-check",
        "--family",
        "polya-aeppli",
        "--alpha",
        "1",
        "--p",
        "0.6",
    ]);
    assert_eq!(v["verdict"], "NotSD");
    assert_eq!(v["first_negative_index"], 1);
    assert!((f(&v["h_head"][1]) - (1.0 - 2.0 * 0.6)).abs() < 1e-12);
    assert!(v["reference_claim"]["statement"]
        .as_str()
        .unwrap()
        .contains("1/2"));
}

#[test]
fn sd_check_tweble_negative_alpha_has_witness() {
    let v = json(&[
        "sd-check", "--family", "tweble", "--alpha", "-1", "--theta", "2",
    ]);
    assert_eq!(v["verdict"], "NotSD");
    assert_eq!(f(&v["lambda_c"]), 2.0);
    assert!(f(&v["witness_lambda"]) > 2.0);
}

#[test]
fn simulate_requires_seed() {
    let out = tlid(&[
        "simulate",
        "--process",
        "ou-gamma",
        "--alpha",
        "2",
        "--beta",
        "1",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--seed"), "{}", stderr(&out));
}

#[test]
fn simulate_disaster_chain_mean() {
    let v = json(&[
        "simulate",
        "--process",
        "disaster-chain",
        "--alpha",
        "1",
        "--p",
        "0.6666666666666666",
        "--seed",
        "1",
        "--paths",
        "20000",
    ]);
    assert!((f(&v["mean"]["point"]) - 2.0).abs() < 4.0 * f(&v["mean"]["stderr"]));
    assert!(f(&v["distances"]["tv"]) < 0.02);
    assert_eq!(v["manifest"]["seed"], 1);
}

#[test]
fn simulate_ou_gamma_ks() {
    let v = json(&[
        "simulate",
        "--process",
        "ou-gamma",
        "--alpha",
        "2",
        "--beta",
        "1",
        "--horizon",
        "20",
        "--seed",
        "5",
    ]);
    assert!(f(&v["distances"]["ks"]) < 0.01, "{}", v["distances"]);
}

#[test]
fn simulate_death_immigration_tv() {
    let v = json(&[
        "simulate",
        "--process",
        "death-immigration",
        "--r",
        "0.5",
        "--cluster",
        "geometric:0.5",
        "--horizon",
        "15",
        "--seed",
        "9",
    ]);
    assert!(f(&v["distances"]["tv"]) < 0.02);
    assert_eq!(v["analytic"]["reference_law"], "negbin(alpha = 1, p = 0.5)");
    assert!(f(&v["z_scores"]["zero_fraction"]) < 4.0);
}

#[test]
fn simulate_tweble_ou_rejects_coarse_cutoff() {
    let out = tlid(&[
        "simulate",
        "--process",
        "tweble-ou",
        "--alpha",
        "0.5",
        "--theta",
        "1",
        "--eps",
        "0.5",
        "--seed",
        "1",
    ]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).starts_with("error: config: jump cutoff"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn simulate_is_reproducible_across_thread_counts() {
    let args = |path: &PathBuf| {
        vec![
            "simulate".to_string(),
            "--process=death-immigration".into(),
            "--r=0.5".into(),
            "--cluster=logarithmic:0.4".into(),
            "--seed=42".into(),
            "--paths=5000".into(),
            format!("--samples={}", path.display()),
        ]
    };
    let (a, b) = (tmp("a.csv"), tmp("b.csv"));
    let run = |path: &PathBuf, threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_tlid"))
            .args(args(path))
            .env("TLID_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        (v["mean"].clone(), v["distances"].clone())
    };
    let first = run(&a, "1");
    let second = run(&b, "3");
    assert_eq!(first, second);
    let (ca, cb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ca, cb);
    assert!(String::from_utf8(ca).unwrap().starts_with("path,value\n0,"));
    let m: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp("a.csv.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["schema"], "samples/v1");
    assert_eq!(m["seed"], 42);
}

#[test]
fn zero_threads_is_rejected() {
    let out = tlid(&[
        "--threads",
        "0",
        "moments",
        "--family",
        "gamma",
        "--alpha",
        "2",
        "--beta",
        "2",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error: config:"));
}

#[test]
fn fit_generated_gamma_sweeps() {
    let v = json(&[
        "fit", "--family", "gamma", "--alpha", "2", "--from", "0.5", "--to", "8",
    ]);
    assert!((f(&v["a_hat"]) + 2f64.ln()).abs() < 1e-10);
    assert!((f(&v["b_hat"]) - 2.0).abs() < 1e-10);
    let v = json(&[
        "fit", "--family", "gamma", "--beta", "3", "--from", "0.5", "--to", "8",
    ]);
    assert!((f(&v["a_hat"]) - 3f64.ln()).abs() < 1e-10);
    assert!((f(&v["b_hat"]) - 1.0).abs() < 1e-10);
}

#[test]
fn fit_rescale_shifts_intercept() {
    let base = json(&[
        "fit", "--family", "tweble", "--alpha", "0.5", "--from", "0.2", "--to", "5",
    ]);
    let scaled = json(&[
        "fit",
        "--family",
        "tweble",
        "--alpha",
        "0.5",
        "--from",
        "0.2",
        "--to",
        "5",
        "--sigma1sq",
        "2.5",
    ]);
    assert!((f(&base["b_hat"]) - 3.0).abs() < 1e-10);
    assert!(f(&base["a_hat"]).abs() < 1e-10);
    assert!((f(&scaled["a_hat"]) - f(&base["a_hat"]) - 2.5f64.ln()).abs() < 1e-10);
    assert!((f(&scaled["b_hat"]) - f(&base["b_hat"])).abs() < 1e-10);
}

#[test]
fn fit_reads_csv() {
    let path = tmp("points.csv");
    std::fs::write(&path, "# comment\nmu,sigma2\n1,2\n2,8\n4,32\n").unwrap();
    let v = json(&["fit", "--input", path.to_str().unwrap()]);
    assert!((f(&v["b_hat"]) - 2.0).abs() < 1e-12);
    assert!((f(&v["a_hat"]) - 2f64.ln()).abs() < 1e-12);
    assert!((f(&v["r_squared"]) - 1.0).abs() < 1e-12);
}

#[test]
fn config_file_supplies_defaults() {
    let path = tmp("run.conf");
    std::fs::write(
        &path,
        "# negbin point\nfamily = negbin\nalpha = 2\np = 0.25\n",
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    let v = json(&["--config", cfg, "moments"]);
    assert!((f(&v["mu"]) - 2.0 / 3.0).abs() < 1e-15);
    let v = json(&["moments", "--config", cfg, "--p", "0.5"]);
    assert_eq!(f(&v["mu"]), 2.0);
}

#[test]
fn help_and_version_succeed() {
    assert!(tlid(&["--help"]).status.success());
    let v = tlid(&["--version"]);
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
}
