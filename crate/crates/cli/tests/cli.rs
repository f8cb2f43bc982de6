use std::path::Path;
use std::process::{Command, Output};

use cauchy_core::geometry::{make_domain, Curve};
use cauchy_core::oracle::manufactured_case;
use cauchy_core::scalar::C;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_cauchy");

fn cauchy(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(cwd).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn demo_config(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("demos").join(name)).unwrap()
}

#[test]
fn demo_list_prints_the_catalog() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cauchy(&["demo", "--list"], tmp.path());
    assert!(out.status.success());
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(names, ["POLY2", "ZBAR_RHS", "POLE_OUTSIDE", "POLE_IN_DPLUS", "ANTIHOLO", "HARMONIC_CUBIC"]);
}

#[test]
fn pole_outside_demo_is_solvable() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cauchy(&["demo", "POLE_OUTSIDE", "--output", "po", "--seed-free"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("po");
    let r = report(&dir);
    assert_eq!(r["solvability"]["verdict"], "SOLVABLE");
    assert!(r["reconstruction"]["errors"]["sup"].as_f64().unwrap() < 1e-3);
    for f in ["coefficients.csv", "field.csv", "plot.gp", "report.json"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let coeffs = std::fs::read_to_string(dir.join("coefficients.csv")).unwrap();
    assert_eq!(coeffs.lines().next().unwrap(), "nu,re_c,im_c,partial_sum");
    assert_eq!(coeffs.lines().count(), 41);
    let field = std::fs::read_to_string(dir.join("field.csv")).unwrap();
    assert_eq!(field.lines().next().unwrap(), "x,y,re_u,im_u,re_exact,im_exact,abs_error");
}

#[test]
fn gamma_through_origin_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = demo_config("poly2.toml").replace("offset = 0.3", "offset = 0.0");
    std::fs::write(tmp.path().join("bad.toml"), cfg).unwrap();
    let out = cauchy(&["solve", "--config", "bad.toml", "--output", "bad"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "GammaThroughOrigin");
    assert!(!tmp.path().join("bad").exists());
}

#[test]
fn unknown_keys_and_missing_files_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = demo_config("poly2.toml").replace("[solver]", "[solver]\ntolerance = 1.0");
    std::fs::write(tmp.path().join("unk.toml"), cfg).unwrap();
    assert_eq!(cauchy(&["check", "--config", "unk.toml"], tmp.path()).status.code(), Some(2));
    let cfg = demo_config("poly2.toml").replace("case = \"POLY2\"", "u0_csv = \"nowhere.csv\"");
    std::fs::write(tmp.path().join("missing.toml"), cfg).unwrap();
    let out = cauchy(&["solve", "--config", "missing.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn antiholo_demo_refuses_reconstruction() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cauchy(&["demo", "ANTIHOLO", "--output", "a"], tmp.path());
    assert!(out.status.success());
    assert_eq!(report(&tmp.path().join("a"))["solvability"]["verdict"], "NOT_SOLVABLE");
    assert!(!tmp.path().join("a/field.csv").exists());
    let out = cauchy(&["demo", "ANTIHOLO", "--output", "b", "--force-reconstruct"], tmp.path());
    assert!(out.status.success());
    let r = report(&tmp.path().join("b"));
    assert_eq!(r["reconstruction"]["non_convergent"], true);
    assert!(tmp.path().join("b/field.csv").exists());
}

#[test]
fn basis_dump_has_closed_form_norms() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("p.toml"), demo_config("poly2.toml")).unwrap();
    let out = cauchy(&["basis", "--config", "p.toml", "--output", "b"], tmp.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(tmp.path().join("b/basis.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "nu,degree,lambda,provenance");
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let nu = k as i32 + 1;
        assert_eq!(cols[0].parse::<i32>().unwrap(), nu);
        let lambda: f64 = cols[2].parse().unwrap();
        assert!((lambda / 0.15f64.powi(2 * nu) - 1.0).abs() < 1e-13, "nu={nu}");
    }
}

#[test]
fn check_reports_vacuous_compatibility() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("z.toml"), demo_config("zbar_rhs.toml")).unwrap();
    let out = cauchy(&["check", "--config", "z.toml"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "compatibility: vacuous (E₂=0)"), "{text}");
}

#[test]
fn csv_data_matches_the_manufactured_case() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = demo_config("poly2.toml").replace("n = 40", "n = 16");
    let parsed = cauchy_cli::ScenarioConfig::from_toml(&cfg).unwrap();
    let spec = make_domain::<f64>(&parsed.domain).unwrap();
    let case = manufactured_case("POLY2").unwrap();
    let mut u0 = String::from("s,re,im\n");
    for k in 0..=800 {
        let s = -1.0 + k as f64 / 400.0;
        let v: C<f64> = case.u0(spec.curve_point(Curve::Gamma, s));
        u0.push_str(&format!("{s},{:e},{:e}\n", v.re, v.im));
    }
    std::fs::write(tmp.path().join("u0.csv"), u0).unwrap();
    std::fs::write(tmp.path().join("c.toml"), cfg.replace("case = \"POLY2\"", "u0_csv = \"u0.csv\"")).unwrap();
    let out = cauchy(&["solve", "--config", "c.toml", "--output", "csv"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = report(&tmp.path().join("csv"));
    std::fs::write(tmp.path().join("p.toml"), &cfg).unwrap();
    let out = cauchy(&["solve", "--config", "p.toml", "--output", "case"], tmp.path());
    assert!(out.status.success());
    let b = report(&tmp.path().join("case"));
    let rho = |r: &Value| r["solvability"]["rho_hat"].as_f64().unwrap();
    assert_eq!(a["solvability"]["verdict"], b["solvability"]["verdict"]);
    assert!((rho(&a) - rho(&b)).abs() < 1e-3);
    assert_eq!(a["data"]["source"], "csv");
}

#[test]
fn classical_csv_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = demo_config("harmonic_cubic.toml").replace("n = 30", "n = 16");
    let parsed = cauchy_cli::ScenarioConfig::from_toml(&cfg).unwrap();
    let spec = make_domain::<f64>(&parsed.domain).unwrap();
    let case = manufactured_case("HARMONIC_CUBIC").unwrap();
    let mut rows = String::from("s,u,dudn\n");
    for k in 0..=800 {
        let s = -1.0 + k as f64 / 400.0;
        let z = spec.curve_point(Curve::Gamma, s);
        let d = spec.curve_deriv(Curve::Gamma, s);
        let t = d / d.norm();
        let normal = if spec.contains(z + C::new(t.im, -t.re) * 1e-3) { -C::new(t.im, -t.re) } else { C::new(t.im, -t.re) };
        let (u, grad) = case.classical(z).unwrap();
        rows.push_str(&format!("{s},{u:e},{:e}\n", grad.re * normal.re + grad.im * normal.im));
    }
    std::fs::write(tmp.path().join("cl.csv"), rows).unwrap();
    std::fs::write(tmp.path().join("c.toml"), cfg.replace("case = \"HARMONIC_CUBIC\"", "classical_csv = \"cl.csv\"")).unwrap();
    let out = cauchy(&["solve", "--config", "c.toml", "--output", "cl"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&tmp.path().join("cl"));
    assert_eq!(r["data"]["source"], "classical");
    let field = std::fs::read_to_string(tmp.path().join("cl/field.csv")).unwrap();
    let mut worst: f64 = 0.0;
    for line in field.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (u, _) = case.classical(C::new(v[0], v[1])).unwrap();
        worst = worst.max((v[2] - u).abs());
    }
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn malformed_csv_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("u0.csv"), "s,re,im\n-1,0,0\n0.5,x,0\n").unwrap();
    let cfg = demo_config("poly2.toml").replace("case = \"POLY2\"", "u0_csv = \"u0.csv\"");
    std::fs::write(tmp.path().join("c.toml"), cfg).unwrap();
    let out = cauchy(&["solve", "--config", "c.toml", "--output", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn config_echo_reruns_to_the_same_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cauchy(&["demo", "POLY2", "--output", "first"], tmp.path());
    assert!(out.status.success());
    let first = report(&tmp.path().join("first"));
    let out = cauchy(&["solve", "--config", "first/report.json"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut second = report(&tmp.path().join("first"));
    let mut first = first;
    first.as_object_mut().unwrap().remove("timings");
    second.as_object_mut().unwrap().remove("timings");
    assert_eq!(first, second);
}
