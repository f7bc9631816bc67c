use std::process::Command;

use freewishart::cli::run;
use freewishart::resolvent::DensityCurve;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("freewishart").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn aliases_and_specs_agree() {
    for (alias, spec) in [
        ("fc2", "mp(1)^2"),
        ("bures", "as*mp(1)"),
        ("mp-cbrt", "mp(1)^(1/3)"),
    ] {
        let (_, a, _) = call(&["density", "--measure", alias, "--points", "40"]);
        let (_, b, _) = call(&["density", "--measure", spec, "--points", "40"]);
        for (p, q) in rows(&a).iter().zip(rows(&b)) {
            assert!(
                (p[0] - q[0]).abs() < 1e-8 && (p[1] - q[1]).abs() < 1e-6,
                "{alias}: {p:?} vs {q:?}"
            );
        }
        let (_, a, _) = call(&["support", "-m", alias]);
        let (_, b, _) = call(&["support", "-m", spec]);
        let (a, b) = (&rows(&a)[0], &rows(&b)[0]);
        assert!((a[0] - b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-8);
    }
}

#[test]
fn density_table_reproduces_the_closed_form() {
    let (code, out, _) = call(&["density", "--measure", "mp(1)^3", "--points", "200"]);
    assert_eq!(code, 0);
    let table = rows(&out);
    assert_eq!(table.len(), 200);
    let fc3 = freewishart::closedform::Family::Fc3;
    let peak = table.iter().map(|r| fc3.eval(r[0])).fold(0.0, f64::max);
    for r in &table {
        assert!((r[1] - fc3.eval(r[0])).abs() < 1e-6 * peak);
    }
}

#[test]
fn json_output_round_trips_bit_exactly() {
    let (code, json, _) = call(&["density", "-m", "as", "--points", "33", "--format", "json"]);
    assert_eq!(code, 0);
    let curve = DensityCurve::from_json(&json).unwrap();
    assert_eq!(curve.to_json() + "\n", json);
    let (_, csv, _) = call(&["density", "-m", "as", "--points", "33"]);
    for (p, q) in curve.points.iter().zip(rows(&csv)) {
        assert_eq!(
            (p.0.to_bits(), p.1.to_bits()),
            (q[0].to_bits(), q[1].to_bits())
        );
    }
}

#[test]
fn moments_are_exact_fractions() {
    let (code, out, _) = call(&["moments", "--measure", "as*mp(1)", "-K", "8"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "k,moment,value");
    assert_eq!(lines[2], "1,1,1.0");
    assert_eq!(lines[4], "3,8,8.0");
    assert_eq!(lines.len(), 10);
}

#[test]
fn ring_and_potential() {
    let (code, out, _) = call(&["ring", "-m", "mp(1)^2", "--points", "11"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# r_in=0.0 r_out=1.0\n"));
    for r in rows(&out) {
        assert!((r[0] - r[1]).abs() < 1e-10);
    }
    // MP(1): G = (z - sqrt(z(z-4)))/(2z), so 2 Re G = 1 on the support
    let (code, out, _) = call(&["potential", "-m", "mp(1)", "--points", "9"]);
    assert_eq!(code, 0);
    for r in rows(&out) {
        assert!((r[1] - 1.0).abs() < 1e-8, "{r:?}");
    }
}

#[test]
fn simulate_reports_ks_and_atoms() {
    let (code, out, _) = call(&[
        "simulate",
        "--config",
        "N=32,samples=4,seed=3",
        "--measure",
        "as*mp(2)",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"], "N=32,samples=4,seed=3,k=2,c=2");
    assert_eq!(v["atom_fraction"], 0.5);
    assert!(v["ks"].as_f64().unwrap() < 0.2);
    assert!(v["rng"].as_str().unwrap().contains("ChaCha8"));
    let (code, csv, _) = call(&[
        "simulate",
        "--config",
        "N=16,samples=2,seed=3,s=1",
        "--format",
        "csv",
        "--bins",
        "8",
    ]);
    assert_eq!(code, 0);
    assert!(csv.starts_with("bin_lo,bin_hi,density\n"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn compare_report_with_simulation() {
    let (code, out, _) = call(&[
        "compare",
        "--measure",
        "mp(1)^2",
        "--simulate",
        "N=128,samples=8,seed=7",
    ]);
    assert_eq!(code, 0);
    let get = |key: &str| -> f64 {
        out.lines()
            .find_map(|l| l.strip_prefix(&format!("{key},")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(get("closed_form_error") < 1e-6);
    assert!((get("mass") - 1.0).abs() < 1e-6);
    assert!(get("mc_ks") < 0.05);
}

#[test]
fn errors_and_exit_codes() {
    let (code, _, err) = call(&["density", "--measure", "mp(1)*xyz"]);
    assert_eq!(code, 2);
    assert!(err.contains("mp(1)*xyz\n        ^"), "{err}");
    let (code, _, _) = call(&["bogus"]);
    assert_eq!(code, 2);
    let (code, _, _) = call(&["density"]);
    assert_eq!(code, 2);
    // no ensemble realises a free square root
    let (code, _, err) = call(&["simulate", "--measure", "mp(1)^(1/2)"]);
    assert_eq!(code, 1);
    assert!(err.contains("mp(1)^(1/2)"), "{err}");
    let (code, _, _) = call(&["ring", "-m", "mp(2)"]);
    assert_eq!(code, 1);
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("density"));
}

#[test]
fn output_file_and_binary_exit_status() {
    let path = std::env::temp_dir().join(format!("freewishart-cli-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    let (code, out, _) = call(&["support", "-m", "mp(1/4)", "--out", p]);
    assert_eq!((code, out.as_str()), (0, ""));
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let r = &rows(&written)[0];
    assert!((r[0] - 0.25).abs() < 1e-8 && (r[1] - 2.25).abs() < 1e-8);

    let bin = env!("CARGO_BIN_EXE_freewishart");
    let status = Command::new(bin)
        .args(["support", "-m", "as"])
        .output()
        .unwrap();
    assert!(status.status.success());
    let status = Command::new(bin)
        .args(["support", "-m", "as("])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}
