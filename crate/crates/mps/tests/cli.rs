use std::fs;
use std::path::Path;
use std::process::Command;

fn mps(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mps")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_ADVECTION: &str = "\
[experiment]
name = small
kind = advection
[layout]
[band]
r = 0 : 0.5 : 8
theta = 0 : 2pi : 16
[band]
r = 0.5 : 1 : 8
theta = 0 : 2pi : 16
[advection]
dt = 0.01
t_final = 0.04
snapshot_steps = 0, 4
";

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ok");
    let o = mps(&["run", "--preset", "table1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("coefficients.csv").exists());
    assert!(out.join("report.csv").exists());

    let bad = write(tmp.path(), "bad.cfg", "[experiment]\nname = x\nkind = wrong\n");
    assert_eq!(mps(&["run", &bad, "--out", tmp.path().join("bad").to_str().unwrap()]).status.code(), Some(2));

    // A radial drift pushes the feet out of the domain, which is an error by default.
    let drift = SMALL_ADVECTION.replace("[advection]\n", "[advection]\nfield = constant_logical\nvr = -1\n");
    let drift = write(tmp.path(), "drift.cfg", &drift);
    let o = mps(&["run", &drift, "--out", tmp.path().join("drift").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let o = mps(&["presets"]);
    assert!(String::from_utf8_lossy(&o.stdout).lines().any(|l| l == "test2_2"));
}

#[test]
fn runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.cfg", SMALL_ADVECTION);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = mps(&["run", &cfg, "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["advection.csv", "report.csv", "config.cfg", "snapshots/step00004_band1_patch0.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn zero_steps_leave_the_initial_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = mps::config::ExperimentConfig::parse(&SMALL_ADVECTION.replace("t_final = 0.04", "t_final = 0").replace("0, 4", "0")).unwrap();
    let r = mps::run(&cfg, tmp.path()).unwrap();
    assert_eq!(r.get("steps"), Some(0.0));
    assert_eq!(r.get("final_err[local]"), Some(0.0));
}

#[test]
fn coefficient_ratios_follow_the_geometric_rate() {
    for n in [10, 15, 20, 25, 30] {
        let row = mps::experiments::coefficient_row(n).unwrap();
        let predicted = 4.0 * (2.0 - 3f64.sqrt()).powi(n as i32);
        assert!((row.ratio_a / predicted - 1.0).abs() < 0.1, "N={n}");
        assert!((row.ratio_b / predicted - 1.0).abs() < 0.1, "N={n}");
    }
}
