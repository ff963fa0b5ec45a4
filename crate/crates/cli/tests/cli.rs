use std::path::Path;
use std::process::{Command, Output};

fn traindesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_traindesign"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn nmse_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("nmse.cfg");
    std::fs::write(&cfg, "# small run\nexperiment = nmse\ntrials = 20\ngamma_grid = -5, 5\n").unwrap();
    let out = dir.path().join("nmse.csv");
    let o = traindesign(&["run", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curves = traindesign::experiments::parse_csv(&out).unwrap();
    assert_eq!(curves.len(), 2);
    assert_eq!(curves[0].trials, 20);
    let names: Vec<_> = curves[0].schemes.iter().map(|s| s.scheme.as_str()).collect();
    assert_eq!(names, ["asgpp", "avg_mmse_chmse", "white"]);
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("a.cfg");
    std::fs::write(&cfg, "experiment = lopt\nestimator = mvu\ntrials = 500\nseed = 4\n").unwrap();
    let out = dir.path().join("a.csv");
    let o = traindesign(&[
        "run", "--config", path_str(&cfg), "--out", path_str(&out),
        "--trials", "5", "--seed", "9", "--gamma-grid", "-5,0,5", "--threads", "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curves = traindesign::experiments::parse_csv(&out).unwrap();
    let xs: Vec<f64> = curves.iter().map(|p| p.x).collect();
    assert_eq!(xs, [-5.0, 0.0, 5.0]);
    assert!(curves.iter().all(|p| p.trials == 5 && p.seed == 9));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = traindesign(&[
            "run", "--experiment", "nmse", "--trials", "30", "--seed", "7",
            "--threads", threads, "--out", path_str(out),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn zero_forcing_also_writes_ber() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zf.csv");
    let o = traindesign(&[
        "run", "--experiment", "zf", "--trials", "4", "--gamma-grid", "-10,0", "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mse = traindesign::experiments::parse_csv(&out).unwrap();
    assert_eq!(mse.len(), 2);
    let ber = traindesign::experiments::parse_csv(&dir.path().join("zf_ber.csv")).unwrap();
    assert_eq!(ber.len(), 5);
    assert!(ber[0].get("clairvoyant").is_some());
}

#[test]
fn bad_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let cases: [&str; 4] = [
        "experiment = nmse\nrho = 1.5\n",
        "experiment = nmse\nno_such_key = 1\n",
        "experiment = outage\nestimator = mmse\n",
        "trials = 10\n",
    ];
    for text in cases {
        let cfg = dir.path().join("bad.cfg");
        std::fs::write(&cfg, text).unwrap();
        let o = traindesign(&["run", "--config", path_str(&cfg), "--out", path_str(&out)]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(!o.stderr.is_empty());
    }
    let o = traindesign(&["run", "--experiment", "bogus", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = traindesign(&["run", "--config", "/nonexistent/x.cfg", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn model_assumption_violation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    std::fs::write(&cfg, "experiment = nmse\nphase_r_deg = 30\ntrials = 2\n").unwrap();
    let out = dir.path().join("c.csv");
    let o = traindesign(&["run", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("noise correlation"));
}
