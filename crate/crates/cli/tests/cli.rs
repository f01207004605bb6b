use std::process::{Command, Output};

fn mobedge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mobedge"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn reduce_peaky_normal_form() {
    let out = mobedge(&["reduce", "model=peaky", "K=1", "lambda=5"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((doc["lambda_eff"].as_f64().unwrap() - 5.0 / 9.0).abs() < 1e-12);
    assert!((doc["tau"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((doc["shift"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-12);
}

#[test]
fn invalid_config_exits_2() {
    for args in [
        &["lyapunov", "model=nosuch", "lambda=1", "energies=0"] as &[&str],
        &["lyapunov", "model=amo", "lambda=2"], // no energies
        &["reduce", "model=mosaic", "kappa=2", "lambda=1"], // no GAA form
        &["nosuchcommand"],
        &["lyapunov", "model=amo", "lambda=2", "energies=0", "alpha=0.25"], // rational
    ] {
        let out = mobedge(args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn lyapunov_csv_shape_and_determinism() {
    let args = [
        "lyapunov",
        "model=amo",
        "lambda=2",
        "energies=0.5,1.5",
        "steps=5000",
        "threads=1",
    ];
    let a = mobedge(&args);
    let b = mobedge(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same config must give identical bytes");
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# mobedge v"));
    assert!(lines.next().unwrap().starts_with("# command: lyapunov"));
    assert!(lines.next().unwrap().starts_with("# config: "));
    assert_eq!(
        lines.next().unwrap(),
        "energy,le,dispersion,converged,le_formula"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn spectrum_free_eigenvalue_count() {
    let out = mobedge(&["spectrum", "model=amo", "lambda=0", "size=32", "format=csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 32);
    let first: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    let last: f64 = rows[31].split(',').nth(1).unwrap().parse().unwrap();
    assert!(first < last && first > -2.0 && last < 2.0);
}

#[test]
fn detect_me_rejects_coarse_grid() {
    let out = mobedge(&[
        "detect-me",
        "model=mosaic",
        "kappa=2",
        "lambda=2",
        "emin=-1",
        "emax=1",
        "ecount=21",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_suite_passes() {
    let out = mobedge(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("12 of 12 checks passed"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn output_file_and_config_include() {
    let dir = std::env::temp_dir().join("mobedge-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    let out_path = dir.join("out.csv");
    std::fs::write(&cfg, "model=amo\nlambda=2.0\nenergies=0.5\nsteps=2000\n").unwrap();
    let out = mobedge(&[
        "lyapunov",
        &format!("@{}", cfg.display()),
        &format!("output={}", out_path.display()),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("lambda=2.0"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
}
