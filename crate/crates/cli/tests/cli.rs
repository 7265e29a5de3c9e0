use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn isolab(args: &[&str], out: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_isolab"));
    cmd.args(args).arg("--out").arg(out);
    match threads {
        Some(t) => cmd.env("ISOLAB_THREADS", t),
        None => cmd.env_remove("ISOLAB_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(dir: &TempDir, name: &str) -> String {
    std::fs::read_to_string(dir.path().join(name)).unwrap()
}

#[test]
fn ball_check_example() {
    let dir = TempDir::new().unwrap();
    let o = isolab(
        &[
            "ball-check",
            "--n",
            "3",
            "--p-range",
            "-3",
            "3",
            "13",
            "--format",
            "csv",
        ],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&dir, "ball-check.csv");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,p,family,params_hash,lhs,rhs,ratio,slack,quad_error"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 13);
    for row in rows {
        let ratio: f64 = row.split(',').nth(6).unwrap().parse().unwrap();
        assert!((ratio - 1.0).abs() < 1e-8);
    }
}

#[test]
fn counterexample_example() {
    let dir = TempDir::new().unwrap();
    let o = isolab(
        &[
            "counterexample",
            "--n",
            "3",
            "--p",
            "-1.5",
            "--eps",
            "0.2,0.1,0.05",
            "--format",
            "csv",
        ],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = read(&dir, "counterexample.csv");
    let per: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(per.len(), 3);
    assert!(per.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn variation_example() {
    let dir = TempDir::new().unwrap();
    let o = isolab(
        &[
            "variation",
            "--n",
            "3",
            "--p",
            "-0.5",
            "--r",
            "1",
            "--format",
            "csv",
        ],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0);
    let csv = read(&dir, "variation.csv");
    assert_eq!(
        csv.lines().nth(1).unwrap().rsplit(',').next().unwrap(),
        "unstable"
    );
}

#[test]
fn json_reports_are_versioned() {
    let dir = TempDir::new().unwrap();
    let o = isolab(
        &["variation", "--n", "3,4", "--p", "-1,0,1"],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&read(&dir, "variation.json")).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["kind"], "variation");
    assert_eq!(v["payload"].as_array().unwrap().len(), 6);
    assert_eq!(v["payload"][0]["classification"], "marginal");
    assert_eq!(v["payload"][1]["classification"], "marginal");
}

#[test]
fn invalid_configs_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases: &[&[&str]] = &[
        &["ball-check", "--n", "3", "--p-range", "0", "1", "0"],
        &["ball-check", "--n", "1", "--p-range", "0", "1", "2"],
        &[
            "ball-check",
            "--n",
            "3",
            "--p-range",
            "0",
            "1",
            "2",
            "--format",
            "svg",
        ],
        &[
            "ball-check",
            "--n",
            "3",
            "--p-range",
            "0",
            "1",
            "2",
            "--colour",
            "red",
        ],
        &["counterexample", "--p", "-1", "--eps", "0.1,0.2,0.05"],
        &["chain", "interpolation", "--n", "2", "--p", "0.5"],
        &["chain", "theorem9", "--n", "3", "--p", "0.5"],
        &[
            "sweep",
            "--n",
            "3",
            "--p-range",
            "0",
            "1",
            "2",
            "--families",
            "cube",
        ],
        &["onedim", "--intervals", "1:0", "--p", "1"],
    ];
    for args in cases {
        let o = isolab(args, dir.path(), None);
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = isolab(
        &["ball-check", "--n", "3", "--p-range", "0", "1", "2"],
        dir.path(),
        Some("zero"),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn property_failure_exits_1_with_path() {
    let dir = TempDir::new().unwrap();
    // a fat neck keeps the volume far from the limit
    let o = isolab(
        &[
            "counterexample",
            "--n",
            "3",
            "--p",
            "-0.5",
            "--eps",
            "0.9,0.8,0.7",
        ],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("counterexample.json"), "{err}");
    assert!(dir.path().join("counterexample.json").exists());
}

#[test]
fn chains_and_onedim() {
    let dir = TempDir::new().unwrap();
    let o = isolab(
        &[
            "chain", "theorem9", "--n", "3", "--p", "-2.5", "--format", "md",
        ],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(read(&dir, "chain-theorem9.md").contains("| [x] | final |"));

    let spec = dir.path().join("domain.json");
    std::fs::write(
        &spec,
        r#"{"n":4,"gradient":"analytic","shape":{"family":"random-trig","seed":7,"degree":3,"amplitude":0.3}}"#,
    )
    .unwrap();
    let o = isolab(
        &[
            "chain",
            "interpolation",
            "--p",
            "0.5",
            "--domain",
            spec.to_str().unwrap(),
        ],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    let o = isolab(
        &["onedim", "--intervals", "0:3/2", "--p", "0.5"],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&read(&dir, "onedim.json")).unwrap();
    assert_eq!(v["payload"]["report"]["holds"], false);

    let o = isolab(
        &["onedim", "--intervals", "-1:0.5,1:2", "--p", "-1"],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&read(&dir, "onedim.json")).unwrap();
    assert_eq!(v["payload"]["exact"]["holds"], true);
    assert_eq!(v["payload"]["exact"]["rhs"], "9/4");
}

#[test]
fn ode_outputs() {
    let dir = TempDir::new().unwrap();
    let o = isolab(
        &[
            "ode",
            "integrate",
            "--p",
            "0.5",
            "--d",
            "1",
            "--format",
            "svg",
        ],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0);
    let svg = read(&dir, "ode-integrate.svg");
    assert!(svg.starts_with("<svg") && svg.contains("viewBox=\"0 0 512 512\""));

    let o = isolab(
        &["ode", "shoot", "--p", "1", "--d", "1", "--format", "csv"],
        dir.path(),
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = read(&dir, "ode-shoot.csv");
    let k: f64 = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((k - 2.0).abs() < 1e-6);
}

#[test]
fn run_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command":"ball-check","params":{"n":[2,4],"p-range":[-1,1,3]},"format":"md"}"#,
    )
    .unwrap();
    let o = isolab(&["run", cfg.to_str().unwrap()], dir.path(), None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&dir, "ball-check.md").lines().count(), 2 + 6);

    std::fs::write(
        &cfg,
        r#"{"command":"ball-check","params":{"n":[3],"p-range":[-1,1,3],"colour":"red"}}"#,
    )
    .unwrap();
    assert_eq!(
        code(&isolab(&["run", cfg.to_str().unwrap()], dir.path(), None)),
        2
    );
    std::fs::write(
        &cfg,
        r#"{"command":"ball-check","params":{"n":[3],"p-range":[-1,1,3]},"verbose":true}"#,
    )
    .unwrap();
    assert_eq!(
        code(&isolab(&["run", cfg.to_str().unwrap()], dir.path(), None)),
        2
    );
}

#[test]
fn outputs_identical_across_worker_counts() {
    let args = ["sweep", "--n", "3", "--p-range", "-2", "2", "5"];
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for fmt in ["json", "csv"] {
        let mut full = args.to_vec();
        full.extend(["--format", fmt]);
        assert_eq!(code(&isolab(&full, a.path(), Some("1"))), 0);
        assert_eq!(code(&isolab(&full, b.path(), Some("3"))), 0);
        let name = format!("sweep.{fmt}");
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap()
        );
    }
}
