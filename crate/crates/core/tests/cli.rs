use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fbs_core::cli::{data_section, execute, parse_scenario, read_scenario};

fn fbs(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbs")).args(args).env("FBS_OUTPUT_DIR", dir).output().expect("run fbs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_of(path: &Path) -> String {
    data_section(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn estimate_writes_header_and_one_row_per_shot() {
    let dir = tempfile::tempdir().unwrap();
    let o = fbs(&["estimate", "--sigma0", "1e6", "--n", "15", "--seed", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("estimate.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# tool: fbs "));
    assert_eq!(lines[1], "# schema: trace/v1");
    assert_eq!(lines[2], "# seed: 5");
    assert!(lines[3].starts_with("# scenario: {"));
    assert_eq!(lines[4], "step,tau_s,delta_f_hz,outcome,mu_hz,sigma_hz");
    assert_eq!(lines.len(), 5 + 15);
    let p = read_scenario(&dir.path().join("estimate.csv")).unwrap().params;
    assert_eq!((p.mu0, p.sigma0, p.n), (0.0, 1e6, 15));
}

#[test]
fn flags_override_config_file_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "n = 10\nseed = 3\nsigma0 = 5e5\n").unwrap();
    let cfg_s = cfg.to_str().unwrap();

    let o = fbs(&["estimate", "--config", cfg_s], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = read_scenario(&dir.path().join("estimate.csv")).unwrap();
    assert_eq!((a.params.n, a.seed, a.params.sigma0), (10, 3, 5e5));
    let o = fbs(
        &["estimate", "--config", cfg_s, "--n", "12", "--output", dir.path().join("b.csv").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let b = read_scenario(&dir.path().join("b.csv")).unwrap();
    assert_eq!((b.params.n, b.seed, b.params.sigma0), (12, 3, 5e5));
    assert_eq!(b.params.alpha, -0.02);
    assert_eq!(data_of(&dir.path().join("b.csv")).lines().count(), 13);
}

#[test]
fn invalid_config_is_rejected_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [("beta.toml", "beta = 1.5\n"), ("unknown.toml", "betta = 0.5\n"), ("syntax.toml", "n = = 3\n")]
    {
        let cfg = dir.path().join(name);
        fs::write(&cfg, body).unwrap();
        let o = fbs(&["estimate", "--config", cfg.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(1), "{name}: {}", stderr(&o));
        assert_eq!(stderr(&o).trim().lines().count(), 1, "{name}: {}", stderr(&o));
    }
    let o = fbs(&["estimate", "--config", dir.path().join("missing.toml").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.toml"));
    assert!(!dir.path().join("estimate.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fbs(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(fbs(&["--version"], dir.path()).status.code(), Some(0));
    assert_eq!(fbs(&["estimate", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(fbs(&[], dir.path()).status.code(), Some(1));
    assert_eq!(fbs(&["estimate", "--beta", "2"], dir.path()).status.code(), Some(1));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub/estimate.csv");
    let o = fbs(&["estimate", "--output", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(blocker.to_str().unwrap()), "{}", stderr(&o));
}

#[test]
fn header_reload_reproduces_scenario_and_data() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, fmt) in [("estimate", "csv"), ("validate-gaussian", "json"), ("campaign", "json")] {
        let out = dir.path().join(format!("{cmd}.{fmt}"));
        let inv = parse_scenario([
            "fbs",
            cmd,
            "--format",
            fmt,
            "--seed",
            "9",
            "--runs",
            "40",
            "--alpha=-0.01",
            "--beta",
            "0.8",
            "--coherence-time",
            "inf",
            "--tau-multipliers",
            "1,3",
            "--grid-points",
            "2048",
            "--output",
            out.to_str().unwrap(),
        ])
        .unwrap();
        execute(&inv.scenario, None).unwrap();
        let reloaded = read_scenario(&out).unwrap();
        assert_eq!(reloaded, inv.scenario, "{cmd}");

        let again = dir.path().join(format!("again.{fmt}"));
        let mut sc = reloaded;
        sc.output = again.clone();
        execute(&sc, Some(2)).unwrap();
        assert_eq!(data_of(&out), data_of(&again), "{cmd}");
    }
}

#[test]
fn data_sections_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["campaign", "compare-frequentist"] {
        let mut outputs = Vec::new();
        for w in ["1", "3", "8"] {
            let out = dir.path().join(format!("{cmd}-{w}.csv"));
            let o = fbs(
                &[cmd, "--runs", "300", "--seed", "11", "--workers", w, "--output", out.to_str().unwrap()],
                dir.path(),
            );
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            outputs.push(data_of(&out));
        }
        assert_eq!(outputs[0], outputs[1], "{cmd}");
        assert_eq!(outputs[0], outputs[2], "{cmd}");
    }
}

#[test]
fn campaign_writes_summary_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = fbs(&["campaign", "--runs", "1200", "--n", "10"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("campaign.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], "campaign-summary/v1");
    let data = &summary["data"];
    for key in [
        "errors",
        "mean_final_sigma",
        "std",
        "mad",
        "outlier_fraction",
        "calibration_fraction",
        "k_times_mad",
        "mad_ratio",
    ] {
        assert!(!data[key].is_null(), "{key}");
    }
    assert_eq!(data["errors"].as_array().unwrap().len(), 1200);
    assert_eq!(data_of(&dir.path().join("campaign.csv")).lines().count(), 1201);
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares schema line and data section with `tests/golden/<name>`.
/// `FBS_UPDATE_GOLDEN=1` rewrites the files instead.
#[test]
fn golden_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&str, &[&str])] = &[
        ("estimate.csv", &["estimate", "--seed", "7", "--n", "6"]),
        ("campaign.csv", &["campaign", "--seed", "7", "--runs", "12", "--n", "6"]),
        ("validate-gaussian.csv", &["validate-gaussian", "--tau-multipliers", "1,3", "--grid-points", "2048"]),
        ("track.csv", &["track", "--seed", "7", "--repetitions", "3", "--cycles", "10"]),
        ("compare-frequentist.csv", &["compare-frequentist", "--seed", "7", "--runs", "40"]),
    ];
    let update = std::env::var_os("FBS_UPDATE_GOLDEN").is_some();
    for (name, args) in cases {
        let out = dir.path().join(name);
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--output", out.to_str().unwrap()]);
        let o = fbs(&full, dir.path());
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let text = fs::read_to_string(&out).unwrap();
        let schema = text.lines().find(|l| l.starts_with("# schema:")).unwrap();
        let actual = format!("{schema}\n{}\n", data_section(&text).unwrap());
        let golden = golden_dir().join(name);
        if update {
            fs::create_dir_all(golden_dir()).unwrap();
            fs::write(&golden, &actual).unwrap();
        } else {
            let expected = fs::read_to_string(&golden).unwrap_or_else(|_| panic!("missing {}", golden.display()));
            assert_eq!(actual, expected, "{name} drifted from golden file");
        }
    }
}
