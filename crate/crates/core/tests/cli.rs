use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use skewflow::cli::{emit_plot_data, run_config, AnalysisConfig, PlotKind, RunError, RunOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_skewflow"))
}

fn run_cli(config: &str, dir: &Path, extra: &[&str]) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    bin()
        .arg("run")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gallery_list_prints_every_system() {
    let o = bin().args(["gallery", "list"]).output().unwrap();
    assert!(o.status.success());
    let names: Vec<String> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    assert_eq!(names, skewflow::flow::GALLERY_NAMES);
}

#[test]
fn schema_is_json_and_lists_analyses() {
    let o = bin().arg("schema").output().unwrap();
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let analyses = &v["properties"]["analyses"]["items"]["enum"];
    assert_eq!(analyses.as_array().unwrap().len(), 7);
    for a in analyses.as_array().unwrap() {
        let cfg = format!(
            r#"{{"system": {{"gallery": {{"name": "inverse-linear"}}}}, "analyses": [{a}]}}"#
        );
        AnalysisConfig::from_json(&cfg).unwrap();
    }
}

#[test]
fn classify_inverse_linear_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli(
        r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": ["classify"],
            "horizon": 10000}"#,
        dir.path(),
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(dir.path());
    assert_eq!(r["classify"]["verdict"]["outcome"], "StableInMean");
    for f in r["files"].as_array().unwrap() {
        assert!(dir.path().join("out").join(f.as_str().unwrap()).exists());
    }
}

#[test]
fn empty_s_grid_exits_2_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli(
        r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": ["classify"], "s_grid": []}"#,
        dir.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("s_grid"), "{}", stderr(&o));
}

#[test]
fn unknown_system_and_bad_json_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli(
        r#"{"system": {"gallery": {"name": "no-such"}}, "analyses": ["laws"]}"#,
        dir.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no-such"));
    let o = run_cli("{not json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("out");
    fs::write(&blocker, "a file, not a directory").unwrap();
    let o = run_cli(
        r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": ["laws"]}"#,
        dir.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("out"));
}

#[test]
fn instability_csv_ends_at_two_ln_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli(
        r#"{"system": {"gallery": {"name": "linear-growth"}}, "analyses": ["datko-instability"],
            "s_grid": [1], "space": {"carrier": "function"}}"#,
        dir.path(),
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = report(dir.path());
    let csv_name = r["datko_instability"][0]["csv"].as_str().unwrap();
    assert!(csv_name.contains("linear-growth") && csv_name.contains("s1"));
    let csv = fs::read_to_string(dir.path().join("out").join(csv_name)).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,mean,term,partial_norm"));
    let last = lines.last().unwrap();
    let norm: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!((norm - 2.0 * 2f64.ln()).abs() < 1e-6, "{last}");
    // Round-trip formatting: the column re-parses to the reported value.
    assert_eq!(
        norm,
        r["datko_instability"][0]["norm_value"].as_f64().unwrap()
    );
}

#[test]
fn strict_non_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"system": {"gallery": {"name": "constant-identity"}},
                  "analyses": ["datko-stability"], "s_grid": [1], "horizon": 1000}"#;
    let o = run_cli(cfg, dir.path(), &[]);
    assert!(o.status.success());
    let o = run_cli(cfg, dir.path(), &["--strict"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.path().join("out/report.json").exists());
}

#[test]
fn vanishing_mean_in_instability_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli(
        r#"{"system": {"inline": {"atoms": [
                {"id": 0, "weight": 1.0, "g_value": [1.0], "exponent": -1000}]}},
            "analyses": ["datko-instability"], "s_grid": [1], "horizon": 100}"#,
        dir.path(),
        &[],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("zero mean"));
}

#[test]
fn seed_flag_is_echoed_and_runs_are_reproducible() {
    let cfg = r#"{"system": {"gallery": {"name": "linear-growth"}},
                  "measure": {"kind": "uniform-sampler"},
                  "budget": 2000, "seed": 1,
                  "s_grid": [1, 3], "t_grid": [1, 10, 100],
                  "analyses": ["growth-fit", "laws"]}"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert!(run_cli(cfg, a.path(), &["--seed", "99"]).status.success());
    assert!(run_cli(cfg, b.path(), &["--seed", "99"]).status.success());
    assert!(run_cli(cfg, c.path(), &[]).status.success());
    let ra = fs::read(a.path().join("out/report.json")).unwrap();
    assert_eq!(ra, fs::read(b.path().join("out/report.json")).unwrap());
    assert_ne!(ra, fs::read(c.path().join("out/report.json")).unwrap());
    assert_eq!(report(a.path())["seed"], 99);
    assert_eq!(report(c.path())["seed"], 1);
}

#[test]
fn plot_flag_writes_dat_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli(
        r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": ["class-h", "growth-fit"],
            "s_grid": [1, 2], "t_grid": [1, 10, 100]}"#,
        dir.path(),
        &["--plot", "margin-curve", "--plot", "fit"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let margins = fs::read_to_string(out.join("inverse-linear_margin-curve.dat")).unwrap();
    assert_eq!(margins.lines().count(), 4);
    assert!(out.join("inverse-linear_s2_fit.dat").exists());
}

#[test]
fn trace_plot_matches_closed_form() {
    let cfg = AnalysisConfig::from_json(
        r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": ["datko-stability"],
            "s_grid": [1], "t_grid": [1, 2, 5, 10, 50, 100], "space": {"carrier": "function"}}"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out: dir.path().to_path_buf(),
        ..RunOptions::default()
    };
    let rep = run_config(cfg, &opts).unwrap();
    let files = emit_plot_data(&rep, PlotKind::Trace, dir.path()).unwrap();
    assert_eq!(files.len(), 1);
    assert!(
        files[0].contains("inverse-linear")
            && files[0].contains("s1")
            && files[0].contains("trace")
    );
    let text = fs::read_to_string(dir.path().join(&files[0])).unwrap();
    let mut ts = Vec::new();
    for line in text.lines() {
        let cols: Vec<f64> = line
            .split_whitespace()
            .map(|c| c.parse().unwrap())
            .collect();
        assert_eq!(cols.len(), 2);
        assert!((cols[1] - 2.0 / (cols[0] + 1.0)).abs() < 1e-15);
        ts.push(cols[0]);
    }
    assert_eq!(&ts[..6], &[1.0, 2.0, 5.0, 10.0, 50.0, 100.0]);
}

#[test]
fn plot_of_missing_analysis_names_it() {
    let cfg = AnalysisConfig::from_json(
        r#"{"system": {"gallery": {"name": "constant-identity"}}, "analyses": ["laws"]}"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out: dir.path().to_path_buf(),
        ..RunOptions::default()
    };
    let rep = run_config(cfg, &opts).unwrap();
    assert!(rep.laws.as_ref().unwrap().passed);
    for (kind, needle) in [
        (PlotKind::Trace, "datko-stability"),
        (PlotKind::MarginCurve, "class-h"),
        (PlotKind::Fit, "growth-fit"),
    ] {
        match emit_plot_data(&rep, kind, dir.path()) {
            Err(RunError::Validation(msg)) => assert!(msg.contains(needle), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn certificates_report_lemma_constants() {
    let cfg = AnalysisConfig::from_json(
        r#"{"system": {"gallery": {"name": "inverse-linear"}}, "analyses": ["certificates"],
            "certificates": {"lambdas": [2]}}"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out: dir.path().to_path_buf(),
        ..RunOptions::default()
    };
    let rep = run_config(cfg, &opts).unwrap();
    let c = rep.certificates.unwrap();
    let cert = c.contraction.unwrap();
    assert!((cert.c - 2.0 / 3.0).abs() < 1e-15);
    assert!(c.expansion.is_none());
    // Gallery growth bound is (M, ω, θ) = (2, -1, 1).
    let k = c.stable_constants.unwrap();
    assert!((k.k1.unwrap() - 2.0 * 0.5 / (2.0 / 3.0)).abs() < 1e-12);
    assert_eq!(c.decay_check.unwrap().violations, 0);
}

#[test]
fn finite_discrete_measure_from_config() {
    let cfg = AnalysisConfig::from_json(
        r#"{"system": {"gallery": {"name": "partitioned-decay", "params": {"J": 2}}},
            "measure": {"kind": "finite-discrete", "atoms": [
                {"id": 0, "weight": 0.0, "g_value": [5.0]},
                {"id": 1, "weight": 0.5, "g_value": [1.0]},
                {"id": 2, "weight": 0.5, "g_value": [1.0]}]},
            "analyses": ["growth-fit"], "s_grid": [1], "t_grid": [1, 10, 100]}"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out: dir.path().to_path_buf(),
        ..RunOptions::default()
    };
    let rep = run_config(cfg, &opts).unwrap();
    assert_eq!(rep.observables[0].name, "atom-table");
    assert_eq!(rep.observables[0].l1, 1.0);
    let fit = rep.growth_fit.unwrap();
    assert!((fit.omega_hat + 1.0).abs() < 1e-12);
}
