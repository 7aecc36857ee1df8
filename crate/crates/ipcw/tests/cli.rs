//! End-to-end checks of the `ipcw` binary: output contracts, exit codes,
//! and the pseudo-value round trip.

use ipcw::data::{read_csv_dataset, OutcomeKind, OutcomeSpec, StrataSource};
use ipcw::glm::{solve, AChoice, Approach, FitOptions, Link, ModelSpec, ScoreInputs};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ipcw"))
}

fn write_sample(dir: &Path) -> PathBuf {
    let path = dir.join("sample.csv");
    let mut body = String::from("time,status,x1\n");
    let rows = [
        (0.4, 1, 0.0),
        (0.7, 0, 1.0),
        (0.9, 1, 1.0),
        (1.3, 0, 0.0),
        (1.8, 1, 0.0),
        (2.4, 1, 1.0),
        (0.3, 1, 1.0),
        (2.9, 0, 0.0),
        (1.1, 1, 0.0),
        (0.6, 1, 1.0),
        (1.7, 0, 1.0),
        (2.2, 1, 0.0),
    ];
    for (time, status, x) in rows {
        body.push_str(&format!("{time},{status},{x}\n"));
    }
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn fit_emits_json_with_inference_fields() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_sample(dir.path());
    let out = run(&[
        "fit",
        "--approach",
        "pse",
        "--link",
        "identity",
        "--a",
        "covariate",
        "--time-point",
        "1",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["approach"], "pse");
    assert_eq!(value["beta"].as_array().unwrap().len(), 2);
    assert_eq!(value["se"].as_array().unwrap().len(), 2);
    assert_eq!(value["ci95"].as_array().unwrap().len(), 2);
    assert_eq!(value["converged"], true);
    assert!(value["cov"][0][1].is_number());
}

#[test]
fn pseudo_round_trip_reproduces_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_sample(dir.path());
    let pseudo_path = dir.path().join("pseudo.csv");
    let out = run(&[
        "pseudo",
        "--time-point",
        "1",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        pseudo_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // re-read the emitted pseudo outcomes and solve the plain regression
    let text = std::fs::read_to_string(&pseudo_path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let pseudo_col = header.iter().position(|h| *h == "pseudo_y").unwrap();
    let pseudo_values: Vec<f64> = lines
        .map(|l| l.split(',').nth(pseudo_col).unwrap().parse().unwrap())
        .collect();

    let outcome = OutcomeSpec::new(OutcomeKind::SurvivalIndicator, 1.0).unwrap();
    let parsed = read_csv_dataset(
        std::fs::File::open(&csv).unwrap(),
        outcome,
        StrataSource::None,
    )
    .unwrap();
    let records: Vec<_> = parsed
        .dataset
        .records()
        .iter()
        .map(|r| {
            let mut covariates = vec![1.0];
            covariates.extend_from_slice(&r.covariates);
            ipcw::data::ObservedRecord {
                covariates,
                ..r.clone()
            }
        })
        .collect();
    let dataset = ipcw::data::Dataset::new(records, outcome, 1).unwrap();
    let model = ModelSpec::new(Link::Identity, AChoice::Covariate, 2).unwrap();
    let plain = solve(
        Approach::Uncensored,
        &dataset,
        &model,
        &ScoreInputs {
            outcomes: Some(pseudo_values),
            ..Default::default()
        },
        &FitOptions::default(),
    )
    .unwrap();

    let fit_out = run(&[
        "fit",
        "--approach",
        "pse",
        "--time-point",
        "1",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let value: serde_json::Value = serde_json::from_slice(&fit_out.stdout).unwrap();
    for j in 0..2 {
        let direct = value["beta"][j].as_f64().unwrap();
        assert!(
            (plain.beta[j] - direct).abs() < 1e-8,
            "coefficient {j}: {} vs {direct}",
            plain.beta[j]
        );
    }
}

#[test]
fn asymptotics_reports_the_oracle() {
    let out = run(&[
        "asymptotics",
        "--p",
        "0.5",
        "--q",
        "0.1666667",
        "--s",
        "0.8",
        "--contrast",
        "b1",
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(value["sigma"]["pse"].is_number());
    assert!(value["sigma_prime"]["ind"].is_number());
    assert!(value["phi_differences"]["pse_minus_out"].as_f64().unwrap() < 0.0);
    // late censoring favors the pseudo approach
    let pse = value["sigma"]["pse"].as_f64().unwrap();
    let ind = value["sigma"]["ind"].as_f64().unwrap();
    assert!(pse < ind);
}

#[test]
fn malformed_csv_exits_2_with_row_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "time,status,x1\n1.0,1,0.5\noops,0,0.1\n").unwrap();
    let out = run(&[
        "fit",
        "--approach",
        "out",
        "--time-point",
        "1",
        "--csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 2"), "{stderr}");
}

#[test]
fn unusable_data_exits_1() {
    // everyone censored before the horizon: the weighted mean has no mass
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("all_censored.csv");
    std::fs::write(&path, "time,status,x1\n0.2,0,0.0\n0.4,0,1.0\n").unwrap();
    let out = run(&[
        "pseudo",
        "--time-point",
        "1",
        "--csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("positivity"), "{stderr}");
}

#[test]
fn unknown_flag_exits_2() {
    let out = run(&["fit", "--nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_documented_header_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cells.json");
    std::fs::write(
        &config,
        r#"{"scenario":1,"n":40,"censoring":{"kind":"point_mass","time":0.8},"replications":6,"seed":3}"#,
    )
    .unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let result = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--figure-data",
            dir.path().join("fig.csv").to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    }
    let a = std::fs::read_to_string(&out_a).unwrap();
    let b = std::fs::read_to_string(&out_b).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with(
        "cens,n,reps,var_ind,var_out,var_pse,varhat_ind,varhat_out,varhat_pse,coverage_ind,coverage_out,coverage_pse"
    ));
    let figure = std::fs::read_to_string(dir.path().join("fig.csv")).unwrap();
    assert!(figure.starts_with("scenario,cell,n,approach,coefficient,metric,value"));
}

#[test]
fn stratified_fit_uses_the_stratum_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strat.csv");
    let mut body = String::from("time,status,x1,z\n");
    for (time, status, x, z) in [
        (0.4, 1, 0.0, 0),
        (0.9, 0, 1.0, 1),
        (1.3, 1, 1.0, 1),
        (0.8, 1, 0.0, 0),
        (2.0, 0, 0.0, 0),
        (1.6, 1, 1.0, 1),
        (0.5, 1, 1.0, 1),
        (2.8, 1, 0.0, 0),
    ] {
        body.push_str(&format!("{time},{status},{x},{z}\n"));
    }
    std::fs::write(&path, body).unwrap();
    let out = run(&[
        "fit",
        "--approach",
        "ind",
        "--time-point",
        "1",
        "--csv",
        path.to_str().unwrap(),
        "--strata-col",
        "z",
        "--dump-censoring",
        dir.path().join("c.json").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // z is a label, not a covariate: intercept + x1 only
    assert_eq!(value["beta"].as_array().unwrap().len(), 2);
    let curves: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(curves.as_array().unwrap().len(), 2);
}

#[test]
fn conflicting_strata_flags_exit_2() {
    let out = run(&[
        "fit",
        "--approach",
        "ind",
        "--time-point",
        "1",
        "--csv",
        "x.csv",
        "--strata-col",
        "z",
        "--strata-k",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dump_censoring_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_sample(dir.path());
    let dump = dir.path().join("curves.json");
    let out = run(&[
        "fit",
        "--approach",
        "ind",
        "--time-point",
        "1",
        "--csv",
        csv.to_str().unwrap(),
        "--dump-censoring",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    let curves = value.as_array().unwrap();
    assert_eq!(curves.len(), 1);
    assert!(curves[0]["jump_times"].is_array());
    assert!(curves[0]["hazard_increments"].is_array());
    assert!(curves[0]["survival_values"].is_array());
}
