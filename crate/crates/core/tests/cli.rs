use std::process::{Command, Output};

use iongrover::analysis::{self, MarkingPrior};
use iongrover::cli::{CompileReport, RunReport, SweepRow};
use iongrover::NoiseModel;

fn iongrover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iongrover"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = iongrover(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn ideal_run_reports_unit_success() {
    let report: RunReport =
        serde_json::from_str(&stdout(&["run", "--noise", "ideal", "--shots", "1"])).unwrap();
    assert_eq!(report.schema_version, 1);
    assert_eq!(report.config.noise, NoiseModel::ideal());
    assert_eq!(report.config.noise_source, "ideal");
    for m in &report.markings {
        assert_eq!(m.success, 1.0);
    }
    assert_eq!(report.average_success, 1.0);
}

#[test]
fn report_statistics_recompute_from_counts() {
    let text = stdout(&["run", "--shots", "800", "--seed", "3"]);
    let report: RunReport = serde_json::from_str(&text).unwrap();
    let n = 1usize << report.config.n_qubits;
    let counts: Vec<Vec<u64>> = report
        .markings
        .iter()
        .map(|m| {
            let mut row = vec![0u64; n];
            for (label, &c) in &m.counts {
                row[usize::from_str_radix(label, 2).unwrap()] = c;
            }
            assert_eq!(row.iter().sum::<u64>(), 800);
            row
        })
        .collect();
    let cm = analysis::confusion_from_counts(&counts).unwrap();
    let prior = MarkingPrior::uniform(n);
    assert_eq!(report.confusion_matrix.as_ref(), Some(&cm));
    assert_eq!(
        report.average_success,
        analysis::average_success(&cm, &prior).unwrap()
    );
    assert_eq!(
        report.mutual_information,
        Some(analysis::mutual_information(&cm, &prior).unwrap())
    );
    // the report round-trips through its own serialization
    let again: RunReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(again, report);
}

#[test]
fn seeds_are_echoed_and_reproducible() {
    let args = ["run", "--marked", "10", "--shots", "500", "--seed", "42"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    let report: RunReport = serde_json::from_str(&a).unwrap();
    assert_eq!(report.config.seed, 42);
    assert_eq!(report.markings.len(), 1);
    assert_ne!(
        a,
        stdout(&["run", "--marked", "10", "--shots", "500", "--seed", "43"])
    );
}

#[test]
fn compile_reports_and_exit_codes() {
    let report: CompileReport = serde_json::from_str(&stdout(&[
        "compile",
        "--variant",
        "experimental",
        "--marked",
        "11",
    ]))
    .unwrap();
    assert!(report.verified);
    assert_eq!(report.ms_count, 2);
    assert!((300.0..=400.0).contains(&report.total_duration_us));
    let sum: f64 = report.pulses.iter().map(|p| p.duration_us).sum();
    assert_eq!(sum, report.total_duration_us);

    let cnot: CompileReport =
        serde_json::from_str(&stdout(&["compile", "--variant", "cnot"])).unwrap();
    assert_eq!(cnot.pulse_count, 10);
    assert!(cnot.verified);

    let textbook = iongrover(&["compile", "--variant", "textbook"]);
    assert_eq!(textbook.status.code(), Some(1));
    assert!(stderr(&textbook).contains("multi_controlled_z"));
}

#[test]
fn usage_errors_exit_with_one_and_name_the_field() {
    for (args, field) in [
        (vec!["run", "--shots", "0"], "--shots"),
        (vec!["run", "--marked", "012"], "--marked"),
        (vec!["run", "--marked", "011"], "--marked"),
        (vec!["run", "--n", "3"], "--n"),
        (vec!["run", "--noise", "/does/not/exist.toml"], "--noise"),
        (vec!["sweep", "--param", "p_ms", "--values", ""], "--values"),
        (vec!["run", "--variant", "bogus"], "--variant"),
        (vec!["frobnicate"], "frobnicate"),
    ] {
        let out = iongrover(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(stderr(&out).contains(field), "{args:?}: {}", stderr(&out));
    }
    assert_eq!(iongrover(&["--help"]).status.code(), Some(0));
    assert_eq!(iongrover(&["--version"]).status.code(), Some(0));
}

#[test]
fn noise_file_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let noise = dir.path().join("noise.toml");
    std::fs::write(
        &noise,
        "p_ms = 0.0\np_1q = 0.0\np_1q_global = 0.0\nreadout_flip = 0.0\n",
    )
    .unwrap();
    let out = dir.path().join("report.json");
    let args = [
        "run",
        "--noise",
        noise.to_str().unwrap(),
        "--shots",
        "50",
        "--out",
        out.to_str().unwrap(),
    ];
    assert!(stdout(&args).is_empty());
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.config.noise, NoiseModel::ideal());
    assert_eq!(report.average_success, 1.0);

    std::fs::write(&noise, "p_ms = 0.3\nfidelity = 0.9\n").unwrap();
    let bad = iongrover(&["run", "--noise", noise.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("fidelity"));
}

#[test]
fn sweep_csv_round_trips() {
    let text = stdout(&[
        "sweep", "--param", "p_ms", "--values", "0,0.25", "--shots", "4000", "--seed", "1",
    ]);
    let rows: Vec<SweepRow> = csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].p_ms, 0.0);
    assert_eq!(rows[1].p_ms, 0.25);
    // small single-qubit and readout losses only
    assert!(rows[0].mean_success > 0.8 && rows[0].mean_success < 1.0);
    assert!((rows[1].mean_success - 0.6).abs() < 0.05);
    assert!(rows
        .iter()
        .all(|r| r.std_error > 0.0 && r.ideal_success > 1.0 - 1e-9));
    assert_eq!(
        text,
        stdout(&[
            "sweep", "--param", "p_ms", "--values", "0,0.25", "--shots", "4000", "--seed", "1"
        ])
    );
}

#[test]
fn sweep_json_format() {
    let text = stdout(&[
        "sweep", "--param", "shots", "--values", "500", "--noise", "ideal", "--format", "json",
    ]);
    let rows: Vec<SweepRow> = serde_json::from_str(&text).unwrap();
    assert_eq!(rows[0].shots, 500);
    assert_eq!(rows[0].std_error, 0.0);
}
