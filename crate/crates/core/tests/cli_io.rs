mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::corr;
use synten::error::Error;
use synten::io::{emit_report, ingest_csv, parse_report, read_tsv, sidecar_paths, synergy_columns, write_epochs};
use synten::pipeline::{extract_constd, generate_synthetic, PipelineConfig, SynergyLabel, SynthSpec};

fn synth_dir(dir: &Path, seed: u64) -> synten::pipeline::RecordingSet {
    let (rs, _) = generate_synthetic(&SynthSpec { seed, ..SynthSpec::default() }).unwrap();
    write_epochs(&rs, dir).unwrap();
    rs
}

fn issues(e: Error) -> Vec<String> {
    match e {
        Error::Ingest(v) => v.iter().map(ToString::to_string).collect(),
        other => panic!("expected an ingestion error, got {other}"),
    }
}

#[test]
fn ingest_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let rs = synth_dir(dir.path(), 0);
    let back = ingest_csv(dir.path()).unwrap();
    assert_eq!(back.epochs().len(), 20);
    assert_eq!(back.task_ids(), vec![1, 2]);
    assert!((back.sample_rate() - 100.0).abs() < 1e-9);
    for e in rs.epochs() {
        let b = back.epochs().iter().find(|b| (b.task_id, b.repetition_id) == (e.task_id, e.repetition_id)).unwrap();
        assert_eq!(b.samples, e.samples);
    }
    let single = ingest_csv(dir.path().join("task2_rep3.csv")).unwrap();
    assert_eq!(single.epochs().len(), 1);
}

#[test]
fn ingest_accepts_crlf() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("task1_rep1.csv"), "t,ch1,ch2\r\n0,1,2\r\n0.01,3,4\r\n").unwrap();
    let rs = ingest_csv(dir.path()).unwrap();
    assert_eq!(rs.epochs()[0].samples.row(1), &[3.0, 4.0]);
}

#[test]
fn ingest_reports_every_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("task1_rep1.csv"), "t,ch1,ch2\n0,1,2\n0.01,-0.5,4\n0.02,1,x\n").unwrap();
    fs::write(p.join("task1_rep2.csv"), "t,ch1,ch3\n0,1,2\n").unwrap();
    fs::write(p.join("task2_rep1.csv"), "t,ch1,ch2,ch3\n0,1,2,3\n0.01,1,2,3\n").unwrap();
    fs::write(p.join("task2_rep2.csv"), "t,ch1,ch2\n0,1,2\n0.01,1\n").unwrap();
    fs::write(p.join("notes.csv"), "t,ch1\n0,1\n").unwrap();
    let found = issues(ingest_csv(p).unwrap_err());
    let has = |needle: &str| found.iter().any(|i| i.contains(needle));
    assert!(has("task1_rep1.csv:3: ch1: negative value -0.5"), "{found:#?}");
    assert!(has("task1_rep1.csv:4: ch2: not a number"), "{found:#?}");
    assert!(has("task1_rep2.csv:1: header"), "{found:#?}");
    assert!(has("task2_rep2.csv:3: expected 3 fields"), "{found:#?}");
    assert!(has("notes.csv"), "{found:#?}");
}

#[test]
fn ingest_channel_drift_and_rate() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("task1_rep1.csv"), "t,ch1,ch2\n0,1,2\n0.01,1,2\n").unwrap();
    fs::write(p.join("task1_rep2.csv"), "t,ch1\n0,1\n0.01,1\n").unwrap();
    assert!(issues(ingest_csv(p).unwrap_err()).iter().any(|i| i.contains("task1_rep2.csv:1: 1 channels")));

    fs::write(p.join("task1_rep2.csv"), "t,ch1,ch2\n0,1,2\n0.5,1,2\n").unwrap();
    assert!(issues(ingest_csv(p).unwrap_err()).iter().any(|i| i.contains("sample rate")));
}

#[test]
fn ingest_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let e = ingest_csv(dir.path()).unwrap_err();
    assert!(matches!(e, Error::NoEpochs(_)));
    assert!(e.to_string().starts_with("no epochs found"));
}

#[test]
fn report_roundtrip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (rs, _) = generate_synthetic(&SynthSpec::default()).unwrap();
    let report = extract_constd(&rs, 1, &PipelineConfig::default()).unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    emit_report(&report, &a).unwrap();
    emit_report(&report, &b).unwrap();
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(text.contains("\"schema\": 1"));

    let mut expected = report.clone();
    expected.runtime_seconds = 0.0;
    assert_eq!(parse_report(&text).unwrap(), expected);
    assert!(parse_report(&text.replace("\"schema\": 1", "\"schema\": 2")).is_err());

    let (syn, temporal) = sidecar_paths(&a);
    let (header, columns) = read_tsv(&syn).unwrap();
    assert_eq!(header, synergy_columns(&report));
    assert_eq!(header, vec!["task1", "task2", "shared"]);
    for (col, s) in columns.iter().zip(&report.synergies) {
        assert_eq!(col, &s.vector);
    }
    let (_, profiles) = read_tsv(&temporal).unwrap();
    assert_eq!(profiles, report.temporal);
}

fn synten(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_synten"));
    cmd.args(args).env_remove("SYNTEN_SEED");
    if let Some(s) = env_seed {
        cmd.env("SYNTEN_SEED", s);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn cli_end_to_end_against_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    let r = dir.path().join("r.json");
    let o = synten(&["synth", "--seed", "7", "--out", d.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = synten(&["decompose", "--method", "constd", "--n-dofs", "1", d.to_str().unwrap(), "--out", r.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let report = parse_report(&fs::read_to_string(&r).unwrap()).unwrap();
    let truth: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("ground_truth.json")).unwrap()).unwrap();
    let planted = |kind: &str, task: Option<u64>| -> Vec<f64> {
        let s = truth["synergies"]
            .as_array()
            .unwrap()
            .iter()
            .find(|s| s["label"]["kind"] == kind && task.map_or(true, |t| s["label"]["task"] == t))
            .unwrap();
        s["vector"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect()
    };
    assert!(corr(&report.shared()[0].vector, &planted("shared", None)) > 0.95);
    for task in [1u32, 2] {
        let found = &report.task_specific(task).unwrap().vector;
        let own = corr(found, &planted("task_specific", Some(task as u64)));
        let other = corr(found, &planted("task_specific", Some(3 - task as u64)));
        assert!(own > other);
    }
    assert_eq!(report.synergies[2].label, SynergyLabel::Shared);
}

#[test]
fn cli_parafac_has_corcondia_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    synth_dir(&d, 1);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = synten(&["decompose", "--method", "parafac", "--ranks", "3", d.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
        assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", stderr(&o));
        fs::read(out).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(v["fit"]["corcondia"].is_number());
}

#[test]
fn cli_seed_flag_wins_over_env() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    synth_dir(&d, 2);
    let seed_of = |args: &[&str], env: Option<&str>| {
        let o = synten(args, env);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["seed"].as_u64().unwrap()
    };
    let base = ["decompose", "--method", "constd", d.to_str().unwrap()];
    assert_eq!(seed_of(&base, None), 0);
    assert_eq!(seed_of(&base, Some("11")), 11);
    let mut flagged = base.to_vec();
    flagged.extend(["--seed", "5"]);
    assert_eq!(seed_of(&flagged, Some("11")), 5);
}

#[test]
fn cli_usage_errors() {
    let o = synten(&["decompose", "--method", "constd", "/nonexistent/epochs"], None);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.lines().next().unwrap().starts_with("error[usage]: "), "{err}");
    assert!(err.contains("Usage:"), "{err}");

    let o = synten(&["decompose", "--bogus"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[usage]: "));
    assert!(stderr(&o).contains("Usage:"));

    for args in [
        vec!["frobnicate"],
        vec!["decompose", "--method", "svd", "x"],
        vec!["decompose", "--method", "tucker", "--ranks", "1,2", "."],
        vec!["decompose", "--method", "constd", "--max-iters", "0", "."],
    ] {
        let o = synten(&args, None);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).starts_with("error[usage]: "), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(synten(&["--help"], None).status.code(), Some(0));
}

#[test]
fn cli_data_errors_and_nonconvergence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    synth_dir(&d, 3);

    let o = synten(&["decompose", "--method", "constd", "--n-dofs", "2", d.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[data]: "));
    assert_eq!(stderr(&o).lines().count(), 1);

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = synten(&["decompose", "--method", "nmf", empty.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[ingest]: no epochs found"));

    let out = dir.path().join("r.json");
    let o = synten(&["--max-iters", "2", "decompose", "--method", "constd", d.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error[nonconvergence]: "));
    assert!(!parse_report(&fs::read_to_string(out).unwrap()).unwrap().fit.converged);
}

#[test]
fn cli_other_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    synth_dir(&d, 4);
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();

    let o = synten(&["tensorize", d.to_str().unwrap(), "--epoch-len", "100", "--out", &p("t.json")], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let t: serde_json::Value = serde_json::from_str(&fs::read_to_string(p("t.json")).unwrap()).unwrap();
    assert_eq!(t["dims"], serde_json::json!([100, 10, 20]));
    assert_eq!(t["data"].as_array().unwrap().len(), 100 * 10 * 20);

    let o = synten(&["decompose", "--method", "tucker", "--ranks", "3,3,3", d.to_str().unwrap(), "--out", &p("tk.json")], None);
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", stderr(&o));
    let o = synten(&["decompose", "--method", "nmf", d.to_str().unwrap(), "--out", &p("n.json")], None);
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", stderr(&o));
    assert_eq!(parse_report(&fs::read_to_string(p("n.json")).unwrap()).unwrap().shared().len(), 1);

    let o = synten(&["compare", d.to_str().unwrap(), "--out", &p("c.json")], None);
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", stderr(&o));
    assert!(Path::new(&p("c.by_task.tsv")).exists());

    let o = synten(&["shuffle-validate", d.to_str().unwrap(), "--shuffles", "2", "--out", &p("s.json")], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(p("s.json")).unwrap()).unwrap();
    assert_eq!(s["shared_r"].as_array().unwrap().len(), 2);
    assert_eq!(s["schema"], 1);
}
