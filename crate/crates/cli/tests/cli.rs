use std::path::Path;
use std::process::{Command, Output};

fn synpart(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synpart")).current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small synthetic volume with labels, shared by several tests.
fn prepare(dir: &Path) {
    let steps: [&[&str]; 3] = [
        &["synth-gen", "--shape", "64,64,16", "--segments", "6", "--synapses", "4", "--seed", "3", "--out", "synth.h5", "--annotations-out", "gt.txt"],
        &["gen-labels", "--annotations", "gt.txt", "--segmentation", "synth.h5", "--out", "labels.h5"],
        &["simulate-scores", "--labels", "labels.h5", "--out", "scores.h5"],
    ];
    for s in steps {
        let o = synpart(dir, s);
        assert!(o.status.success(), "{s:?}: {}", stderr(&o));
    }
}

#[test]
fn version_reports_format() {
    let o = synpart(Path::new("."), &["--version"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("format version 1"), "{text}");
}

#[test]
fn unknown_flag_prints_usage_and_exits_1() {
    let o = synpart(Path::new("."), &["extract", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn t1_out_of_range_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    let o = synpart(dir.path(), &["extract", "--scores", "scores.h5", "--segmentation", "synth.h5", "--t1", "1.5", "--out", "p.tsv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("t1 must be in [0,1]"), "{}", stderr(&o));
    assert!(!dir.path().join("p.tsv").exists());
}

#[test]
fn missing_input_exits_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = synpart(dir.path(), &["extract", "--scores", "absent.h5", "--segmentation", "seg.h5", "--out", "p.tsv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.h5"), "{}", stderr(&o));
}

#[test]
fn config_values_apply_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    std::fs::write(
        dir.path().join("run.cfg"),
        "# extraction settings\nscores=scores.h5\nsegmentation=synth.h5\nt1=0.9\nt2=5\nconnectivity=6\n",
    )
    .unwrap();
    let o = synpart(dir.path(), &["extract", "--config", "run.cfg", "--t1", "0.4", "--out", "p.tsv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("p.tsv")).unwrap();
    assert!(text.contains("# t1=0.4\n"), "{text}");
    assert!(text.contains("# t2=5\n"));
    assert!(text.contains("# connectivity=6\n"));

    std::fs::write(dir.path().join("bad.cfg"), "t1=2\n").unwrap();
    let o = synpart(dir.path(), &["extract", "--config", "bad.cfg", "--scores", "scores.h5", "--segmentation", "synth.h5", "--out", "q.tsv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    let d = dir.path();
    let o = synpart(d, &["extract", "--scores", "scores.h5", "--segmentation", "synth.h5", "--t2", "10", "--out", "p.tsv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = synpart(d, &["evaluate", "--pred", "p.tsv", "--gt", "synth.h5", "--segmentation", "synth.h5", "--tolerance-nm", "250", "--report", "r.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["parameters"]["tolerance_nm"], "250");
    assert_eq!(report["parameters"]["command"], "evaluate");
    assert_eq!(report["fscore"], 1.0);
    assert_eq!(report["tp"], 4);

    let prov = synpart::io::read_provenance(&d.join("labels.h5")).unwrap().unwrap();
    assert!(prov.contains("command=gen-labels\n") && prov.contains("r_syn_nm=100\n"), "{prov}");
    let prov = synpart::io::read_provenance(&d.join("scores.h5")).unwrap().unwrap();
    assert!(prov.contains("sigma=0\n"), "{prov}");
    let leftovers: Vec<_> = std::fs::read_dir(d)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn connmatrix_diff_against_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    let d = dir.path();
    let o = synpart(d, &["connmatrix", "--partners", "gt.txt", "--segmentation", "synth.h5", "--out", "gt.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = synpart(d, &["connmatrix", "--partners", "synth.h5", "--segmentation", "synth.h5", "--out", "m.csv", "--diff", "gt.csv", "--diff-out", "d.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let diff = synpart::ConnectivityMatrix::read_csv(std::fs::File::open(d.join("d.csv")).unwrap(), &d.join("d.csv")).unwrap();
    assert!(diff.is_zero());
    let m = synpart::ConnectivityMatrix::read_csv(std::fs::File::open(d.join("m.csv")).unwrap(), &d.join("m.csv")).unwrap();
    assert_eq!(m.total(), 4);
}

#[test]
fn roundtrip_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a.json", "b.json"] {
        let o = synpart(d, &["roundtrip", "--shape", "64,64,16", "--segments", "6", "--synapses", "5", "--seed", "7", "--report", name]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("a.json")).unwrap()).unwrap();
    assert_eq!(v["evaluation"]["fscore"], 1.0);
    assert_eq!(v["connectome_consistent"], true);
}

#[test]
fn out_of_volume_annotation_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    let d = dir.path();
    std::fs::write(d.join("bad.txt"), "1\t0\t0\t0\t99999\t0\t0\n").unwrap();
    let o = synpart(d, &["gen-labels", "--annotations", "bad.txt", "--segmentation", "synth.h5", "--out", "l.h5"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}
