use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 3
output_dir = "run"

[dataset]
kind = "planted"
graphs_per_class = 10

[experiment]
keep_fraction = 1.0
graphon_k = 4

[experiment.gan]
steps = 10
hidden_dim = 8

[experiment.classifier]
epochs = 5
hidden_dim = 8
"#;

fn motifcar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motifcar"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

#[test]
fn help_and_version_succeed() {
    let dir = workdir();
    assert_eq!(motifcar(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(motifcar(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_1() {
    let dir = workdir();
    let o = motifcar(dir.path(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[usage]"), "{}", stderr(&o));

    let o = motifcar(
        dir.path(),
        &[
            "--config",
            "small.toml",
            "--set",
            "experiment.producer.eta=100000",
            "pipeline",
        ],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(
        stderr(&o).starts_with("error[usage] stage=produce"),
        "{}",
        stderr(&o)
    );

    let o = motifcar(
        dir.path(),
        &[
            "--config",
            "small.toml",
            "--set",
            "experiment.no_such_key=1",
            "pipeline",
        ],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn data_errors_exit_2_and_name_the_stage() {
    let dir = workdir();
    let o = motifcar(
        dir.path(),
        &[
            "estimate-graphon",
            "--dataset",
            "missing.ds",
            "--out",
            "w.txt",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error[data] stage=load"), "{err}");
    assert_eq!(err.lines().count(), 1);

    fs::write(
        dir.path().join("bad.ds"),
        "motifcar-dataset 1\nname x\ngarbage\n",
    )
    .unwrap();
    let o = motifcar(
        dir.path(),
        &["estimate-graphon", "--dataset", "bad.ds", "--out", "w.txt"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.ds"), "{}", stderr(&o));
}

#[test]
fn print_config_roundtrips() {
    let dir = workdir();
    let o = motifcar(
        dir.path(),
        &[
            "--config",
            "small.toml",
            "--seed",
            "11",
            "--print-config",
            "pipeline",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("seed = 11"), "{text}");
    fs::write(dir.path().join("printed.toml"), &text).unwrap();
    let again = motifcar(
        dir.path(),
        &["--config", "printed.toml", "--print-config", "pipeline"],
    );
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    assert!(!dir.path().join("run").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = workdir();
    for jobs in ["1", "4"] {
        let out = format!("run{jobs}");
        let o = motifcar(
            dir.path(),
            &[
                "--config",
                "small.toml",
                "--jobs",
                jobs,
                "pipeline",
                "--output-dir",
                &out,
            ],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in [
        "metrics.json",
        "counterfactuals.ds",
        "classifier.json",
        "manifest.csv",
        "graphons.txt",
    ] {
        let a = fs::read(dir.path().join("run1").join(file)).unwrap();
        let b = fs::read(dir.path().join("run4").join(file)).unwrap();
        assert!(a == b, "{file} differs between --jobs 1 and --jobs 4");
    }
}

#[test]
fn pipeline_writes_its_artifacts() {
    let dir = workdir();
    let o = motifcar(dir.path(), &["--config", "small.toml", "pipeline"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = dir.path().join("run");
    for file in [
        "config.toml",
        "dataset.ds",
        "graphons.txt",
        "raw.ds",
        "manifest.csv",
        "metrics.json",
        "summary.txt",
    ] {
        assert!(run.join(file).is_file(), "missing {file}");
    }
    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(run.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["f1"]
        .as_f64()
        .is_some_and(|f| (0.0..=1.0).contains(&f)));
}

#[test]
fn clustered_graphons_chain_through_produce() {
    let dir = workdir();
    let set = [
        "--config",
        "small.toml",
        "--set",
        "experiment.graphon_clusters=2",
    ];
    let run = |extra: &[&str], with_clusters: bool| {
        let mut args: Vec<&str> = if with_clusters {
            set.to_vec()
        } else {
            set[..2].to_vec()
        };
        args.extend_from_slice(extra);
        motifcar(dir.path(), &args)
    };
    assert_eq!(
        run(&["synth", "--out", "d.ds"], false).status.code(),
        Some(0)
    );
    let o = run(
        &["estimate-graphon", "--dataset", "d.ds", "--out", "w2.txt"],
        true,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(
        &[
            "produce",
            "--dataset",
            "d.ds",
            "--graphons",
            "w2.txt",
            "--out-dir",
            "p",
        ],
        true,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = run(
        &["estimate-graphon", "--dataset", "d.ds", "--out", "w1.txt"],
        false,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(
        &[
            "produce",
            "--dataset",
            "d.ds",
            "--graphons",
            "w1.txt",
            "--out-dir",
            "q",
        ],
        true,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("graphon_clusters"), "{}", stderr(&o));
}
