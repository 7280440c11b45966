use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slicernn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(dir: &Path) -> usize {
    ["train.txt", "val.txt", "test.txt"]
        .iter()
        .map(|f| {
            fs::read_to_string(dir.join(f))
                .unwrap()
                .lines()
                .filter(|l| !l.starts_with('#'))
                .count()
        })
        .sum()
}

#[test]
fn gradcheck_passes_and_prints_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["gradcheck", "--arch", "gru"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("gru truncation=per_slice"));
    assert!(out.contains("gru truncation=full_sequence"));
    assert!(out.contains("U_z"));
    assert!(out.contains("4 combinations"));
}

#[test]
fn failing_gradcheck_exits_with_5() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["gradcheck", "--arch", "modified_rnn", "--tol", "1e-30"],
    );
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(stderr(&o).contains("gradient check failed"));
}

#[test]
fn missing_dataset_exits_with_2_and_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["train", "--data", "no_such_dir", "--out", "run"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_dir"));
}

#[test]
fn usage_and_config_errors_have_their_own_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        run(tmp.path(), &["train", "--bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(tmp.path(), &["eval", "--data", "."]).status.code(),
        Some(2)
    );
    fs::write(
        tmp.path().join("c.toml"),
        "[trainer]\nlearning_rate = 1.0\n",
    )
    .unwrap();
    let o = run(tmp.path(), &["--config", "c.toml", "gradcheck"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("learning_rate"));
    let o = run(tmp.path(), &["gradcheck", "--arch", "lstm"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn help_lists_flags_with_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in ["prepare", "train", "tune", "eval", "gradcheck", "inspect"] {
        let o = run(tmp.path(), &[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let h = stdout(&o);
        for flag in [
            "--config",
            "--seed",
            "--arch",
            "--classes",
            "--padded",
            "--lr",
            "--l2",
            "--keep-prob",
            "--epochs",
            "--batch-size",
            "--steps",
            "--max-len",
            "--jobs",
        ] {
            assert!(h.contains(flag), "{sub} help lacks {flag}");
        }
        assert!(
            h.contains("[default: 8]") && h.contains("[default: 88]"),
            "{sub}"
        );
    }
}

#[test]
fn fifty_rows_prepare_into_fifty_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    assert!(run(p, &["synth", "--out", "raw.csv", "--per-class", "10"])
        .status
        .success());
    let o = run(p, &["prepare", "--input", "raw.csv", "--out", "data"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("read 50 rows, skipped 0"));
    assert_eq!(data_lines(&p.join("data")), 50);
    let train = fs::read_to_string(p.join("data/train.txt")).unwrap();
    assert!(train.starts_with("# slicernn-v1\n"));
    assert!(fs::read_to_string(p.join("data/vocab.txt"))
        .unwrap()
        .starts_with("# slicernn-v1\n"));
}

#[test]
fn drop_top_and_length_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    let mut csv = String::from("Score,Text\n");
    for i in 0..20 {
        let words = vec!["w"; 80].join(" ");
        csv.push_str(&format!("{},{words}\n", i % 5 + 1));
    }
    csv.push_str(&format!("2,{}\n", vec!["long"; 90].join(" ")));
    fs::write(p.join("raw.csv"), csv).unwrap();

    let o = run(p, &["prepare", "--input", "raw.csv", "--out", "five"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(data_lines(&p.join("five")), 20);
    let vocab = fs::read_to_string(p.join("five/vocab.txt")).unwrap();
    assert!(!vocab.lines().any(|l| l == "long"));
    assert_eq!(
        fs::read_to_string(p.join("five/histogram.csv")).unwrap(),
        "class,count\n1,4\n2,4\n3,4\n4,4\n5,4\n"
    );

    let o = run(
        p,
        &[
            "prepare",
            "--input",
            "raw.csv",
            "--out",
            "four",
            "--classes",
            "4",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let h = fs::read_to_string(p.join("four/histogram_resampled.csv")).unwrap();
    assert!(h.ends_with("5,0\n"), "{h}");
    assert!(fs::read_to_string(p.join("four/train.txt"))
        .unwrap()
        .contains("classes=4"));
}

#[test]
fn train_eval_inspect_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    assert!(run(p, &["synth", "--out", "raw.csv", "--per-class", "100"])
        .status
        .success());
    assert!(run(p, &["prepare", "--input", "raw.csv", "--out", "data"])
        .status
        .success());
    let train = [
        "--seed",
        "3",
        "train",
        "--data",
        "data",
        "--out",
        "run",
        "--arch",
        "gru",
        "--epochs",
        "5",
        "--batch-size",
        "5",
        "--lr",
        "0.1",
        "--embed-dim",
        "16",
        "--hidden-dim",
        "16",
    ];
    let o = run(p, &train);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("epoch 4 loss"));
    for f in ["metrics.csv", "epoch0.ckpt", "final.ckpt", "config.toml"] {
        assert!(p.join("run").join(f).exists(), "{f}");
    }
    let metrics = fs::read_to_string(p.join("run/metrics.csv")).unwrap();
    assert!(metrics.starts_with("epoch,loss,train_acc,val_acc,seconds\n"));

    let o = run(
        p,
        &[
            "eval",
            "--data",
            "data",
            "--checkpoint",
            "run/final.ckpt",
            "--out",
            "confusion.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    let acc: f64 = line
        .split_whitespace()
        .find_map(|w| w.strip_prefix("accuracy="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(acc >= 0.9, "{line}");
    assert!(fs::read_to_string(p.join("confusion.csv"))
        .unwrap()
        .starts_with("class,pred1,"));

    for (ckpt, out) in [("run/epoch0.ckpt", "h0.csv"), ("run/final.ckpt", "h1.csv")] {
        let o = run(
            p,
            &[
                "inspect",
                "--data",
                "data",
                "--checkpoint",
                ckpt,
                "--out",
                out,
            ],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let csv = fs::read_to_string(p.join(out)).unwrap();
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with("class,dim0,") && header.ends_with(",dim15,count"));
        assert_eq!(csv.lines().count(), 6);
    }

    // Same seed, same bytes.
    let again: Vec<&str> = train
        .iter()
        .map(|a| if *a == "run" { "run2" } else { a })
        .collect();
    assert!(run(p, &again).status.success());
    for f in ["metrics.csv", "epoch0.ckpt", "final.ckpt"] {
        assert_eq!(
            fs::read(p.join("run").join(f)).unwrap(),
            fs::read(p.join("run2").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn tune_writes_ranked_table() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    assert!(run(p, &["synth", "--out", "raw.csv", "--per-class", "10"])
        .status
        .success());
    assert!(run(p, &["prepare", "--input", "raw.csv", "--out", "data"])
        .status
        .success());
    let o = run(
        p,
        &[
            "tune",
            "--data",
            "data",
            "--out",
            "tune",
            "--epochs",
            "1",
            "--embed-dim",
            "4",
            "--hidden-dim",
            "4",
            "--lrs",
            "0.01,0.1",
            "--l2s",
            "0",
            "--keep-probs",
            "0.9,1.0",
            "--jobs",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(p.join("tune/tuning.csv")).unwrap();
    assert!(table.starts_with("lr,l2,keep_prob,val_acc,best_epoch\n"));
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    assert!(run(p, &["synth", "--out", "raw.csv", "--per-class", "10"])
        .status
        .success());
    assert!(run(p, &["prepare", "--input", "raw.csv", "--out", "data"])
        .status
        .success());
    fs::write(
        p.join("c.toml"),
        "seed = 4\n[paths]\ndata = \"data\"\nout = \"run\"\n[models]\narch = \"perstep_rnn\"\nembed_dim = 4\nhidden_dim = 4\n[trainer]\nepochs = 3\n",
    )
    .unwrap();
    let o = run(p, &["--config", "c.toml", "train", "--epochs", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let resolved = fs::read_to_string(p.join("run/config.toml")).unwrap();
    assert!(resolved.contains("seed = 4"));
    assert!(resolved.contains("arch = \"perstep_rnn\""));
    assert!(resolved.contains("epochs = 1"));
    assert_eq!(
        fs::read_to_string(p.join("run/metrics.csv"))
            .unwrap()
            .lines()
            .count(),
        2
    );
}
