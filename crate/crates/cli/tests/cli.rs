use std::fs;
use std::path::{Path, PathBuf};

use digitprep::dataset::{generate_synthetic, write_labels_csv, write_pgm, SynthConfig};
use digitprep::raster::{AnyImage, GrayImage};
use digitprep_cli::run;

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("digitprep").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Three clean synthetic digits, with the middle one optionally replaced by a blank page.
fn small_corpus(dir: &Path, blank_middle: bool) -> PathBuf {
    let input = dir.join("in");
    fs::create_dir_all(&input).unwrap();
    let ds = generate_synthetic(&SynthConfig::clean(3, 1));
    for (i, item) in ds.items.iter().enumerate() {
        let img = match (&item.image, blank_middle && i == 1) {
            (_, true) => GrayImage::filled(64, 64, 200).unwrap(),
            (AnyImage::Gray(g), false) => g.clone(),
            (AnyImage::Rgb(_), false) => unreachable!("synthetic corpora are grey"),
        };
        write_pgm(&img, &input.join(&item.filename)).unwrap();
    }
    write_labels_csv(
        &input.join("labels.csv"),
        ds.items
            .iter()
            .map(|i| (i.filename.as_str(), i.label, i.source_tag.as_str())),
    )
    .unwrap();
    input
}

fn manifest_status(out: &Path) -> Vec<String> {
    fs::read_to_string(out.join("manifest.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect()
}

#[test]
fn prep_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_corpus(dir.path(), false);
    let out = dir.path().join("out");
    assert_eq!(
        cli(&["prep", "--input", s(&input), "--out", s(&out), "--trace"]),
        0
    );
    assert_eq!(manifest_status(&out), ["ok", "ok", "ok"]);
    assert!(out.join("all/0/synth_000000.pgm").exists());
    assert!(out.join("all/2/synth_000002.pgm").exists());
    assert!(out.join("trace/synth_000001/07_final.pgm").exists());
    let labels = fs::read_to_string(out.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 4);
    assert!(labels.contains("all/1/synth_000001.pgm,1,"));
}

#[test]
fn prep_skips_blank_pages_and_reports_partial() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_corpus(dir.path(), true);
    let out = dir.path().join("out");
    assert_eq!(cli(&["prep", "--input", s(&input), "--out", s(&out)]), 1);
    assert_eq!(manifest_status(&out), ["ok", "skipped", "ok"]);
    assert!(!out.join("all/1").exists());
    assert_eq!(
        fs::read_to_string(out.join("labels.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
}

#[test]
fn prep_bad_inputs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        cli(&["prep", "--input", s(dir.path()), "--out", s(&out)]),
        2
    );
    let input = small_corpus(dir.path(), false);
    assert_eq!(
        cli(&[
            "prep",
            "--input",
            s(&input),
            "--out",
            s(&out),
            "--set",
            "pipeline.median_k=4"
        ]),
        2
    );
    assert_eq!(cli(&["prep", "--input", s(&input)]), 2);
    assert_eq!(cli(&["--help"]), 0);
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(
            cli(&["synth", "--count", "20", "--seed", "5", "--out", s(out)]),
            0
        );
    }
    for name in ["labels.csv", "synth_000000.pgm", "synth_000019.pgm"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn synth_clean_has_no_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    assert_eq!(
        cli(&["synth", "--count", "10", "--out", s(&out), "--clean"]),
        0
    );
    let labels = fs::read_to_string(out.join("labels.csv")).unwrap();
    assert!(labels.lines().skip(1).all(|l| l.ends_with("inverted=0")));
    assert_eq!(
        cli(&[
            "synth",
            "--count",
            "10",
            "--out",
            s(&out),
            "--salt-pepper",
            "1.5"
        ]),
        2
    );
}

#[test]
fn split_partitions_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    let out = dir.path().join("split");
    assert_eq!(cli(&["synth", "--count", "40", "--out", s(&raw)]), 0);
    assert_eq!(
        cli(&[
            "split",
            "--input",
            s(&raw),
            "--out",
            s(&out),
            "--train-frac",
            "0.75",
            "--seed",
            "3"
        ]),
        0
    );
    let rows = |f: &str| fs::read_to_string(out.join(f)).unwrap().lines().count() - 1;
    assert_eq!((rows("train.csv"), rows("test.csv")), (30, 10));
    let first = fs::read_to_string(out.join("test.csv")).unwrap();
    let path = first.lines().nth(1).unwrap().split(',').next().unwrap();
    assert!(path.starts_with("test/"));
    assert!(out.join(path).exists());
}

fn synth_and_prep(dir: &Path, count: &str) -> (PathBuf, PathBuf) {
    let (raw, prep) = (dir.join("raw"), dir.join("prep"));
    assert_eq!(
        cli(&["synth", "--count", count, "--seed", "2", "--out", s(&raw)]),
        0
    );
    assert!(cli(&["prep", "--input", s(&raw), "--out", s(&prep)]) <= 1);
    (raw, prep)
}

#[test]
fn bench_writes_one_row_per_model_and_pathway() {
    let dir = tempfile::tempdir().unwrap();
    let (raw, prep) = synth_and_prep(dir.path(), "100");
    let report = dir.path().join("report.csv");
    assert_eq!(
        cli(&[
            "bench",
            "--raw",
            s(&raw),
            "--prep",
            s(&prep),
            "--models",
            "knn,svm",
            "--out",
            s(&report)
        ]),
        0
    );
    let text = fs::read_to_string(&report).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("knn,raw,") && rows[1].starts_with("knn,preprocessed,"));
}

#[test]
fn bench_on_identical_corpora_scores_both_pathways_alike() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    assert_eq!(cli(&["synth", "--count", "60", "--out", s(&raw)]), 0);
    let report = dir.path().join("r.csv");
    assert_eq!(
        cli(&[
            "bench",
            "--raw",
            s(&raw),
            "--prep",
            s(&raw),
            "--models",
            "knn,tree",
            "--out",
            s(&report)
        ]),
        0
    );
    let text = fs::read_to_string(&report).unwrap();
    let acc: Vec<(String, String)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[2].to_string())
        })
        .collect();
    assert_eq!(acc.len(), 4);
    assert_eq!(acc[0], acc[1]);
    assert_eq!(acc[2], acc[3]);
}

#[test]
fn bench_rejects_mismatched_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(cli(&["synth", "--count", "20", "--out", s(&a)]), 0);
    assert_eq!(cli(&["synth", "--count", "30", "--out", s(&b)]), 0);
    assert_eq!(
        cli(&["bench", "--raw", s(&a), "--prep", s(&b), "--models", "knn"]),
        2
    );
    assert_eq!(
        cli(&["bench", "--raw", s(&a), "--prep", s(&a), "--models", "nope"]),
        2
    );
}

#[test]
fn train_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    assert_eq!(
        cli(&["synth", "--count", "60", "--seed", "4", "--out", s(&raw)]),
        0
    );
    let (m1, m2) = (dir.path().join("m1.npml"), dir.path().join("m2.npml"));
    for m in [&m1, &m2] {
        let code = cli(&[
            "train",
            "--model",
            "tree",
            "--data",
            s(&raw),
            "--out",
            s(m),
            "--set",
            "tree.max_depth=none",
            "--set",
            "tree.min_leaf=1",
        ]);
        assert_eq!(code, 0);
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
    assert_eq!(cli(&["eval", "--model-file", s(&m1), "--data", s(&raw)]), 0);

    let bytes = fs::read(&m1).unwrap();
    let cut = dir.path().join("cut.npml");
    fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(
        cli(&["eval", "--model-file", s(&cut), "--data", s(&raw)]),
        2
    );
    assert_eq!(
        cli(&[
            "train",
            "--model",
            "cnn",
            "--data",
            s(&raw),
            "--out",
            s(&cut)
        ]),
        2
    );
}
