use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use digitprep::dataset::{
    file_stem, generate_synthetic, load_labeled, output_path, split_indices, write_labels_csv,
    write_pgm, write_ppm, DatasetError, LabeledDataset, LoadOutcome, RowError,
};
use digitprep::learners::{
    decode_model, encode_model, evaluate, fit_model, timed, LearnerError, ModelKind, Timed,
};
use digitprep::pipeline::run_stages;
use digitprep::raster::AnyImage;
use rayon::prelude::*;

use crate::bench::{features, pair_corpora, parse_models, run_bench};
use crate::config::Settings;
use crate::{usage, Status};

pub const MANIFEST: &str = "manifest.csv";
pub const LABELS: &str = "labels.csv";

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

/// Loads a labelled corpus. An unreadable or malformed label file is a usage
/// error; per-row failures are returned for the caller to report.
fn load(csv: &Path, dir: &Path, settings: &Settings) -> anyhow::Result<LoadOutcome> {
    load_labeled(csv, dir, &settings.columns).map_err(|e| usage(format!("{}: {e}", csv.display())))
}

fn report_row_errors(errors: &[RowError]) {
    for e in errors {
        eprintln!("row {} ({}): {}", e.row, e.filename, e.error);
    }
}

fn write_any(img: &AnyImage, path: &Path) -> Result<(), DatasetError> {
    match img {
        AnyImage::Gray(g) => write_pgm(g, path),
        AnyImage::Rgb(c) => write_ppm(c, path),
    }
}

pub struct PrepArgs<'a> {
    pub input: &'a Path,
    pub csv: &'a Path,
    pub out: &'a Path,
    pub trace: bool,
}

enum PrepResult {
    Ok(PathBuf),
    Skipped,
    Failed(String),
}

pub fn prep(args: &PrepArgs, settings: &Settings) -> anyhow::Result<Status> {
    let outcome = load(args.csv, args.input, settings)?;
    create_dir(args.out)?;
    report_row_errors(&outcome.errors);

    let cfg = &settings.pipeline;
    let results: Vec<PrepResult> = outcome
        .dataset
        .items
        .par_iter()
        .map(|item| {
            let trace = match run_stages(&item.image, cfg) {
                Ok(t) => t,
                Err(e) => return Ok(PrepResult::Failed(e.to_string())),
            };
            if args.trace {
                trace.write_snapshots(&args.out.join("trace").join(item.stem()))?;
            }
            match &trace.output {
                Some(out) => {
                    let path = output_path(args.out, "all", item.label, &item.filename);
                    create_dir(path.parent().expect("output path has a parent"))?;
                    write_pgm(out.as_gray(), &path)?;
                    Ok(PrepResult::Ok(path))
                }
                None => Ok(PrepResult::Skipped),
            }
        })
        .collect::<anyhow::Result<_>>()?;

    // Manifest rows follow the label file, including rows that failed to load.
    let mut manifest = csv_writer(&args.out.join(MANIFEST))?;
    manifest.write_record(["filename", "label", "status"])?;
    let mut labels = Vec::new();
    let mut errors = outcome.errors.iter().peekable();
    let mut items = outcome.dataset.items.iter().zip(&results);
    let total = outcome.dataset.len() + outcome.errors.len();
    let (mut ok, mut not_ok) = (0usize, 0usize);
    for row in 1..=total {
        if let Some(e) = errors.next_if(|e| e.row == row) {
            manifest.write_record([e.filename.as_str(), "", "error"])?;
            not_ok += 1;
            continue;
        }
        let (item, result) = items.next().expect("every row is an item or an error");
        let status = match result {
            PrepResult::Ok(path) => {
                let rel = path.strip_prefix(args.out).unwrap_or(path);
                labels.push((
                    rel.to_string_lossy().replace('\\', "/"),
                    item.label,
                    item.source_tag.as_str(),
                ));
                ok += 1;
                "ok"
            }
            PrepResult::Skipped => {
                not_ok += 1;
                "skipped"
            }
            PrepResult::Failed(msg) => {
                eprintln!("{}: {msg}", item.filename);
                not_ok += 1;
                "error"
            }
        };
        manifest.write_record([item.filename.as_str(), &item.label.to_string(), status])?;
    }
    manifest.flush()?;
    write_labels_csv(
        &args.out.join(LABELS),
        labels.iter().map(|(f, l, t)| (f.as_str(), *l, *t)),
    )?;
    println!("prep: {ok} ok, {not_ok} skipped or failed");
    Ok(if not_ok == 0 {
        Status::Success
    } else {
        Status::Partial
    })
}

fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<fs::File>> {
    let file =
        fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn synth(out: &Path, settings: &Settings) -> anyhow::Result<Status> {
    let ds = generate_synthetic(&settings.synth);
    create_dir(out)?;
    for item in &ds.items {
        write_any(&item.image, &out.join(&item.filename))?;
    }
    write_labels_csv(
        &out.join(LABELS),
        ds.items
            .iter()
            .map(|i| (i.filename.as_str(), i.label, i.source_tag.as_str())),
    )?;
    println!("synth: wrote {} images to {}", ds.len(), out.display());
    Ok(Status::Success)
}

pub fn split(input: &Path, csv: &Path, out: &Path, settings: &Settings) -> anyhow::Result<Status> {
    let outcome = load(csv, input, settings)?;
    report_row_errors(&outcome.errors);
    let ds = &outcome.dataset;
    let (train, test) = split_indices(ds.len(), &settings.split);
    for (name, idx) in [("train", &train), ("test", &test)] {
        let mut rows = Vec::with_capacity(idx.len());
        for &i in idx.iter() {
            let item = &ds.items[i];
            let mut path = output_path(out, name, item.label, &item.filename);
            if matches!(item.image, AnyImage::Rgb(_)) {
                path.set_extension("ppm");
            }
            create_dir(path.parent().expect("output path has a parent"))?;
            write_any(&item.image, &path)?;
            let rel = path
                .strip_prefix(out)
                .unwrap_or(&path)
                .to_string_lossy()
                .replace('\\', "/");
            rows.push((rel, item.label, item.source_tag.as_str()));
        }
        write_labels_csv(
            &out.join(format!("{name}.csv")),
            rows.iter().map(|(f, l, t)| (f.as_str(), *l, *t)),
        )?;
    }
    println!("split: {} train, {} test", train.len(), test.len());
    Ok(if outcome.errors.is_empty() {
        Status::Success
    } else {
        Status::Partial
    })
}

fn labelled_features(
    data: &Path,
    csv: &Path,
    settings: &Settings,
) -> anyhow::Result<(
    LabeledDataset,
    digitprep::learners::FeatureMatrix,
    Vec<RowError>,
)> {
    let outcome = load(csv, data, settings)?;
    report_row_errors(&outcome.errors);
    if outcome.dataset.is_empty() {
        return Err(usage(format!("{}: no loadable items", csv.display())));
    }
    let idx: Vec<usize> = (0..outcome.dataset.len()).collect();
    let x = features(&outcome.dataset, &idx, &settings.pipeline)?;
    Ok((outcome.dataset, x, outcome.errors))
}

pub fn train(
    kind: ModelKind,
    data: &Path,
    csv: &Path,
    model_out: &Path,
    settings: &Settings,
) -> anyhow::Result<Status> {
    let (ds, x, errors) = labelled_features(data, csv, settings)?;
    let fitted =
        timed(|| fit_model(kind, &settings.models, &x, &ds.labels())).map_err(|e| match e {
            LearnerError::SingleClass | LearnerError::InvalidParameter(_) => usage(e.to_string()),
            other => other.into(),
        })?;
    if let Some(parent) = model_out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(model_out, encode_model(&fitted.model))
        .with_context(|| format!("cannot write {}", model_out.display()))?;
    println!(
        "train: {kind} on {} items in {:.3}s -> {}",
        ds.len(),
        fitted.fit_seconds,
        model_out.display()
    );
    Ok(if errors.is_empty() {
        Status::Success
    } else {
        Status::Partial
    })
}

pub fn eval(
    model_file: &Path,
    data: &Path,
    csv: &Path,
    settings: &Settings,
) -> anyhow::Result<Status> {
    let bytes = fs::read(model_file)
        .map_err(|e| usage(format!("cannot read {}: {e}", model_file.display())))?;
    let model =
        decode_model(&bytes).map_err(|e| usage(format!("{}: {e}", model_file.display())))?;
    let (ds, x, errors) = labelled_features(data, csv, settings)?;
    let fitted = Timed {
        model,
        fit_seconds: 0.0,
    };
    let m = evaluate(&fitted, &x, &ds.labels()).map_err(|e| usage(e.to_string()))?;
    println!("accuracy {:.6}", m.accuracy);
    println!("predict_seconds {:.6}", m.predict_seconds);
    println!("confusion (rows: truth, columns: predicted)");
    for (digit, row) in m.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
        println!("{digit:>2} {}", cells.join(""));
    }
    Ok(if errors.is_empty() {
        Status::Success
    } else {
        Status::Partial
    })
}

pub struct BenchArgs<'a> {
    pub raw: &'a Path,
    pub raw_csv: &'a Path,
    pub prep: &'a Path,
    pub prep_csv: &'a Path,
    pub models: &'a str,
    pub out: Option<&'a Path>,
}

/// Stems the preprocessing run marked as skipped or failed, if it left a manifest.
fn unprocessed_stems(prep_dir: &Path) -> anyhow::Result<HashSet<String>> {
    let path = prep_dir.join(MANIFEST);
    if !path.exists() {
        return Ok(HashSet::new());
    }
    let mut reader =
        csv::Reader::from_path(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut out = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if record.get(2).is_some_and(|s| s != "ok") {
            out.insert(file_stem(record.get(0).unwrap_or("")).to_string());
        }
    }
    Ok(out)
}

pub fn bench(args: &BenchArgs, settings: &Settings) -> anyhow::Result<Status> {
    let models = parse_models(args.models).map_err(usage)?;
    let raw = load(args.raw_csv, args.raw, settings)?;
    let prep = load(args.prep_csv, args.prep, settings)?;
    report_row_errors(&raw.errors);
    report_row_errors(&prep.errors);
    let skipped = unprocessed_stems(args.prep)?;
    let pairs = pair_corpora(&raw.dataset, &prep.dataset, &skipped)
        .map_err(|e| usage(format!("corpus mismatch: {e}")))?;
    let report = run_bench(&raw.dataset, &prep.dataset, &pairs, &models, settings)?;
    print!("{}", report.to_table());
    if let Some(out) = args.out {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        fs::write(out, report.to_csv())
            .with_context(|| format!("cannot write {}", out.display()))?;
    }
    let partial = !raw.errors.is_empty() || !prep.errors.is_empty();
    Ok(if partial {
        Status::Partial
    } else {
        Status::Success
    })
}
