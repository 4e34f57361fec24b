//! Raw-versus-preprocessed comparison over two parallel corpora.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use digitprep::dataset::{split_indices, LabeledDataset};
use digitprep::learners::{evaluate, fit_model, timed, FeatureMatrix, ModelKind};
use digitprep::pipeline::{raw_baseline, PipelineConfig};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::Settings;

pub const SCHEMA: u32 = 1;
pub const CSV_HEADER: &str =
    "model,pathway,accuracy,fit_seconds,predict_seconds,n_train,n_test,config_hash";

/// Table columns kept for models this toolkit does not implement.
pub const RESERVED: [&str; 4] = ["cnn", "capsnet", "svm", "svm_pca"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Implemented(ModelKind),
    Reserved(&'static str),
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Implemented(k) => k.name(),
            ModelChoice::Reserved(n) => n,
        }
    }
}

/// Comma-separated model names; `all` expands to every implemented model.
pub fn parse_models(list: &str) -> Result<Vec<ModelChoice>, String> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let picked: Vec<ModelChoice> = if name == "all" {
            ModelKind::ALL
                .into_iter()
                .map(ModelChoice::Implemented)
                .collect()
        } else if let Some(r) = RESERVED.iter().find(|r| **r == name) {
            vec![ModelChoice::Reserved(r)]
        } else {
            vec![ModelChoice::Implemented(
                name.parse().map_err(|e| format!("{e}"))?,
            )]
        };
        for m in picked {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    if out.is_empty() {
        return Err("no models requested".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pathway {
    Raw,
    Preprocessed,
}

impl Pathway {
    pub fn name(self) -> &'static str {
        match self {
            Pathway::Raw => "raw",
            Pathway::Preprocessed => "preprocessed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub model: ModelKind,
    pub pathway: Pathway,
    pub accuracy: f64,
    pub fit_seconds: f64,
    pub predict_seconds: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub reserved: Vec<&'static str>,
    /// Stems of the test items as seen in each corpus.
    pub raw_test_stems: Vec<String>,
    pub prep_test_stems: Vec<String>,
}

/// `(raw index, preprocessed index)` pairs matched by file stem, in raw order.
///
/// Stems listed in `skipped` (items the pipeline could not clean) are left out
/// of both pathways. Any other difference in stems or labels is an error.
pub fn pair_corpora(
    raw: &LabeledDataset,
    prep: &LabeledDataset,
    skipped: &HashSet<String>,
) -> Result<Vec<(usize, usize)>, String> {
    let index = |ds: &LabeledDataset, which: &str| -> Result<HashMap<String, usize>, String> {
        let mut map = HashMap::new();
        for (i, item) in ds.items.iter().enumerate() {
            if map.insert(item.stem().to_string(), i).is_some() {
                return Err(format!(
                    "{which} corpus has two files with stem {:?}",
                    item.stem()
                ));
            }
        }
        Ok(map)
    };
    let raw_map = index(raw, "raw")?;
    let prep_map = index(prep, "preprocessed")?;
    if let Some(extra) = prep.items.iter().find(|i| !raw_map.contains_key(i.stem())) {
        return Err(format!(
            "{:?} is only in the preprocessed corpus",
            extra.filename
        ));
    }
    let mut pairs = Vec::new();
    for (i, item) in raw.items.iter().enumerate() {
        match prep_map.get(item.stem()) {
            Some(&j) if prep.items[j].label != item.label => {
                return Err(format!(
                    "{:?} is labelled {} in the raw corpus but {} in the preprocessed one",
                    item.stem(),
                    item.label,
                    prep.items[j].label
                ));
            }
            Some(&j) => pairs.push((i, j)),
            None if skipped.contains(item.stem()) => {}
            None => return Err(format!("{:?} is only in the raw corpus", item.filename)),
        }
    }
    if pairs.is_empty() {
        return Err("the corpora share no items".into());
    }
    Ok(pairs)
}

/// Resize + grayscale, flattened and scaled to [0, 1].
pub fn features(
    ds: &LabeledDataset,
    indices: &[usize],
    cfg: &PipelineConfig,
) -> anyhow::Result<FeatureMatrix> {
    let images = indices
        .par_iter()
        .map(|&i| raw_baseline(&ds.items[i].image, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<_> = images.iter().collect();
    Ok(FeatureMatrix::from_images(&refs)?)
}

struct Prepared {
    train: FeatureMatrix,
    test: FeatureMatrix,
}

pub fn run_bench(
    raw: &LabeledDataset,
    prep: &LabeledDataset,
    pairs: &[(usize, usize)],
    models: &[ModelChoice],
    settings: &Settings,
) -> anyhow::Result<BenchReport> {
    let (train, test) = split_indices(pairs.len(), &settings.split);
    let pick = |idx: &[usize], side: fn(&(usize, usize)) -> usize| {
        idx.iter().map(|&k| side(&pairs[k])).collect::<Vec<_>>()
    };
    let (raw_train, raw_test) = (pick(&train, |p| p.0), pick(&test, |p| p.0));
    let (prep_train, prep_test) = (pick(&train, |p| p.1), pick(&test, |p| p.1));
    if raw_test.is_empty() {
        anyhow::bail!("the split leaves no test items");
    }
    let y_train: Vec<u8> = raw_train.iter().map(|&i| raw.items[i].label).collect();
    let y_test: Vec<u8> = raw_test.iter().map(|&i| raw.items[i].label).collect();

    let cfg = &settings.pipeline;
    let data = [
        (
            Pathway::Raw,
            Prepared {
                train: features(raw, &raw_train, cfg)?,
                test: features(raw, &raw_test, cfg)?,
            },
        ),
        (
            Pathway::Preprocessed,
            Prepared {
                train: features(prep, &prep_train, cfg)?,
                test: features(prep, &prep_test, cfg)?,
            },
        ),
    ];

    let kinds: Vec<ModelKind> = models
        .iter()
        .filter_map(|m| match m {
            ModelChoice::Implemented(k) => Some(*k),
            ModelChoice::Reserved(_) => None,
        })
        .collect();
    let jobs: Vec<(ModelKind, usize)> = kinds.iter().flat_map(|&k| [(k, 0), (k, 1)]).collect();
    let hash = settings.hash();
    let rows = jobs
        .par_iter()
        .map(|&(kind, d)| {
            let (pathway, set) = (&data[d].0, &data[d].1);
            let fitted = timed(|| fit_model(kind, &settings.models, &set.train, &y_train))?;
            let m = evaluate(&fitted, &set.test, &y_test)?;
            Ok(BenchRow {
                model: kind,
                pathway: *pathway,
                accuracy: m.accuracy,
                fit_seconds: m.fit_seconds,
                predict_seconds: m.predict_seconds,
                n_train: y_train.len(),
                n_test: y_test.len(),
                config_hash: hash.clone(),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let stems = |ds: &LabeledDataset, idx: &[usize]| {
        idx.iter()
            .map(|&i| ds.items[i].stem().to_string())
            .collect()
    };
    Ok(BenchReport {
        rows,
        reserved: models
            .iter()
            .filter_map(|m| match m {
                ModelChoice::Reserved(n) => Some(*n),
                ModelChoice::Implemented(_) => None,
            })
            .collect(),
        raw_test_stems: stems(raw, &raw_test),
        prep_test_stems: stems(prep, &prep_test),
    })
}

fn digest_stems(stems: &[String]) -> String {
    let mut sorted: Vec<&str> = stems.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    Sha256::digest(sorted.join("\n").as_bytes())[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl BenchReport {
    pub fn row(&self, model: ModelKind, pathway: Pathway) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.pathway == pathway)
    }

    /// Comment lines (`# schema=1`, test-set digests), then header and rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# schema={SCHEMA}\n");
        let _ = writeln!(
            out,
            "# test_set raw={} preprocessed={}",
            digest_stems(&self.raw_test_stems),
            digest_stems(&self.prep_test_stems)
        );
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{},{},{}",
                r.model,
                r.pathway.name(),
                r.accuracy,
                r.fit_seconds,
                r.predict_seconds,
                r.n_train,
                r.n_test,
                r.config_hash
            );
        }
        out
    }

    /// Accuracy and timing side by side for each model, one line per model.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<12} {:>8} {:>8} {:>10} {:>10} {:>10} {:>10}\n",
            "model", "raw acc", "prep acc", "raw fit s", "prep fit s", "raw pred s", "prep pred s"
        );
        let mut seen = Vec::new();
        for r in &self.rows {
            if seen.contains(&r.model) {
                continue;
            }
            seen.push(r.model);
            let cell = |p: Pathway, f: fn(&BenchRow) -> f64, prec: usize| {
                self.row(r.model, p)
                    .map_or("-".to_string(), |row| format!("{:.*}", prec, f(row)))
            };
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>8} {:>10} {:>10} {:>10} {:>10}",
                r.model.name(),
                cell(Pathway::Raw, |x| x.accuracy, 4),
                cell(Pathway::Preprocessed, |x| x.accuracy, 4),
                cell(Pathway::Raw, |x| x.fit_seconds, 3),
                cell(Pathway::Preprocessed, |x| x.fit_seconds, 3),
                cell(Pathway::Raw, |x| x.predict_seconds, 3),
                cell(Pathway::Preprocessed, |x| x.predict_seconds, 3),
            );
        }
        for name in &self.reserved {
            let _ = writeln!(out, "{name:<12} not implemented");
        }
        out
    }
}
