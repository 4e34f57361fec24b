//! Labelled corpora: CSV + image-directory ingestion, seeded train/test
//! splitting, PNM I/O and the synthetic noisy-digit generator.

mod pnm;
pub mod synth;

use std::collections::HashSet;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use pnm::{
    decode_pgm, decode_pnm, encode_pgm, encode_ppm, read_image, read_pgm, write_pgm, write_ppm,
};
pub use synth::{generate_synthetic, generate_with_truth, SpotPolygon, SynthConfig, SynthTruth};

use crate::raster::{AnyImage, RasterError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("image data is truncated")]
    Truncated,
    #[error("label file has no `{0}` column")]
    MissingColumn(String),
    #[error("malformed label file: {0}")]
    MalformedCsv(String),
    #[error("image file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("label `{0}` is not a digit 0-9")]
    InvalidLabel(String),
    #[error("filename `{0}` appears more than once")]
    DuplicateFilename(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            DatasetError::FileNotFound(path.to_path_buf())
        } else {
            DatasetError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledItem {
    pub image: AnyImage,
    pub label: u8,
    pub source_tag: String,
    /// Path relative to the corpus image directory; unique within a dataset.
    pub filename: String,
}

impl LabeledItem {
    /// Filename without directories or extension; the key used to pair corpora.
    pub fn stem(&self) -> &str {
        file_stem(&self.filename)
    }
}

pub fn file_stem(filename: &str) -> &str {
    let base = filename.rsplit(['/', '\\']).next().unwrap_or(filename);
    match base.rfind('.') {
        Some(i) if i > 0 => &base[..i],
        _ => base,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    pub items: Vec<LabeledItem>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.items.iter().map(|i| i.label).collect()
    }
}

/// Label file column names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvColumns {
    pub filename: String,
    pub digit: String,
    /// Optional provenance column; the first one present is used.
    pub source: Vec<String>,
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self {
            filename: "filename".into(),
            digit: "digit".into(),
            source: vec!["source_tag".into(), "database name".into()],
        }
    }
}

/// A label-file row that could not be loaded.
#[derive(Debug)]
pub struct RowError {
    /// 1-based data row (header excluded).
    pub row: usize,
    pub filename: String,
    pub error: DatasetError,
}

#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub dataset: LabeledDataset,
    pub errors: Vec<RowError>,
}

fn parse_label(raw: &str) -> Result<u8, DatasetError> {
    match raw.trim().parse::<u8>() {
        Ok(d) if d <= 9 => Ok(d),
        _ => Err(DatasetError::InvalidLabel(raw.to_string())),
    }
}

/// Loads every row of `csv_path`, resolving filenames under `image_dir`.
/// Row-level failures are collected rather than aborting the load.
pub fn load_labeled(
    csv_path: &Path,
    image_dir: &Path,
    columns: &CsvColumns,
) -> Result<LoadOutcome, DatasetError> {
    let file = std::fs::File::open(csv_path).map_err(|e| DatasetError::io(csv_path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::MalformedCsv(e.to_string()))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let name_col = find(&columns.filename)
        .ok_or_else(|| DatasetError::MissingColumn(columns.filename.clone()))?;
    let digit_col =
        find(&columns.digit).ok_or_else(|| DatasetError::MissingColumn(columns.digit.clone()))?;
    let source_col = columns.source.iter().find_map(|s| find(s));

    let mut outcome = LoadOutcome::default();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DatasetError::MalformedCsv(e.to_string()))?;
        let filename = record.get(name_col).unwrap_or("").trim().to_string();
        let row = i + 1;
        let loaded = (|| {
            if !seen.insert(filename.clone()) {
                return Err(DatasetError::DuplicateFilename(filename.clone()));
            }
            let label = parse_label(record.get(digit_col).unwrap_or(""))?;
            let image = read_image(&image_dir.join(&filename))?;
            Ok(LabeledItem {
                image,
                label,
                source_tag: source_col
                    .and_then(|c| record.get(c))
                    .unwrap_or("")
                    .to_string(),
                filename: filename.clone(),
            })
        })();
        match loaded {
            Ok(item) => outcome.dataset.items.push(item),
            Err(error) => outcome.errors.push(RowError {
                row,
                filename,
                error,
            }),
        }
    }
    Ok(outcome)
}

/// Writes a `filename,digit,source_tag` label file.
pub fn write_labels_csv<'a>(
    path: &Path,
    rows: impl IntoIterator<Item = (&'a str, u8, &'a str)>,
) -> Result<(), DatasetError> {
    let mut w =
        csv::Writer::from_path(path).map_err(|e| DatasetError::MalformedCsv(e.to_string()))?;
    let csv_err = |e: csv::Error| DatasetError::MalformedCsv(e.to_string());
    w.write_record(["filename", "digit", "source_tag"])
        .map_err(csv_err)?;
    for (name, label, tag) in rows {
        w.write_record([name, &label.to_string(), tag])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| DatasetError::io(path, e))
}

/// `out_dir/<split>/<label>/<stem>.pgm`.
pub fn output_path(out_dir: &Path, split: &str, label: u8, filename: &str) -> PathBuf {
    out_dir
        .join(split)
        .join(label.to_string())
        .join(format!("{}.pgm", file_stem(filename)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.85,
            seed: 0,
        }
    }
}

/// Seeded permutation of `0..n` cut into (train, test) index lists;
/// train takes the first ⌈train_frac·n⌉ entries.
pub fn split_indices(n: usize, spec: &SplitSpec) -> (Vec<usize>, Vec<usize>) {
    assert!(
        spec.train_frac > 0.0 && spec.train_frac <= 1.0,
        "train_frac must lie in (0, 1]"
    );
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    // The small offset keeps products like 0.85 * 100 from rounding up to 86.
    let n_train = ((spec.train_frac * n as f64) - 1e-9)
        .ceil()
        .clamp(0.0, n as f64) as usize;
    let test = order.split_off(n_train);
    (order, test)
}

pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> (LabeledDataset, LabeledDataset) {
    let (train, test) = split_indices(ds.len(), spec);
    let pick = |idx: Vec<usize>| LabeledDataset {
        items: idx.into_iter().map(|i| ds.items[i].clone()).collect(),
    };
    (pick(train), pick(test))
}
