//! Flat `key = value` settings with namespaced keys.
//!
//! ```text
//! # comment
//! pipeline.median_k = 5
//! spot.min_solidity = 0.85
//! knn.k = 3
//! ```
//!
//! Later assignments win, so `--set` flags applied after the file override it.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use digitprep::contours::SpotCriteria;
use digitprep::dataset::{CsvColumns, SplitSpec, SynthConfig};
use digitprep::learners::ModelParams;
use digitprep::pipeline::{PipelineConfig, ThresholdMode};
use sha2::{Digest, Sha256};

use crate::{usage, UsageError};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub models: ModelParams,
    pub split: SplitSpec,
    pub columns: CsvColumns,
    pub synth: SynthConfig,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, UsageError>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| UsageError(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, UsageError> {
    match value {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        _ => Err(UsageError(format!(
            "{key}: expected true or false, got {value:?}"
        ))),
    }
}

impl Settings {
    /// Defaults, then the file (if any), then each `key=value` override.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let mut s = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            s.apply_text(&text)
                .map_err(|e| usage(format!("{}: {}", path.display(), e.0)))?;
        }
        for kv in overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            s.apply(k.trim(), v.trim())?;
        }
        s.pipeline.validate().map_err(|e| usage(e.to_string()))?;
        s.synth.validate().map_err(usage)?;
        if !(s.split.train_frac > 0.0 && s.split.train_frac < 1.0) {
            return Err(usage("split.train_frac must lie in (0, 1)"));
        }
        Ok(s)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), UsageError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| UsageError(format!("line {}: expected key = value", n + 1)))?;
            self.apply(k.trim(), v.trim())
                .map_err(|e| UsageError(format!("line {}: {}", n + 1, e.0)))?;
        }
        Ok(())
    }

    pub fn apply(&mut self, key: &str, v: &str) -> Result<(), UsageError> {
        let p = &mut self.pipeline;
        let c = &mut p.spot_criteria;
        let m = &mut self.models;
        let y = &mut self.synth;
        match key {
            "pipeline.target_size" => p.target_size = parse(key, v)?,
            "pipeline.median_k" => p.median_k = parse(key, v)?,
            "pipeline.threshold_mode" => {
                p.threshold_mode = match v {
                    "fixed" => ThresholdMode::Fixed,
                    "otsu" => ThresholdMode::Otsu,
                    _ => {
                        return Err(UsageError(format!(
                            "{key}: expected fixed or otsu, got {v:?}"
                        )))
                    }
                }
            }
            "pipeline.fixed_level" => p.fixed_level = parse(key, v)?,
            "pipeline.spot_removal" => p.spot_removal_enabled = parse_bool(key, v)?,
            "pipeline.crop_margin" => p.crop_margin = parse(key, v)?,
            "spot.min_vertices" => c.min_vertices = parse(key, v)?,
            "spot.max_vertices" => c.max_vertices = parse(key, v)?,
            "spot.min_solidity" => c.min_solidity = parse(key, v)?,
            "spot.min_fill_ratio" => c.min_fill_ratio = parse(key, v)?,
            "spot.min_area_frac" => c.min_area_frac = parse(key, v)?,
            "spot.max_area_frac" => c.max_area_frac = parse(key, v)?,
            "spot.dp_epsilon_frac" => c.dp_epsilon_frac = parse(key, v)?,
            "knn.k" => m.knn_k = parse(key, v)?,
            "pca.components" => m.pca_components = parse(key, v)?,
            "logreg.epochs" => m.logreg.epochs = parse(key, v)?,
            "logreg.lr" => m.logreg.lr = parse(key, v)?,
            "logreg.l2" => m.logreg.l2 = parse(key, v)?,
            "tree.max_depth" => {
                m.tree.max_depth = if v == "none" {
                    None
                } else {
                    Some(parse(key, v)?)
                }
            }
            "tree.min_leaf" => m.tree.min_leaf = parse(key, v)?,
            "split.train_frac" => self.split.train_frac = parse(key, v)?,
            "split.seed" => self.split.seed = parse(key, v)?,
            "csv.filename" => self.columns.filename = v.to_string(),
            "csv.digit" => self.columns.digit = v.to_string(),
            "synth.salt_pepper_rate" => y.salt_pepper_rate = parse(key, v)?,
            "synth.spot_probability" => y.spot_probability = parse(key, v)?,
            "synth.invert_probability" => y.invert_probability = parse(key, v)?,
            "synth.grid_lines_probability" => y.grid_lines_probability = parse(key, v)?,
            "synth.jitter" => y.jitter = parse(key, v)?,
            "synth.stroke_width" => y.stroke_width = parse(key, v)?,
            _ => return Err(UsageError(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Every setting as sorted `key=value` lines, in the file syntax.
    pub fn canonical(&self) -> String {
        let p = &self.pipeline;
        let c: &SpotCriteria = &p.spot_criteria;
        let m = &self.models;
        let y = &self.synth;
        let mode = match p.threshold_mode {
            ThresholdMode::Fixed => "fixed",
            ThresholdMode::Otsu => "otsu",
        };
        let depth = m
            .tree
            .max_depth
            .map_or("none".to_string(), |d| d.to_string());
        let mut lines = vec![
            format!("csv.digit={}", self.columns.digit),
            format!("csv.filename={}", self.columns.filename),
            format!("knn.k={}", m.knn_k),
            format!("logreg.epochs={}", m.logreg.epochs),
            format!("logreg.l2={}", m.logreg.l2),
            format!("logreg.lr={}", m.logreg.lr),
            format!("pca.components={}", m.pca_components),
            format!("pipeline.crop_margin={}", p.crop_margin),
            format!("pipeline.fixed_level={}", p.fixed_level),
            format!("pipeline.median_k={}", p.median_k),
            format!("pipeline.spot_removal={}", p.spot_removal_enabled),
            format!("pipeline.target_size={}", p.target_size),
            format!("pipeline.threshold_mode={mode}"),
            format!("split.seed={}", self.split.seed),
            format!("split.train_frac={}", self.split.train_frac),
            format!("spot.dp_epsilon_frac={}", c.dp_epsilon_frac),
            format!("spot.max_area_frac={}", c.max_area_frac),
            format!("spot.max_vertices={}", c.max_vertices),
            format!("spot.min_area_frac={}", c.min_area_frac),
            format!("spot.min_fill_ratio={}", c.min_fill_ratio),
            format!("spot.min_solidity={}", c.min_solidity),
            format!("spot.min_vertices={}", c.min_vertices),
            format!("synth.grid_lines_probability={}", y.grid_lines_probability),
            format!("synth.invert_probability={}", y.invert_probability),
            format!("synth.jitter={}", y.jitter),
            format!("synth.salt_pepper_rate={}", y.salt_pepper_rate),
            format!("synth.spot_probability={}", y.spot_probability),
            format!("synth.stroke_width={}", y.stroke_width),
            format!("tree.max_depth={depth}"),
            format!("tree.min_leaf={}", m.tree.min_leaf),
        ];
        lines.sort();
        lines.join("\n") + "\n"
    }

    /// First 16 hex digits of the SHA-256 of [`Settings::canonical`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# test\npipeline.median_k = 5\n\nknn.k=3\ntree.max_depth = none\n",
        )
        .unwrap();
        let s = Settings::load(Some(&path), &["knn.k=7".into()]).unwrap();
        assert_eq!(s.pipeline.median_k, 5);
        assert_eq!(s.models.knn_k, 7);
        assert_eq!(s.models.tree.max_depth, None);
    }

    #[test]
    fn bad_input_is_a_usage_error() {
        for bad in [
            "nope=1",
            "knn.k=abc",
            "pipeline.median_k=4",
            "split.train_frac=1.5",
            "knn.k",
        ] {
            let err = Settings::load(None, &[bad.into()]).unwrap_err();
            assert!(err.downcast_ref::<UsageError>().is_some(), "{bad}");
        }
        let missing = Settings::load(Some(Path::new("/nonexistent/cfg")), &[]).unwrap_err();
        assert!(missing.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn canonical_text_reparses_to_the_same_settings() {
        let s = Settings::load(
            None,
            &[
                "spot.min_solidity=0.8".into(),
                "pipeline.threshold_mode=otsu".into(),
            ],
        )
        .unwrap();
        let mut back = Settings::default();
        back.apply_text(&s.canonical()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
        assert_ne!(Settings::default().hash(), s.hash());
        assert_eq!(s.hash().len(), 16);
    }
}
