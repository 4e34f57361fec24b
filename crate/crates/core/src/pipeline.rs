//! Fixed-order cleaning pipeline producing square white-on-black binary digits.
//!
//! Stage order is hard-wired: resize, grayscale, median blur, spot removal,
//! polarity binarization, largest-contour crop, square pad, final resize.
//! Only spot removal can be switched off.

use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::binarize::{
    histogram, otsu_threshold, polarity_binarize, BinarizeError, ThresholdDecision,
};
use crate::contours::{
    detect_quad_spots, fill_contour, largest_contour_bbox, Contour, ContourError, Rect,
    SpotCriteria,
};
use crate::dataset::{write_pgm, write_ppm, DatasetError};
use crate::raster::{
    median_blur, resize, resize_nearest, to_grayscale, AnyImage, BinaryImage, GrayImage,
    RasterError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no foreground left after binarization")]
    BlankImage,
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Contour(#[from] ContourError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Majority rule at `fixed_level`.
    Fixed,
    /// Majority rule at the Otsu level of the blurred image.
    Otsu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub target_size: usize,
    pub median_k: usize,
    pub threshold_mode: ThresholdMode,
    pub fixed_level: u8,
    pub spot_criteria: SpotCriteria,
    pub spot_removal_enabled: bool,
    /// Background border, in output pixels, left around the cropped digit.
    pub crop_margin: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            target_size: 28,
            median_k: 3,
            threshold_mode: ThresholdMode::Fixed,
            fixed_level: crate::binarize::DEFAULT_LEVEL,
            spot_criteria: SpotCriteria::default(),
            spot_removal_enabled: true,
            crop_margin: 2,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: &str| Err(PipelineError::InvalidConfig(msg.to_string()));
        if self.target_size < 8 {
            return bad("target_size must be at least 8");
        }
        if self.median_k.is_multiple_of(2) {
            return bad("median_k must be odd");
        }
        if self.median_k > self.target_size {
            return bad("median_k must not exceed target_size");
        }
        if 2 * self.crop_margin >= self.target_size {
            return bad("crop_margin must leave room for the digit");
        }
        self.spot_criteria
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))
    }
}

/// Intermediate results of one [`preprocess`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    pub resized: AnyImage,
    pub gray: GrayImage,
    pub blurred: GrayImage,
    pub despotted: GrayImage,
    pub spots: Vec<Contour>,
    pub threshold: ThresholdDecision,
    pub binary: BinaryImage,
    pub crop: Option<Rect>,
    pub output: Option<BinaryImage>,
}

impl StageTrace {
    /// Writes every snapshot as a numbered PGM (PPM for a colour resize) into `dir`.
    pub fn write_snapshots(&self, dir: &Path) -> Result<(), DatasetError> {
        std::fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
        match &self.resized {
            AnyImage::Gray(g) => write_pgm(g, &dir.join("01_resized.pgm"))?,
            AnyImage::Rgb(c) => write_ppm(c, &dir.join("01_resized.ppm"))?,
        }
        write_pgm(&self.gray, &dir.join("02_gray.pgm"))?;
        write_pgm(&self.blurred, &dir.join("03_blurred.pgm"))?;
        write_pgm(&self.despotted, &dir.join("04_despotted.pgm"))?;
        write_pgm(self.binary.as_gray(), &dir.join("05_binary.pgm"))?;
        if let Some(r) = self.crop {
            let cropped = self
                .binary
                .as_gray()
                .crop(r.x, r.y, r.w, r.h)
                .map_err(DatasetError::Raster)?;
            write_pgm(&cropped, &dir.join("06_crop.pgm"))?;
        }
        if let Some(out) = &self.output {
            write_pgm(out.as_gray(), &dir.join("07_final.pgm"))?;
        }
        Ok(())
    }
}

fn resize_any(img: &AnyImage, size: usize) -> Result<AnyImage, RasterError> {
    Ok(match img {
        AnyImage::Gray(g) => AnyImage::Gray(resize(g, size, size)?),
        AnyImage::Rgb(c) => AnyImage::Rgb(c.resize(size, size)?),
    })
}

/// Crops `rect`, pads it to a centred square of background, scales it to fit
/// inside the margin and places it on a `size`×`size` background canvas.
fn frame_digit(
    binary: &BinaryImage,
    rect: Rect,
    size: usize,
    margin: usize,
) -> Result<BinaryImage, RasterError> {
    let cropped = binary.as_gray().crop(rect.x, rect.y, rect.w, rect.h)?;
    let side = rect.w.max(rect.h);
    let square = cropped.pasted_on(
        side,
        side,
        (side - rect.w) / 2,
        (side - rect.h) / 2,
        BinaryImage::BACKGROUND,
    )?;
    let inner = size - 2 * margin;
    let scaled = resize_nearest(&square, inner, inner)?;
    let framed = scaled.pasted_on(size, size, margin, margin, BinaryImage::BACKGROUND)?;
    Ok(BinaryImage::from_gray_unchecked(framed))
}

/// Runs every stage and keeps the intermediates, even when the image turns
/// out blank (then `crop` and `output` are `None`).
pub fn run_stages(img: &AnyImage, cfg: &PipelineConfig) -> Result<StageTrace, PipelineError> {
    cfg.validate()?;
    let resized = resize_any(img, cfg.target_size)?;
    let gray = match &resized {
        AnyImage::Gray(g) => g.clone(),
        AnyImage::Rgb(c) => to_grayscale(c),
    };
    let blurred = median_blur(&gray, cfg.median_k)?;

    let spots = if cfg.spot_removal_enabled {
        detect_quad_spots(&blurred, &cfg.spot_criteria)
    } else {
        Vec::new()
    };
    let mut despotted = blurred.clone();
    for spot in &spots {
        despotted = fill_contour(&despotted, spot, 255)?;
    }

    let level = match cfg.threshold_mode {
        ThresholdMode::Fixed => cfg.fixed_level,
        // A flat image has nothing to separate; any level yields one class.
        ThresholdMode::Otsu => match otsu_threshold(&histogram(&despotted)) {
            Ok(t) => t.saturating_add(1),
            Err(BinarizeError::DegenerateHistogram) => cfg.fixed_level,
        },
    };
    let (binary, threshold) = polarity_binarize(&despotted, level);

    let (crop, output) = match largest_contour_bbox(&binary) {
        Ok(rect) => {
            let framed = frame_digit(&binary, rect, cfg.target_size, cfg.crop_margin)?;
            (Some(rect), Some(framed))
        }
        Err(ContourError::NoForeground) => (None, None),
        Err(e) => return Err(e.into()),
    };

    Ok(StageTrace {
        resized,
        gray,
        blurred,
        despotted,
        spots,
        threshold,
        binary,
        crop,
        output,
    })
}

/// Cleans one image into a `target_size`² binary digit (background 0,
/// foreground 255).
pub fn preprocess(
    img: &AnyImage,
    cfg: &PipelineConfig,
) -> Result<(BinaryImage, StageTrace), PipelineError> {
    let trace = run_stages(img, cfg)?;
    match trace.output.clone() {
        Some(out) => Ok((out, trace)),
        None => Err(PipelineError::BlankImage),
    }
}

/// Order-preserving, per-item independent batch run.
pub fn preprocess_batch(
    inputs: &[AnyImage],
    cfg: &PipelineConfig,
) -> Vec<Result<BinaryImage, PipelineError>> {
    inputs
        .par_iter()
        .map(|img| preprocess(img, cfg).map(|(out, _)| out))
        .collect()
}

/// Comparison pathway: resize and grayscale only.
pub fn raw_baseline(img: &AnyImage, cfg: &PipelineConfig) -> Result<GrayImage, PipelineError> {
    let size = cfg.target_size;
    Ok(match img {
        AnyImage::Gray(g) => resize(g, size, size)?,
        AnyImage::Rgb(c) => to_grayscale(&c.resize(size, size)?),
    })
}
