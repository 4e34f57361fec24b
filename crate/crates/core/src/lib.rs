//! Handwritten digit pre-processing toolkit.
//!
//! The cleaning pipeline runs a fixed sequence of stages over each image:
//! resize -> grayscale -> median blur -> quadrilateral spot removal ->
//! polarity binarization -> largest-contour crop. The result is a square
//! white-on-black binary digit. Alongside it live a PGM/CSV corpus layer, a
//! synthetic noisy-digit generator, and from-scratch classifiers used to
//! compare raw and cleaned inputs.

pub mod binarize;
pub mod contours;
pub mod dataset;
pub mod learners;
pub mod pipeline;
pub mod raster;

pub use raster::{AnyImage, BinaryImage, GrayImage, RasterError, RgbImage};
