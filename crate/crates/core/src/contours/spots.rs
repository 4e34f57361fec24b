use super::{
    approx_polygon, bounding_box, contour_area, contour_perimeter, convex_hull, fill_mask,
    find_contours, polygon_area, Contour, ContourError, Rect,
};
use crate::raster::{BinaryImage, GrayImage};

/// Pixels darker than this form the temporary mask searched for spots.
pub const DARK_LEVEL: u8 = 127;

/// Acceptance window for a dark blob to count as a quadrilateral spot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpotCriteria {
    pub min_vertices: usize,
    pub max_vertices: usize,
    /// Contour area over convex hull area.
    pub min_solidity: f64,
    /// Dark pixels over all pixels enclosed by the contour. Rejects rings,
    /// whose outer border alone looks solid.
    pub min_fill_ratio: f64,
    pub min_area_frac: f64,
    pub max_area_frac: f64,
    /// Douglas–Peucker tolerance as a fraction of the contour perimeter.
    pub dp_epsilon_frac: f64,
}

impl Default for SpotCriteria {
    fn default() -> Self {
        Self {
            min_vertices: 4,
            max_vertices: 8,
            min_solidity: 0.90,
            min_fill_ratio: 0.90,
            min_area_frac: 0.01,
            max_area_frac: 0.50,
            dp_epsilon_frac: 0.02,
        }
    }
}

impl SpotCriteria {
    pub fn validate(&self) -> Result<(), ContourError> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !(self.min_area_frac > 0.0
            && self.min_area_frac < self.max_area_frac
            && self.max_area_frac <= 1.0)
        {
            return Err(ContourError::InvalidCriteria(
                "need 0 < min_area_frac < max_area_frac <= 1",
            ));
        }
        if !unit(self.min_solidity) {
            return Err(ContourError::InvalidCriteria("need 0 < min_solidity <= 1"));
        }
        if !unit(self.min_fill_ratio) {
            return Err(ContourError::InvalidCriteria(
                "need 0 < min_fill_ratio <= 1",
            ));
        }
        if self.min_vertices > self.max_vertices {
            return Err(ContourError::InvalidCriteria(
                "need min_vertices <= max_vertices",
            ));
        }
        if !(self.dp_epsilon_frac >= 0.0 && self.dp_epsilon_frac.is_finite()) {
            return Err(ContourError::InvalidCriteria("need dp_epsilon_frac >= 0"));
        }
        Ok(())
    }

    pub fn accepts(&self, m: &SpotMeasures) -> bool {
        (self.min_vertices..=self.max_vertices).contains(&m.vertices)
            && m.solidity >= self.min_solidity
            && m.fill_ratio >= self.min_fill_ratio
            && m.area_frac >= self.min_area_frac
            && m.area_frac <= self.max_area_frac
    }
}

/// Shape statistics of one dark-mask contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpotMeasures {
    pub vertices: usize,
    pub solidity: f64,
    pub fill_ratio: f64,
    /// Enclosed pixel count over the frame's pixel count.
    pub area_frac: f64,
}

impl SpotMeasures {
    pub fn measure(c: &Contour, mask: &BinaryImage, epsilon_frac: f64) -> Self {
        let (w, h) = (mask.width(), mask.height());
        let vertices = approx_polygon(c, epsilon_frac * contour_perimeter(c)).len();
        let hull = polygon_area(&convex_hull(c.points()));
        let solidity = if hull > 0.0 {
            contour_area(c) / hull
        } else {
            0.0
        };
        let region = fill_mask(c, w, h).expect("traced contours lie inside their image");
        let enclosed = region.iter().filter(|&&r| r).count();
        let dark = region
            .iter()
            .enumerate()
            .filter(|&(i, &r)| r && mask.is_foreground(i % w, i / w))
            .count();
        Self {
            vertices,
            solidity,
            fill_ratio: dark as f64 / enclosed as f64,
            area_frac: enclosed as f64 / (w * h) as f64,
        }
    }
}

fn dark_mask(img: &GrayImage) -> BinaryImage {
    BinaryImage::from_mask(img.width(), img.height(), |x, y| img.get(x, y) < DARK_LEVEL)
        .expect("same dimensions as a valid image")
}

/// Dark, solid, roughly quadrilateral blobs of a pre-threshold image.
pub fn detect_quad_spots(img: &GrayImage, criteria: &SpotCriteria) -> Vec<Contour> {
    let mask = dark_mask(img);
    find_contours(&mask)
        .into_iter()
        .filter(|c| criteria.accepts(&SpotMeasures::measure(c, &mask, criteria.dp_epsilon_frac)))
        .collect()
}

/// Copy of `img` with every pixel inside or on the contour set to `value`.
pub fn fill_contour(img: &GrayImage, c: &Contour, value: u8) -> Result<GrayImage, ContourError> {
    let region = fill_mask(c, img.width(), img.height())?;
    let mut out = img.clone();
    for (i, _) in region.iter().enumerate().filter(|(_, &r)| r) {
        out.set(i % img.width(), i / img.width(), value);
    }
    Ok(out)
}

/// Bounding box of the contour with the largest area; the earliest
/// discovered contour wins ties.
pub fn largest_contour_bbox(img: &BinaryImage) -> Result<Rect, ContourError> {
    let mut best: Option<(f64, Contour)> = None;
    for c in find_contours(img) {
        let area = contour_area(&c);
        if best.as_ref().is_none_or(|(a, _)| area > *a) {
            best = Some((area, c));
        }
    }
    let (_, c) = best.ok_or(ContourError::NoForeground)?;
    bounding_box(&c)
}
