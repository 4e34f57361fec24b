//! Row-major 8-bit raster buffers and the resize / grayscale / median stages.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RasterError {
    #[error("image dimensions must be at least 1x1 (got {width}x{height})")]
    ZeroDimension { width: usize, height: usize },
    #[error("buffer holds {actual} bytes, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("median window must be odd (got {0})")]
    EvenKernel(usize),
    #[error("median window {k} exceeds the smaller image side {side}")]
    KernelTooLarge { k: usize, side: usize },
    #[error("crop {x},{y} {w}x{h} lies outside a {width}x{height} image")]
    CropOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },
}

fn check_dims(width: usize, height: usize) -> Result<(), RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::ZeroDimension { width, height });
    }
    Ok(())
}

/// Single-channel 8-bit image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(RasterError::BufferSize {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, RasterError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, RasterError> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    /// Pixel-wise `255 - p`.
    pub fn inverted(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&p| 255 - p).collect(),
        }
    }

    /// True when every pixel is 0 or 255.
    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&p| p == 0 || p == 255)
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Self, RasterError> {
        check_dims(w, h)?;
        if x + w > self.width || y + h > self.height {
            return Err(RasterError::CropOutOfBounds {
                x,
                y,
                w,
                h,
                width: self.width,
                height: self.height,
            });
        }
        Self::from_fn(w, h, |cx, cy| self.get(x + cx, y + cy))
    }

    /// Places `self` at (`x`, `y`) on a `width`×`height` canvas filled with `fill`.
    pub fn pasted_on(
        &self,
        width: usize,
        height: usize,
        x: usize,
        y: usize,
        fill: u8,
    ) -> Result<Self, RasterError> {
        let mut out = Self::filled(width, height, fill)?;
        for sy in 0..self.height {
            for sx in 0..self.width {
                let (tx, ty) = (x + sx, y + sy);
                if tx < width && ty < height {
                    out.set(tx, ty, self.get(sx, sy));
                }
            }
        }
        Ok(out)
    }
}

/// A [`GrayImage`] whose pixels are all 0 (background) or 255 (foreground).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage(GrayImage);

impl BinaryImage {
    pub const BACKGROUND: u8 = 0;
    pub const FOREGROUND: u8 = 255;

    /// Returns `None` if any pixel is outside {0, 255}.
    pub fn from_gray(img: GrayImage) -> Option<Self> {
        img.is_binary().then_some(Self(img))
    }

    /// Builds a mask from a per-pixel predicate (true = foreground).
    pub fn from_mask(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, RasterError> {
        GrayImage::from_fn(width, height, |x, y| {
            if f(x, y) {
                Self::FOREGROUND
            } else {
                Self::BACKGROUND
            }
        })
        .map(Self)
    }

    pub(crate) fn from_gray_unchecked(img: GrayImage) -> Self {
        debug_assert!(img.is_binary());
        Self(img)
    }

    pub fn as_gray(&self) -> &GrayImage {
        &self.0
    }

    pub fn into_gray(self) -> GrayImage {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    #[inline]
    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.0.get(x, y) == Self::FOREGROUND
    }

    pub fn foreground_count(&self) -> usize {
        self.0
            .data
            .iter()
            .filter(|&&p| p == Self::FOREGROUND)
            .count()
    }
}

/// Three-channel 8-bit image, row-major interleaved RGB.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, RasterError> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(RasterError::BufferSize {
                expected: width * height * 3,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn inverted(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&p| 255 - p).collect(),
        }
    }

    /// Bilinear resize applied to each channel independently.
    pub fn resize(&self, out_w: usize, out_h: usize) -> Result<Self, RasterError> {
        check_dims(out_w, out_h)?;
        let planes: Vec<GrayImage> = (0..3)
            .map(|c| {
                let plane = self.data.iter().skip(c).step_by(3).copied().collect();
                GrayImage::new(self.width, self.height, plane)
                    .and_then(|p| resize(&p, out_w, out_h))
            })
            .collect::<Result<_, _>>()?;
        let mut data = Vec::with_capacity(out_w * out_h * 3);
        for i in 0..out_w * out_h {
            data.extend(planes.iter().map(|p| p.data[i]));
        }
        Self::new(out_w, out_h, data)
    }
}

/// Either raster kind accepted at the pipeline entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AnyImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl AnyImage {
    pub fn width(&self) -> usize {
        match self {
            AnyImage::Gray(g) => g.width(),
            AnyImage::Rgb(c) => c.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            AnyImage::Gray(g) => g.height(),
            AnyImage::Rgb(c) => c.height(),
        }
    }

    pub fn inverted(&self) -> Self {
        match self {
            AnyImage::Gray(g) => AnyImage::Gray(g.inverted()),
            AnyImage::Rgb(c) => AnyImage::Rgb(c.inverted()),
        }
    }

    pub fn to_gray(&self) -> GrayImage {
        match self {
            AnyImage::Gray(g) => g.clone(),
            AnyImage::Rgb(c) => to_grayscale(c),
        }
    }
}

impl From<GrayImage> for AnyImage {
    fn from(img: GrayImage) -> Self {
        AnyImage::Gray(img)
    }
}

impl From<RgbImage> for AnyImage {
    fn from(img: RgbImage) -> Self {
        AnyImage::Rgb(img)
    }
}

/// BT.601 luma in integer thousandths, rounded half up (all terms are
/// non-negative, so this is round-half-away-from-zero).
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| {
            let weighted = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
            ((weighted + 500) / 1000).min(255) as u8
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Source coordinate for output index `dst` under pixel-center alignment.
#[inline]
fn source_coord(dst: usize, in_len: usize, out_len: usize) -> f64 {
    let scale = in_len as f64 / out_len as f64;
    ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64)
}

fn round_to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinear resize with pixel-center mapping and clamped source coordinates.
pub fn resize(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage, RasterError> {
    check_dims(out_w, out_h)?;
    if out_w == img.width && out_h == img.height {
        return Ok(img.clone());
    }
    let xs: Vec<(usize, usize, f64)> = (0..out_w)
        .map(|dx| {
            let sx = source_coord(dx, img.width, out_w);
            let x0 = sx.floor() as usize;
            (x0, (x0 + 1).min(img.width - 1), sx - x0 as f64)
        })
        .collect();
    let mut data = Vec::with_capacity(out_w * out_h);
    for dy in 0..out_h {
        let sy = source_coord(dy, img.height, out_h);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let fy = sy - y0 as f64;
        for &(x0, x1, fx) in &xs {
            let top = img.get(x0, y0) as f64 * (1.0 - fx) + img.get(x1, y0) as f64 * fx;
            let bottom = img.get(x0, y1) as f64 * (1.0 - fx) + img.get(x1, y1) as f64 * fx;
            data.push(round_to_u8(top * (1.0 - fy) + bottom * fy));
        }
    }
    GrayImage::new(out_w, out_h, data)
}

/// Nearest-neighbour resize with the same pixel-center mapping as [`resize`].
/// Output values are a subset of the input values.
pub fn resize_nearest(
    img: &GrayImage,
    out_w: usize,
    out_h: usize,
) -> Result<GrayImage, RasterError> {
    check_dims(out_w, out_h)?;
    let nearest = |dst, in_len, out_len| {
        (source_coord(dst, in_len, out_len).round() as usize).min(in_len - 1)
    };
    let xs: Vec<usize> = (0..out_w).map(|dx| nearest(dx, img.width, out_w)).collect();
    let mut data = Vec::with_capacity(out_w * out_h);
    for dy in 0..out_h {
        let sy = nearest(dy, img.height, out_h);
        data.extend(xs.iter().map(|&sx| img.get(sx, sy)));
    }
    GrayImage::new(out_w, out_h, data)
}

/// k×k median filter with edge replication.
///
/// Runs a sliding 256-bin histogram along each row, so the per-pixel cost is
/// O(k) updates plus a bounded bin walk rather than a sort of k² values.
pub fn median_blur(img: &GrayImage, k: usize) -> Result<GrayImage, RasterError> {
    if k.is_multiple_of(2) {
        return Err(RasterError::EvenKernel(k));
    }
    let side = img.width.min(img.height);
    if k > side {
        return Err(RasterError::KernelTooLarge { k, side });
    }
    if k == 1 {
        return Ok(img.clone());
    }
    let r = (k / 2) as isize;
    let (w, h) = (img.width as isize, img.height as isize);
    let at = |x: isize, y: isize| img.get(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize);
    // 1-based rank of the median among k² samples.
    let rank = (k * k / 2 + 1) as u32;
    let mut data = vec![0u8; img.width * img.height];

    for y in 0..h {
        let mut hist = [0u32; 256];
        for dy in -r..=r {
            for dx in -r..=r {
                hist[at(dx, y + dy) as usize] += 1;
            }
        }
        for x in 0..w {
            if x > 0 {
                for dy in -r..=r {
                    hist[at(x - r - 1, y + dy) as usize] -= 1;
                    hist[at(x + r, y + dy) as usize] += 1;
                }
            }
            let mut seen = 0u32;
            let mut median = 255u8;
            for (v, &c) in hist.iter().enumerate() {
                seen += c;
                if seen >= rank {
                    median = v as u8;
                    break;
                }
            }
            data[(y * w + x) as usize] = median;
        }
    }
    GrayImage::new(img.width, img.height, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gray(w: usize, h: usize, data: &[u8]) -> GrayImage {
        GrayImage::new(w, h, data.to_vec()).unwrap()
    }

    fn rgb_pixel(r: u8, g: u8, b: u8) -> u8 {
        to_grayscale(&RgbImage::new(1, 1, vec![r, g, b]).unwrap()).get(0, 0)
    }

    /// Sorts every clamped k×k window explicitly.
    fn naive_median(img: &GrayImage, k: usize) -> GrayImage {
        let r = (k / 2) as isize;
        let (w, h) = (img.width() as isize, img.height() as isize);
        GrayImage::from_fn(img.width(), img.height(), |x, y| {
            let mut window = Vec::with_capacity(k * k);
            for dy in -r..=r {
                for dx in -r..=r {
                    let sx = (x as isize + dx).clamp(0, w - 1) as usize;
                    let sy = (y as isize + dy).clamp(0, h - 1) as usize;
                    window.push(img.get(sx, sy));
                }
            }
            window.sort_unstable();
            window[window.len() / 2]
        })
        .unwrap()
    }

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |_, _| rng.gen()).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_buffers() {
        assert!(matches!(
            GrayImage::new(0, 3, vec![]),
            Err(RasterError::ZeroDimension { .. })
        ));
        assert!(matches!(
            GrayImage::new(2, 2, vec![0; 3]),
            Err(RasterError::BufferSize {
                expected: 4,
                actual: 3
            })
        ));
        assert!(RgbImage::new(2, 1, vec![0; 5]).is_err());
    }

    #[test]
    fn grayscale_examples() {
        for v in [0u8, 1, 17, 127, 128, 200, 255] {
            assert_eq!(rgb_pixel(v, v, v), v);
        }
        // 0.299 * 255 = 76.245
        assert_eq!(rgb_pixel(255, 0, 0), 76);
        assert_eq!(rgb_pixel(0, 0, 0), 0);
        // 0.587 * 255 = 149.685, 0.114 * 255 = 29.07
        assert_eq!(rgb_pixel(0, 255, 0), 150);
        assert_eq!(rgb_pixel(0, 0, 255), 29);
    }

    #[test]
    fn grayscale_keeps_dimensions() {
        let img = RgbImage::new(3, 2, (0..18).collect()).unwrap();
        let g = to_grayscale(&img);
        assert_eq!((g.width(), g.height()), (3, 2));
    }

    #[test]
    fn resize_identity_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(&mut rng, 9, 5);
        assert_eq!(resize(&img, 9, 5).unwrap(), img);
        assert_eq!(resize_nearest(&img, 9, 5).unwrap(), img);

        let flat = GrayImage::filled(13, 7, 93).unwrap();
        for (w, h) in [(1, 1), (28, 28), (5, 40), (64, 3)] {
            let out = resize(&flat, w, h).unwrap();
            assert_eq!((out.width(), out.height()), (w, h));
            assert!(out.data().iter().all(|&p| p == 93));
        }
    }

    #[test]
    fn resize_two_pixels_to_four() {
        // scale 0.5: sources -0.25 (clamped 0), 0.25, 0.75, 1.25 (clamped 1)
        // -> 0, 63.75, 191.25, 255
        let img = gray(2, 1, &[0, 255]);
        assert_eq!(resize(&img, 4, 1).unwrap().data(), &[0, 64, 191, 255]);
    }

    #[test]
    fn resize_rejects_zero_target() {
        let img = gray(2, 1, &[0, 255]);
        assert!(matches!(
            resize(&img, 0, 3),
            Err(RasterError::ZeroDimension { .. })
        ));
        assert!(matches!(
            resize_nearest(&img, 3, 0),
            Err(RasterError::ZeroDimension { .. })
        ));
    }

    #[test]
    fn nearest_checkerboard_replicates_blocks() {
        // sources per output index: -0.25, 0.25, 0.75, 1.25 -> 0, 0, 1, 1
        let img = gray(2, 2, &[0, 255, 255, 0]);
        let out = resize_nearest(&img, 4, 4).unwrap();
        #[rustfmt::skip]
        let expected = [
            0, 0, 255, 255,
            0, 0, 255, 255,
            255, 255, 0, 0,
            255, 255, 0, 0,
        ];
        assert_eq!(out.data(), &expected);
    }

    #[test]
    fn median_examples() {
        let flat = GrayImage::filled(6, 6, 41).unwrap();
        for k in [1, 3, 5] {
            assert_eq!(median_blur(&flat, k).unwrap(), flat);
        }
        let mut spike = GrayImage::filled(5, 5, 0).unwrap();
        spike.set(2, 2, 255);
        assert!(median_blur(&spike, 3)
            .unwrap()
            .data()
            .iter()
            .all(|&p| p == 0));
    }

    #[test]
    fn median_rejects_bad_kernels() {
        let img = GrayImage::filled(4, 6, 0).unwrap();
        assert_eq!(median_blur(&img, 2), Err(RasterError::EvenKernel(2)));
        assert_eq!(
            median_blur(&img, 5),
            Err(RasterError::KernelTooLarge { k: 5, side: 4 })
        );
    }

    #[test]
    fn median_matches_sorting_oracle_on_random_7x7() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = random_image(&mut rng, 7, 7);
        assert_eq!(median_blur(&img, 3).unwrap(), naive_median(&img, 3));
    }

    #[test]
    fn median_matches_sorting_oracle_on_200_images() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d656469616e);
        for _ in 0..200 {
            let w = rng.gen_range(5..=32);
            let h = rng.gen_range(5..=32);
            let k = if rng.gen_bool(0.5) { 3 } else { 5 };
            let img = random_image(&mut rng, w, h);
            assert_eq!(median_blur(&img, k).unwrap(), naive_median(&img, k));
        }
    }

    fn arb_image() -> impl Strategy<Value = GrayImage> {
        (5usize..20, 5usize..20).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h)
                .prop_map(move |data| GrayImage::new(w, h, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn median_commutes_with_inversion(img in arb_image(), k in prop::sample::select(vec![1usize, 3, 5])) {
            prop_assert_eq!(
                median_blur(&img.inverted(), k).unwrap(),
                median_blur(&img, k).unwrap().inverted()
            );
        }

        #[test]
        fn nearest_keeps_binary(bits in proptest::collection::vec(any::<bool>(), 36), w in 1usize..50, h in 1usize..50) {
            let img = GrayImage::new(6, 6, bits.iter().map(|&b| if b { 255 } else { 0 }).collect()).unwrap();
            let out = resize_nearest(&img, w, h).unwrap();
            prop_assert_eq!((out.width(), out.height()), (w, h));
            prop_assert!(out.is_binary());
        }
    }
}
