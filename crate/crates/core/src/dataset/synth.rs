//! Deterministic synthetic stand-in for a noisy handwritten-digit corpus.
//!
//! Each image is one of ten fixed stroke glyphs rendered at 64×64 in a random
//! writer style (vertex wobble, slant, size, position), then optionally corrupted: gridlines, global inversion,
//! one dark quadrilateral spot, and salt-and-pepper noise. Every random draw
//! comes from a stream keyed by (seed, index, corruption kind), so toggling
//! one corruption leaves the others unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LabeledDataset, LabeledItem};
use crate::raster::{BinaryImage, GrayImage};

pub const SYNTH_SIZE: usize = 64;

/// (ink, paper) levels. For each pair no 2×2 bilinear blend at the 64→28
/// resize rounds to 127 or 128, before or after inversion.
pub const PALETTES: [(u8, u8); 4] = [(25, 225), (10, 240), (40, 210), (15, 250)];

const GLYPH_BOX: f64 = 36.0;
const SPOT_HALF: std::ops::Range<f64> = 9.0..13.0;
const SPOT_TILT: f64 = 0.1;
const SPOT_SKEW: f64 = 0.1;

type Stroke = &'static [(f64, f64)];

/// Polyline approximations of the ten Bengali digit shapes, unit box.
const GLYPHS: [&[Stroke]; 10] = [
    // ০
    &[&[
        (0.50, 0.08),
        (0.70, 0.14),
        (0.80, 0.32),
        (0.82, 0.50),
        (0.80, 0.68),
        (0.70, 0.86),
        (0.50, 0.92),
        (0.30, 0.86),
        (0.20, 0.68),
        (0.18, 0.50),
        (0.20, 0.32),
        (0.30, 0.14),
        (0.50, 0.08),
    ]],
    // ১
    &[&[
        (0.58, 0.36),
        (0.38, 0.16),
        (0.18, 0.32),
        (0.34, 0.50),
        (0.62, 0.44),
        (0.80, 0.62),
        (0.72, 0.86),
        (0.52, 0.96),
    ]],
    // ২
    &[&[
        (0.18, 0.26),
        (0.44, 0.08),
        (0.76, 0.22),
        (0.62, 0.50),
        (0.30, 0.70),
        (0.24, 0.90),
        (0.56, 0.84),
        (0.86, 0.96),
    ]],
    // ৩
    &[&[
        (0.18, 0.20),
        (0.50, 0.06),
        (0.78, 0.24),
        (0.44, 0.46),
        (0.82, 0.66),
        (0.56, 0.92),
        (0.18, 0.80),
    ]],
    // ৪
    &[&[
        (0.50, 0.50),
        (0.26, 0.30),
        (0.50, 0.08),
        (0.74, 0.30),
        (0.50, 0.50),
        (0.20, 0.74),
        (0.50, 0.96),
        (0.80, 0.74),
        (0.50, 0.50),
    ]],
    // ৫
    &[
        &[
            (0.28, 0.06),
            (0.28, 0.52),
            (0.60, 0.34),
            (0.84, 0.56),
            (0.62, 0.92),
            (0.26, 0.82),
        ],
        &[(0.28, 0.06), (0.64, 0.10)],
    ],
    // ৬
    &[&[
        (0.72, 0.12),
        (0.40, 0.08),
        (0.34, 0.30),
        (0.62, 0.44),
        (0.82, 0.66),
        (0.66, 0.92),
        (0.34, 0.92),
        (0.22, 0.70),
        (0.46, 0.58),
    ]],
    // ৭
    &[
        &[(0.16, 0.12), (0.84, 0.12)],
        &[
            (0.66, 0.12),
            (0.28, 0.36),
            (0.44, 0.58),
            (0.78, 0.50),
            (0.58, 0.94),
        ],
    ],
    // ৮
    &[&[(0.14, 0.94), (0.44, 0.10), (0.58, 0.10), (0.86, 0.94)]],
    // ৯
    &[&[
        (0.72, 0.40),
        (0.50, 0.18),
        (0.24, 0.34),
        (0.34, 0.56),
        (0.62, 0.50),
        (0.72, 0.28),
        (0.74, 0.62),
        (0.64, 0.90),
        (0.40, 0.96),
    ]],
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub count: usize,
    pub seed: u64,
    pub salt_pepper_rate: f64,
    pub spot_probability: f64,
    pub invert_probability: f64,
    /// Largest relative shrink of each glyph axis. Position is drawn
    /// uniformly over whatever room the size leaves.
    pub jitter: f64,
    pub grid_lines_probability: f64,
    pub stroke_width: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            count: 100,
            seed: 0,
            salt_pepper_rate: 0.05,
            spot_probability: 0.3,
            invert_probability: 0.3,
            jitter: 0.4,
            grid_lines_probability: 0.1,
            stroke_width: 5.0,
        }
    }
}

impl SynthConfig {
    /// Noise-free settings: no spots, gridlines, inversion or salt-and-pepper.
    pub fn clean(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            salt_pepper_rate: 0.0,
            spot_probability: 0.0,
            invert_probability: 0.0,
            grid_lines_probability: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let probs = [
            ("salt_pepper_rate", self.salt_pepper_rate),
            ("spot_probability", self.spot_probability),
            ("invert_probability", self.invert_probability),
            ("grid_lines_probability", self.grid_lines_probability),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1]"));
            }
        }
        if self.count == 0 {
            return Err("count must be at least 1".into());
        }
        if !(0.0..=0.8).contains(&self.jitter) {
            return Err("jitter must lie in [0, 0.8]".into());
        }
        if !(self.stroke_width > 0.0 && self.stroke_width < 16.0) {
            return Err("stroke_width must lie in (0, 16)".into());
        }
        Ok(())
    }
}

/// Convex quadrilateral in 64×64 pixel coordinates (pixel centres at integers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpotPolygon {
    pub corners: [(f64, f64); 4],
}

impl SpotPolygon {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut sign = 0.0f64;
        for i in 0..4 {
            let (ax, ay) = self.corners[i];
            let (bx, by) = self.corners[(i + 1) % 4];
            let cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
            if cross != 0.0 {
                if sign != 0.0 && cross.signum() != sign {
                    return false;
                }
                sign = cross.signum();
            }
        }
        true
    }

    fn to_tag(self) -> String {
        self.corners
            .iter()
            .map(|(x, y)| format!("{x:.3}:{y:.3}"))
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Recovers the polygon from a generator `source_tag`, if it recorded one.
    pub fn from_source_tag(tag: &str) -> Option<Self> {
        let field = tag.split(';').find_map(|kv| kv.strip_prefix("spot="))?;
        let mut corners = [(0.0, 0.0); 4];
        let mut parts = field.split('|');
        for corner in &mut corners {
            let (x, y) = parts.next()?.split_once(':')?;
            *corner = (x.parse().ok()?, y.parse().ok()?);
        }
        parts.next().is_none().then_some(Self { corners })
    }
}

/// Generator-side ground truth for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub label: u8,
    pub ink: u8,
    pub paper: u8,
    pub inverted: bool,
    pub spot: Option<SpotPolygon>,
    /// Glyph strokes before any corruption, 64×64.
    pub glyph: BinaryImage,
}

#[derive(Clone, Copy)]
enum Stream {
    Glyph = 0,
    Grid = 1,
    Invert = 2,
    Spot = 3,
    Noise = 4,
}

fn stream_rng(seed: u64, index: usize, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((index as u64) << 3) | stream as u64);
    rng
}

fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        (((px - a.0) * dx + (py - a.1) * dy) / len_sq).clamp(0.0, 1.0)
    };
    (px - a.0 - t * dx).hypot(py - a.1 - t * dy)
}

/// Margin, in pixels, between the glyph extent and the frame edge.
const FRAME_MARGIN: f64 = 4.0;
const MAX_SHEAR: f64 = 0.15;
const WOBBLE: f64 = 0.03;

/// One writer's rendition of a template: per-vertex wobble, slant, size and
/// position. Shared template vertices move together so loops stay closed.
type Segment = ((f64, f64), (f64, f64));

fn styled_segments(label: u8, rng: &mut ChaCha8Rng, jitter: f64) -> Vec<Segment> {
    let strokes = GLYPHS[label as usize];
    let mut moved: Vec<Segment> = Vec::new();
    let shear = rng.gen_range(-MAX_SHEAR..=MAX_SHEAR);
    let mut styled: Vec<Vec<(f64, f64)>> = Vec::with_capacity(strokes.len());
    for stroke in strokes {
        let mut pts = Vec::with_capacity(stroke.len());
        for &p in stroke.iter() {
            let q = match moved.iter().find(|(orig, _)| *orig == p) {
                Some(&(_, q)) => q,
                None => {
                    let q = (
                        p.0 + rng.gen_range(-WOBBLE..=WOBBLE) + shear * (0.5 - p.1),
                        p.1 + rng.gen_range(-WOBBLE..=WOBBLE),
                    );
                    moved.push((p, q));
                    q
                }
            };
            pts.push(q);
        }
        styled.push(pts);
    }

    let all = styled.iter().flatten();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in all {
        (x0, y0, x1, y1) = (x0.min(x), y0.min(y), x1.max(x), y1.max(y));
    }
    let room = SYNTH_SIZE as f64 - 2.0 * FRAME_MARGIN;
    let mut axis = |lo: f64, hi: f64| {
        let extent = GLYPH_BOX * (1.0 - jitter * rng.gen_range(0.0..=1.0));
        let origin = FRAME_MARGIN + rng.gen_range(0.0..=room - extent);
        let scale = extent / (hi - lo);
        move |v: f64| origin + (v - lo) * scale
    };
    let fx = axis(x0, x1);
    let fy = axis(y0, y1);
    let map = |(u, v): (f64, f64)| (fx(u), fy(v));
    styled
        .iter()
        .flat_map(|pts| {
            pts.windows(2)
                .map(|w| (map(w[0]), map(w[1])))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn render_glyph(segments: &[Segment], stroke_width: f64) -> BinaryImage {
    let radius = stroke_width / 2.0;
    BinaryImage::from_mask(SYNTH_SIZE, SYNTH_SIZE, |x, y| {
        segments
            .iter()
            .any(|&(a, b)| segment_distance(x as f64, y as f64, a, b) <= radius)
    })
    .expect("fixed non-zero size")
}

fn draw_spot(rng: &mut ChaCha8Rng, glyph: &BinaryImage) -> SpotPolygon {
    const CLEARANCE: isize = 5;
    const ATTEMPTS: usize = 200;
    let size = SYNTH_SIZE as f64;
    let mut candidate = None;
    for _ in 0..ATTEMPTS {
        let half = rng.gen_range(SPOT_HALF);
        // Spots may hang partly off the frame, like blemishes at a scan edge.
        let cx = rng.gen_range(0.4 * half..size - 0.4 * half);
        let cy = rng.gen_range(0.4 * half..size - 0.4 * half);
        let angle: f64 = rng.gen_range(-SPOT_TILT..SPOT_TILT);
        let (sin, cos) = angle.sin_cos();
        let mut corners = [(0.0, 0.0); 4];
        for (corner, (sx, sy)) in
            corners
                .iter_mut()
                .zip([(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)])
        {
            let u = sx * half + rng.gen_range(-SPOT_SKEW..SPOT_SKEW) * half;
            let v = sy * half + rng.gen_range(-SPOT_SKEW..SPOT_SKEW) * half;
            *corner = (cx + u * cos - v * sin, cy + u * sin + v * cos);
        }
        let poly = SpotPolygon { corners };
        candidate = Some(poly);
        let clear = (0..SYNTH_SIZE * SYNTH_SIZE).all(|i| {
            let (x, y) = ((i % SYNTH_SIZE) as isize, (i / SYNTH_SIZE) as isize);
            if !poly.contains(x as f64, y as f64) {
                return true;
            }
            (-CLEARANCE..=CLEARANCE).all(|dy| {
                (-CLEARANCE..=CLEARANCE).all(|dx| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx < 0
                        || ny < 0
                        || nx >= SYNTH_SIZE as isize
                        || ny >= SYNTH_SIZE as isize
                        || !glyph.is_foreground(nx as usize, ny as usize)
                })
            })
        });
        if clear {
            break;
        }
    }
    candidate.expect("at least one attempt")
}

fn synthesize(cfg: &SynthConfig, index: usize) -> (GrayImage, SynthTruth) {
    let label = (index % 10) as u8;

    let mut rng = stream_rng(cfg.seed, index, Stream::Glyph);
    let segments = styled_segments(label, &mut rng, cfg.jitter);
    let (ink, paper) = PALETTES[rng.gen_range(0..PALETTES.len())];
    let glyph = render_glyph(&segments, cfg.stroke_width);

    let mut img = GrayImage::filled(SYNTH_SIZE, SYNTH_SIZE, paper).expect("fixed non-zero size");

    let mut rng = stream_rng(cfg.seed, index, Stream::Grid);
    let grid = rng.gen_bool(cfg.grid_lines_probability);
    let spacing = rng.gen_range(8..=14);
    let (off_x, off_y) = (rng.gen_range(0..spacing), rng.gen_range(0..spacing));
    if grid {
        let line = paper.saturating_sub(45);
        for y in 0..SYNTH_SIZE {
            for x in 0..SYNTH_SIZE {
                if (x + off_x) % spacing == 0 || (y + off_y) % spacing == 0 {
                    img.set(x, y, line);
                }
            }
        }
    }
    for y in 0..SYNTH_SIZE {
        for x in 0..SYNTH_SIZE {
            if glyph.is_foreground(x, y) {
                img.set(x, y, ink);
            }
        }
    }

    let inverted = stream_rng(cfg.seed, index, Stream::Invert).gen_bool(cfg.invert_probability);
    if inverted {
        img = img.inverted();
    }

    let mut rng = stream_rng(cfg.seed, index, Stream::Spot);
    let with_spot = rng.gen_bool(cfg.spot_probability);
    let shade = rng.gen_range(0..=40u8);
    let spot = with_spot.then(|| draw_spot(&mut rng, &glyph));
    if let Some(poly) = spot {
        for y in 0..SYNTH_SIZE {
            for x in 0..SYNTH_SIZE {
                if poly.contains(x as f64, y as f64) {
                    img.set(x, y, shade);
                }
            }
        }
    }

    if cfg.salt_pepper_rate > 0.0 {
        let mut rng = stream_rng(cfg.seed, index, Stream::Noise);
        for y in 0..SYNTH_SIZE {
            for x in 0..SYNTH_SIZE {
                if rng.gen_bool(cfg.salt_pepper_rate) {
                    img.set(x, y, if rng.gen_bool(0.5) { 255 } else { 0 });
                }
            }
        }
    }

    let truth = SynthTruth {
        label,
        ink,
        paper,
        inverted,
        spot,
        glyph,
    };
    (img, truth)
}

fn source_tag(cfg: &SynthConfig, index: usize, truth: &SynthTruth) -> String {
    let mut tag = format!(
        "synth;seed={};idx={};inverted={}",
        cfg.seed,
        index,
        u8::from(truth.inverted)
    );
    if let Some(spot) = truth.spot {
        tag.push_str(";spot=");
        tag.push_str(&spot.to_tag());
    }
    tag
}

/// Corpus plus per-item ground truth. Item `i` has label `i % 10`.
pub fn generate_with_truth(cfg: &SynthConfig) -> (LabeledDataset, Vec<SynthTruth>) {
    let mut items = Vec::with_capacity(cfg.count);
    let mut truths = Vec::with_capacity(cfg.count);
    for index in 0..cfg.count {
        let (img, truth) = synthesize(cfg, index);
        items.push(LabeledItem {
            image: img.into(),
            label: truth.label,
            source_tag: source_tag(cfg, index, &truth),
            filename: format!("synth_{index:06}.pgm"),
        });
        truths.push(truth);
    }
    (LabeledDataset { items }, truths)
}

pub fn generate_synthetic(cfg: &SynthConfig) -> LabeledDataset {
    generate_with_truth(cfg).0
}
