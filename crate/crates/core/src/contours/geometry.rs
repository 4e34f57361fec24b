use super::{Contour, ContourError, Point, Rect};

fn shoelace_twice(points: &[Point]) -> i64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (p, q) = (points[i], points[(i + 1) % n]);
            p.x as i64 * q.y as i64 - q.x as i64 * p.y as i64
        })
        .sum()
}

/// Absolute shoelace area of the closed point sequence.
pub fn contour_area(c: &Contour) -> f64 {
    polygon_area(c.points())
}

pub fn polygon_area(points: &[Point]) -> f64 {
    shoelace_twice(points).unsigned_abs() as f64 / 2.0
}

/// Closed path length, diagonal steps counting √2.
pub fn contour_perimeter(c: &Contour) -> f64 {
    let pts = c.points();
    let n = pts.len();
    if n < 2 {
        return 0.0;
    }
    (0..n).map(|i| pts[i].distance(pts[(i + 1) % n])).sum()
}

pub fn bounding_box(c: &Contour) -> Result<Rect, ContourError> {
    let pts = c.points();
    let first = pts.first().ok_or(ContourError::EmptyContour)?;
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    Ok(Rect {
        x: x0 as usize,
        y: y0 as usize,
        w: (x1 - x0 + 1) as usize,
        h: (y1 - y0 + 1) as usize,
    })
}

fn chord_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = ((b.x - a.x) as f64, (b.y - a.y) as f64);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return p.distance(a);
    }
    ((p.x - a.x) as f64 * dy - (p.y - a.y) as f64 * dx).abs() / len
}

/// Douglas–Peucker over `chain[lo..=hi]`, marking kept entries.
fn simplify_chain(chain: &[Point], epsilon: f64, keep: &mut [bool]) {
    let mut stack = vec![(0usize, chain.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (mut far, mut far_dist) = (lo, -1.0);
        for i in lo + 1..hi {
            let d = chord_distance(chain[i], chain[lo], chain[hi]);
            if d > far_dist {
                far = i;
                far_dist = d;
            }
        }
        if far_dist > epsilon {
            keep[far] = true;
            stack.push((lo, far));
            stack.push((far, hi));
        }
    }
}

/// Douglas–Peucker simplification of the closed contour.
///
/// The loop is cut at its two mutually farthest points (first pair in index
/// order on ties); each half is simplified independently and the result is
/// returned starting from the first cut point.
pub fn approx_polygon(c: &Contour, epsilon: f64) -> Vec<Point> {
    let pts = c.points();
    let n = pts.len();
    if n <= 2 {
        return pts.to_vec();
    }
    let (mut a, mut b, mut best) = (0, 0, -1i64);
    for i in 0..n {
        for j in i + 1..n {
            let d = pts[i].distance_sq(pts[j]);
            if d > best {
                (a, b, best) = (i, j, d);
            }
        }
    }
    if best == 0 {
        return vec![pts[0]];
    }

    // Unrolled loop a..=b..=a+n so both halves are contiguous.
    let unrolled: Vec<Point> = (a..=a + n).map(|i| pts[i % n]).collect();
    let cut = b - a;
    let mut keep = vec![false; unrolled.len()];
    keep[0] = true;
    keep[cut] = true;
    simplify_chain(&unrolled[..=cut], epsilon, &mut keep[..=cut]);
    simplify_chain(&unrolled[cut..], epsilon, &mut keep[cut..]);
    unrolled[..n]
        .iter()
        .zip(&keep[..n])
        .filter_map(|(p, &k)| k.then_some(*p))
        .collect()
}

fn cross(o: Point, a: Point, b: Point) -> i64 {
    (a.x - o.x) as i64 * (b.y - o.y) as i64 - (a.y - o.y) as i64 * (b.x - o.x) as i64
}

/// Convex hull by monotone chain; collinear points are dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_unstable_by_key(|p| (p.x, p.y));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in [pts.clone(), pts.iter().rev().copied().collect()] {
        let base = hull.len();
        for p in pass {
            while hull.len() >= base + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Contour area over convex-hull area; 0 for degenerate (zero-area) hulls.
pub fn solidity(c: &Contour) -> f64 {
    let hull = polygon_area(&convex_hull(c.points()));
    if hull == 0.0 {
        0.0
    } else {
        contour_area(c) / hull
    }
}

/// Pixels inside or on the closed polygon through the contour points, as a
/// row-major `width`×`height` mask. Interior spans come from an even-odd
/// scanline pass with half-open edge rules; every contour point is set too.
pub fn fill_mask(c: &Contour, width: usize, height: usize) -> Result<Vec<bool>, ContourError> {
    let pts = c.points();
    if let Some(p) = pts
        .iter()
        .find(|p| p.x < 0 || p.y < 0 || p.x as usize >= width || p.y as usize >= height)
    {
        return Err(ContourError::OutOfBounds {
            x: p.x,
            y: p.y,
            width,
            height,
        });
    }
    let mut mask = vec![false; width * height];
    for p in pts {
        mask[p.y as usize * width + p.x as usize] = true;
    }
    let n = pts.len();
    if n < 3 {
        return Ok(mask);
    }
    let y_min = pts.iter().map(|p| p.y).min().unwrap_or(0);
    let y_max = pts.iter().map(|p| p.y).max().unwrap_or(0);
    let mut crossings = Vec::new();
    for y in y_min..=y_max {
        crossings.clear();
        for i in 0..n {
            let (p, q) = (pts[i], pts[(i + 1) % n]);
            if p.y == q.y || y < p.y.min(q.y) || y >= p.y.max(q.y) {
                continue;
            }
            let t = (y - p.y) as f64 / (q.y - p.y) as f64;
            crossings.push(p.x as f64 + t * (q.x - p.x) as f64);
        }
        crossings.sort_by(f64::total_cmp);
        for span in crossings.chunks_exact(2) {
            let lo = span[0].ceil().max(0.0) as usize;
            let hi = (span[1].floor() as i64).min(width as i64 - 1);
            for x in lo as i64..=hi {
                mask[y as usize * width + x as usize] = true;
            }
        }
    }
    Ok(mask)
}
