//! Suzuki–Abe border following over an 8-connected foreground.
//!
//! Hole borders are followed so their pixels get marked (otherwise the right
//! rim of a hole would look like a fresh outer border), but only outer borders
//! are returned.

use super::{Contour, Point};
use crate::raster::BinaryImage;

/// Neighbour offsets (dx, dy), counter-clockwise on screen starting east.
const DIRS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];
const EAST: usize = 0;
const WEST: usize = 4;

struct Labels {
    stride: isize,
    cells: Vec<i32>,
}

impl Labels {
    fn new(img: &BinaryImage) -> Self {
        let stride = img.width() + 2;
        let mut cells = vec![0i32; stride * (img.height() + 2)];
        for y in 0..img.height() {
            for x in 0..img.width() {
                if img.is_foreground(x, y) {
                    cells[(y + 1) * stride + x + 1] = 1;
                }
            }
        }
        Self {
            stride: stride as isize,
            cells,
        }
    }

    #[inline]
    fn step(&self, at: isize, dir: usize) -> isize {
        let (dx, dy) = DIRS[dir];
        at + dy * self.stride + dx
    }

    fn dir_between(&self, from: isize, to: isize) -> usize {
        (0..8)
            .find(|&d| self.step(from, d) == to)
            .expect("border pixels are 8-neighbours")
    }

    fn point(&self, at: isize) -> Point {
        Point::new((at % self.stride) as i32 - 1, (at / self.stride) as i32 - 1)
    }

    /// Follows one border from `start`, whose zero neighbour lies in `from_dir`.
    fn follow(&mut self, start: isize, from_dir: usize, nbd: i32) -> Vec<Point> {
        let first = (0..8)
            .map(|k| (from_dir + 8 - k) % 8)
            .map(|d| self.step(start, d))
            .find(|&q| self.cells[q as usize] != 0);
        let Some(first) = first else {
            self.cells[start as usize] = -nbd;
            return vec![self.point(start)];
        };

        let mut points = Vec::new();
        let (mut prev, mut cur) = (first, start);
        loop {
            let back = self.dir_between(cur, prev);
            let mut east_clear = false;
            let mut next = cur;
            for k in 1..=8 {
                let d = (back + k) % 8;
                let q = self.step(cur, d);
                if self.cells[q as usize] != 0 {
                    next = q;
                    break;
                }
                if d == EAST {
                    east_clear = true;
                }
            }
            let cell = &mut self.cells[cur as usize];
            if east_clear {
                *cell = -nbd;
            } else if *cell == 1 {
                *cell = nbd;
            }
            points.push(self.point(cur));
            if next == start && cur == first {
                break;
            }
            prev = cur;
            cur = next;
        }
        points
    }
}

/// Outer borders of every 8-connected foreground component, in raster-scan
/// discovery order.
pub fn find_contours(img: &BinaryImage) -> Vec<Contour> {
    let mut labels = Labels::new(img);
    let mut contours = Vec::new();
    let mut nbd = 1;
    for y in 1..=img.height() as isize {
        for x in 1..=img.width() as isize {
            let at = y * labels.stride + x;
            let v = labels.cells[at as usize];
            if v == 0 {
                continue;
            }
            let outer = v == 1 && labels.cells[at as usize - 1] == 0;
            let hole = !outer && v >= 1 && labels.cells[at as usize + 1] == 0;
            if !outer && !hole {
                continue;
            }
            nbd += 1;
            let points = labels.follow(at, if outer { WEST } else { EAST }, nbd);
            if outer {
                contours.push(Contour::from_points(points));
            }
        }
    }
    contours
}
