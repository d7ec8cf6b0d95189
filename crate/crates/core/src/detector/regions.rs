//! Binary-mask machinery: water labeling, connected components, enclosed
//! blob extraction, proximity merging and the per-column water edge.
//!
//! All connected-component analysis is 8-connected.

use crate::imaging::ImageU8;
use crate::mixture::CategoricalField;
use crate::num::Real;

/// Dense boolean mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// 0 = clear, 255 = set.
    pub fn to_image(&self) -> ImageU8 {
        ImageU8 {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    /// Any nonzero pixel is set.
    pub fn from_image(img: &ImageU8) -> Self {
        debug_assert_eq!(img.channels, 1);
        Self {
            width: img.width,
            height: img.height,
            data: img.data.iter().map(|&v| v > 0).collect(),
        }
    }
}

/// Axis-aligned box in working-resolution pixel coordinates, half-open
/// extents `[x, x+w) x [y, y+h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkingBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl WorkingBox {
    fn union(self, other: Self) -> Self {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        let x2 = (self.x + self.w).max(other.x + other.w);
        let y2 = (self.y + self.h).max(other.y + other.h);
        WorkingBox {
            x,
            y,
            w: x2 - x,
            h: y2 - y,
        }
    }

    /// Distance between closest points of the two boxes (0 when they
    /// overlap or touch).
    fn gap(self, other: Self) -> f64 {
        let gx = axis_gap(self.x, self.w, other.x, other.w);
        let gy = axis_gap(self.y, self.h, other.y, other.h);
        ((gx * gx + gy * gy) as f64).sqrt()
    }
}

fn axis_gap(a: usize, aw: usize, b: usize, bw: usize) -> usize {
    if a + aw <= b {
        b - (a + aw)
    } else if b + bw <= a {
        a - (b + bw)
    } else {
        0
    }
}

/// Label a pixel water when the smoothed posterior is maximal for the
/// water component (class index 0). Ties break toward the lower index,
/// i.e. toward water.
pub fn water_mask_working<T: Real>(smoothed_posteriors: &CategoricalField<T>) -> BinaryMask {
    let mut mask = BinaryMask::new(smoothed_posteriors.width, smoothed_posteriors.height);
    for i in 0..smoothed_posteriors.num_pixels() {
        let px = smoothed_posteriors.pixel(i);
        let mut best = 0;
        for k in 1..px.len() {
            if px[k] > px[best] {
                best = k;
            }
        }
        mask.data[i] = best == 0;
    }
    mask
}

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn flood_fill(
    width: usize,
    height: usize,
    inside: impl Fn(usize) -> bool,
    visited: &mut [bool],
    start: usize,
    stack: &mut Vec<usize>,
) -> (usize, WorkingBox) {
    stack.clear();
    stack.push(start);
    visited[start] = true;
    let (mut minx, mut miny) = (width, height);
    let (mut maxx, mut maxy) = (0usize, 0usize);
    let mut area = 0usize;
    while let Some(i) = stack.pop() {
        area += 1;
        let (x, y) = (i % width, i / width);
        minx = minx.min(x);
        miny = miny.min(y);
        maxx = maxx.max(x);
        maxy = maxy.max(y);
        for (dx, dy) in NEIGHBORS_8 {
            let nx = x as isize + dx;
            let ny = y as isize + dy;
            if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                continue;
            }
            let ni = ny as usize * width + nx as usize;
            if !visited[ni] && inside(ni) {
                visited[ni] = true;
                stack.push(ni);
            }
        }
    }
    (
        area,
        WorkingBox {
            x: minx,
            y: miny,
            w: maxx - minx + 1,
            h: maxy - miny + 1,
        },
    )
}

/// Keep only the largest 8-connected component of set pixels.
/// Returns `found = false` (and an empty mask) when the input is empty.
/// Equal-area ties resolve to the component encountered first in
/// row-major scan order.
pub fn largest_component(mask: &BinaryMask) -> (BinaryMask, bool) {
    let (w, h) = (mask.width, mask.height);
    let mut visited = vec![false; w * h];
    let mut stack = Vec::new();
    let mut best_seed = None;
    let mut best_area = 0usize;
    for i in 0..w * h {
        if mask.data[i] && !visited[i] {
            let (area, _) = flood_fill(w, h, |j| mask.data[j], &mut visited, i, &mut stack);
            if area > best_area {
                best_area = area;
                best_seed = Some(i);
            }
        }
    }
    let mut out = BinaryMask::new(w, h);
    let Some(seed) = best_seed else {
        return (out, false);
    };
    let mut keep = vec![false; w * h];
    flood_fill(w, h, |j| mask.data[j], &mut keep, seed, &mut stack);
    out.data = keep;
    (out, true)
}

/// Blobs of non-water pixels enclosed by the water region: 8-connected
/// components of the region's complement that do not reach the image
/// border (the region's holes). Components smaller than `min_blob_area`
/// are discarded; each survivor is reported as its tight bounding box in
/// row-major discovery order.
pub fn extract_obstacles(water_region: &BinaryMask, min_blob_area: usize) -> Vec<WorkingBox> {
    let (w, h) = (water_region.width, water_region.height);
    let complement = |i: usize| !water_region.data[i];
    // Mark complement pixels reachable from the border.
    let mut outside = vec![false; w * h];
    let mut stack = Vec::new();
    let mut border_seeds = Vec::new();
    for x in 0..w {
        border_seeds.push(x);
        border_seeds.push((h - 1) * w + x);
    }
    for y in 0..h {
        border_seeds.push(y * w);
        border_seeds.push(y * w + w - 1);
    }
    for seed in border_seeds {
        if complement(seed) && !outside[seed] {
            flood_fill(w, h, complement, &mut outside, seed, &mut stack);
        }
    }
    // Remaining complement pixels are holes.
    let mut visited = outside;
    let mut boxes = Vec::new();
    for i in 0..w * h {
        if complement(i) && !visited[i] {
            let (area, bbox) = flood_fill(w, h, complement, &mut visited, i, &mut stack);
            if area >= min_blob_area {
                boxes.push(bbox);
            }
        }
    }
    boxes
}

/// Iteratively merge boxes whose closest-point distance is at most
/// `merge_gap_px` into their union, until no pair qualifies. The scan
/// order is fixed by sorting on (x, y, w, h), so the fixpoint is
/// deterministic; the operation is idempotent.
pub fn suppress_merge(mut boxes: Vec<WorkingBox>, merge_gap_px: f64) -> Vec<WorkingBox> {
    let sort = |bs: &mut Vec<WorkingBox>| {
        bs.sort_by_key(|b| (b.x, b.y, b.w, b.h));
    };
    sort(&mut boxes);
    'outer: loop {
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].gap(boxes[j]) <= merge_gap_px {
                    let merged = boxes[i].union(boxes[j]);
                    boxes.remove(j);
                    boxes[i] = merged;
                    sort(&mut boxes);
                    continue 'outer;
                }
            }
        }
        return boxes;
    }
}

/// Per-column water edge: the topmost set row in each column of the
/// (full-resolution) region mask; columns without any set pixel take the
/// image height.
pub fn water_edge(region: &BinaryMask) -> Vec<u32> {
    let (w, h) = (region.width, region.height);
    let mut edge = vec![h as u32; w];
    for x in 0..w {
        for y in 0..h {
            if region.get(x, y) {
                edge[x] = y as u32;
                break;
            }
        }
    }
    edge
}
