//! Density masks, connected components and crop regions.
//!
//! The mask is built from non-overlapping windows anchored at multiples of the
//! window size. Windows at the right and bottom edges are clipped to the image and
//! compared against the same threshold. A window is kept when its density sum is
//! strictly greater than the threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{circumscribed_rect, PixelRect};
use crate::raster::Raster;
use crate::scalar::Scalar;

/// Default density threshold for the VisDrone profile.
pub const VISDRONE_THRESHOLD: f64 = 0.08;
/// Default density threshold for the UAVDT profile.
pub const UAVDT_THRESHOLD: f64 = 0.03;
/// Crops narrower or shorter than this many pixels are dropped.
pub const DEFAULT_MIN_CROP: u32 = 70;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskParams<T> {
    pub window_h: usize,
    pub window_w: usize,
    pub threshold: T,
}

impl<T: Scalar> MaskParams<T> {
    pub fn new(window_h: usize, window_w: usize, threshold: T) -> Result<Self> {
        let p = MaskParams { window_h, window_w, threshold };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_h == 0 || self.window_w == 0 {
            return Err(Error::InvalidParameter(format!("window {}x{} must be at least 1x1", self.window_h, self.window_w)));
        }
        if !(self.threshold >= T::zero()) || !self.threshold.is_finite() {
            return Err(Error::InvalidParameter(format!("threshold must be finite and >= 0, got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Binary raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl DensityMask {
    pub fn new(height: usize, width: usize) -> Self {
        DensityMask { height, width, bits: vec![false; height * width] }
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::Format(format!("mask {height}x{width} needs {} bits, got {}", height * width, bits.len())));
        }
        Ok(DensityMask { height, width, bits })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, y: usize, x: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &DensityMask) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Binary PGM (`P5`), set pixels written as 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
        out
    }

    /// Reads a binary PGM; any non-zero sample is a set pixel.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Format("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(Error::Format(format!("not a binary PGM: {}", fields[0])));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad PGM field {s:?}")));
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
        }
        let data = &bytes[(pos + 1).min(bytes.len())..];
        if data.len() != width * height {
            return Err(Error::Format(format!("PGM payload has {} bytes, expected {}", data.len(), width * height)));
        }
        Ok(DensityMask { height, width, bits: data.iter().map(|&v| v != 0).collect() })
    }
}

/// Sliding-window density mask.
pub fn density_mask<T: Scalar>(density: &Raster<T>, params: &MaskParams<T>) -> Result<DensityMask> {
    params.validate()?;
    let (h, w) = density.shape();
    if h == 0 || w == 0 {
        return Err(Error::InvalidParameter("density map has zero size".into()));
    }
    let (wh, ww) = (params.window_h, params.window_w);
    let threshold = params.threshold.as_f64();
    let cols = w.div_ceil(ww);
    let mut mask = DensityMask::new(h, w);
    let mut sums = vec![0f64; cols];
    for band in (0..h).step_by(wh) {
        let band_end = (band + wh).min(h);
        sums.iter_mut().for_each(|s| *s = 0.0);
        // Each window is summed row by row, left to right.
        for y in band..band_end {
            for (c, chunk) in density.row(y).chunks(ww).enumerate() {
                sums[c] += chunk.iter().map(|v| v.as_f64()).sum::<f64>();
            }
        }
        for (c, &s) in sums.iter().enumerate() {
            if s > threshold {
                let (x0, x1) = (c * ww, ((c + 1) * ww).min(w));
                for y in band..band_end {
                    mask.bits[y * w + x0..y * w + x1].iter_mut().for_each(|b| *b = true);
                }
            }
        }
    }
    Ok(mask)
}

/// Component label per pixel (0 = background), ids dense from 1 in raster-scan
/// order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u32>,
    pub count: u32,
}

impl Labeling {
    pub fn label(&self, y: usize, x: usize) -> u32 {
        self.labels[y * self.width + x]
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        // keep the smaller provisional label as the root
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// Two-pass union-find labeling with 8-connectivity.
pub fn connected_components(mask: &DensityMask) -> Labeling {
    let (h, w) = (mask.height, mask.width);
    let mut labels = vec![0u32; h * w];
    // parent[0] is the background sentinel
    let mut parent: Vec<u32> = vec![0];
    for y in 0..h {
        for x in 0..w {
            if !mask.bits[y * w + x] {
                continue;
            }
            // previously visited neighbours: W, NW, N, NE
            let mut neighbours = [0u32; 4];
            if x > 0 {
                neighbours[0] = labels[y * w + x - 1];
            }
            if y > 0 {
                let up = (y - 1) * w;
                if x > 0 {
                    neighbours[1] = labels[up + x - 1];
                }
                neighbours[2] = labels[up + x];
                if x + 1 < w {
                    neighbours[3] = labels[up + x + 1];
                }
            }
            let mut current = 0;
            for &n in neighbours.iter().filter(|&&n| n != 0) {
                if current == 0 {
                    current = n;
                } else {
                    union(&mut parent, current, n);
                }
            }
            if current == 0 {
                current = parent.len() as u32;
                parent.push(current);
            }
            labels[y * w + x] = current;
        }
    }
    let mut dense = vec![0u32; parent.len()];
    let mut count = 0;
    for l in labels.iter_mut().filter(|l| **l != 0) {
        let root = find(&mut parent, *l) as usize;
        if dense[root] == 0 {
            count += 1;
            dense[root] = count;
        }
        *l = dense[root];
    }
    Labeling { height: h, width: w, labels, count }
}

/// Circumscribed rectangle of a mask component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropRegion {
    pub image_id: u64,
    /// Position of the crop within its image's crop list.
    pub crop_index: usize,
    pub rect: PixelRect,
    /// Number of mask pixels in the component (rect area for grid crops).
    pub component_size: u64,
    pub source_threshold: f64,
}

/// One crop region per 8-connected component, dropping regions whose width or
/// height is below `min_size`. Sorted by `(rect.y, rect.x)`.
pub fn crops_from_mask(mask: &DensityMask, min_size: u32, image_id: u64, threshold: f64) -> Vec<CropRegion> {
    let labeling = connected_components(mask);
    let mut points: Vec<Vec<(u32, u32)>> = vec![Vec::new(); labeling.count as usize];
    for y in 0..labeling.height {
        for x in 0..labeling.width {
            let l = labeling.label(y, x);
            if l != 0 {
                points[l as usize - 1].push((x as u32, y as u32));
            }
        }
    }
    let mut regions: Vec<CropRegion> = points
        .into_iter()
        .map(|pts| {
            let size = pts.len() as u64;
            let rect = circumscribed_rect(pts).expect("labels are non-empty");
            CropRegion { image_id, crop_index: 0, rect, component_size: size, source_threshold: threshold }
        })
        .filter(|c| c.rect.w >= min_size && c.rect.h >= min_size)
        .collect();
    regions.sort_by_key(|c| (c.rect.y, c.rect.x));
    for (i, c) in regions.iter_mut().enumerate() {
        c.crop_index = i;
    }
    regions
}

/// Baseline `rows × cols` tiling. The last row and column absorb the remainder;
/// each tile is grown by `overlap` pixels across interior edges and clipped.
pub fn uniform_grid(
    height: u32,
    width: u32,
    rows: u32,
    cols: u32,
    overlap: u32,
    image_id: u64,
) -> Result<Vec<CropRegion>> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter("grid needs at least one row and column".into()));
    }
    if rows > height || cols > width {
        return Err(Error::InvalidParameter(format!("{rows}x{cols} grid exceeds {height}x{width} image")));
    }
    let (cell_h, cell_w) = (height / rows, width / cols);
    let span = |i: u32, n: u32, cell: u32, total: u32| -> (u32, u32) {
        let start = i * cell;
        let end = if i + 1 == n { total } else { start + cell };
        let lo = if i == 0 { start } else { start.saturating_sub(overlap) };
        let hi = if i + 1 == n { end } else { (end + overlap).min(total) };
        (lo, hi - lo)
    };
    let mut out = Vec::with_capacity((rows * cols) as usize);
    for r in 0..rows {
        let (y, h) = span(r, rows, cell_h, height);
        for c in 0..cols {
            let (x, w) = span(c, cols, cell_w, width);
            let rect = PixelRect { x, y, w, h };
            out.push(CropRegion {
                image_id,
                crop_index: out.len(),
                rect,
                component_size: rect.area(),
                source_threshold: 0.0,
            });
        }
    }
    Ok(out)
}

/// One line of a crop manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: u64,
    pub crop_index: usize,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub threshold: f64,
}

impl From<&CropRegion> for ManifestEntry {
    fn from(c: &CropRegion) -> Self {
        ManifestEntry {
            image_id: c.image_id,
            crop_index: c.crop_index,
            x: c.rect.x,
            y: c.rect.y,
            w: c.rect.w,
            h: c.rect.h,
            threshold: c.source_threshold,
        }
    }
}

impl ManifestEntry {
    pub fn to_region(&self) -> Result<CropRegion> {
        let rect = PixelRect::new(self.x, self.y, self.w, self.h)?;
        Ok(CropRegion {
            image_id: self.image_id,
            crop_index: self.crop_index,
            rect,
            component_size: rect.area(),
            source_threshold: self.threshold,
        })
    }
}

/// JSON-lines crop manifest, one object per crop.
pub fn write_manifest(crops: &[CropRegion]) -> Vec<u8> {
    let mut out = Vec::new();
    for c in crops {
        serde_json::to_writer(&mut out, &ManifestEntry::from(c)).expect("manifest entry serializes");
        out.push(b'\n');
    }
    out
}

pub fn read_manifest(bytes: &[u8]) -> Result<Vec<CropRegion>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Format(format!("manifest is not utf-8: {e}")))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let entry: ManifestEntry = serde_json::from_str(line)
                .map_err(|e| Error::Format(format!("manifest line {}: {e}", i + 1)))?;
            entry.to_region()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::{HashMap, VecDeque};

    /// Materializes every window and sums it; independent of the banded scan.
    fn brute_mask(d: &Raster<f64>, wh: usize, ww: usize, th: f64) -> Vec<bool> {
        let (h, w) = d.shape();
        let mut out = vec![false; h * w];
        let mut y0 = 0;
        while y0 < h {
            let mut x0 = 0;
            while x0 < w {
                let window: Vec<f64> = (y0..(y0 + wh).min(h))
                    .flat_map(|y| (x0..(x0 + ww).min(w)).map(move |x| (y, x)))
                    .map(|(y, x)| d[(y, x)])
                    .collect();
                if window.iter().sum::<f64>() > th {
                    for y in y0..(y0 + wh).min(h) {
                        for x in x0..(x0 + ww).min(w) {
                            out[y * w + x] = true;
                        }
                    }
                }
                x0 += ww;
            }
            y0 += wh;
        }
        out
    }

    fn flood_fill(mask: &DensityMask) -> Vec<u32> {
        let (h, w) = (mask.height(), mask.width());
        let mut labels = vec![0u32; h * w];
        let mut next = 0;
        for sy in 0..h {
            for sx in 0..w {
                if !mask.get(sy, sx) || labels[sy * w + sx] != 0 {
                    continue;
                }
                next += 1;
                labels[sy * w + sx] = next;
                let mut queue = VecDeque::from([(sy, sx)]);
                while let Some((y, x)) = queue.pop_front() {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                            if ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                                continue;
                            }
                            let (ny, nx) = (ny as usize, nx as usize);
                            if mask.get(ny, nx) && labels[ny * w + nx] == 0 {
                                labels[ny * w + nx] = next;
                                queue.push_back((ny, nx));
                            }
                        }
                    }
                }
            }
        }
        labels
    }

    fn same_partition(a: &[u32], b: &[u32]) -> bool {
        let mut ab: HashMap<u32, u32> = HashMap::new();
        let mut ba: HashMap<u32, u32> = HashMap::new();
        a.iter().zip(b).all(|(&x, &y)| {
            (x == 0) == (y == 0) && *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x
        })
    }

    fn mask_from(rows: &[&str]) -> DensityMask {
        let bits = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        DensityMask::from_bits(rows.len(), rows[0].len(), bits).unwrap()
    }

    #[test]
    fn mask_examples() {
        let zeros = Raster::<f64>::zeros(6, 6);
        for th in [0.0, 0.08, 1.0] {
            assert_eq!(density_mask(&zeros, &MaskParams::new(2, 2, th).unwrap()).unwrap().count_ones(), 0);
        }
        let ones = Raster::filled(4, 4, 1.0f64);
        let m = density_mask(&ones, &MaskParams::new(2, 2, 3.9).unwrap()).unwrap();
        assert_eq!(m.count_ones(), 16);
        // strictly greater: sum 4.0 does not pass TH = 4.0
        let m = density_mask(&ones, &MaskParams::new(2, 2, 4.0).unwrap()).unwrap();
        assert_eq!(m.count_ones(), 0);
    }

    #[test]
    fn clipped_edge_windows() {
        // 5x5 of ones with 2x2 windows: the trailing windows are 1 or 2 pixels wide
        let ones = Raster::filled(5, 5, 1.0f64);
        let m = density_mask(&ones, &MaskParams::new(2, 2, 1.5).unwrap()).unwrap();
        assert!(!m.get(4, 4));
        assert!(m.get(4, 0));
        assert!(m.get(0, 4));
        // four full windows plus four two-pixel edge windows; the corner pixel fails
        assert_eq!(m.count_ones(), 16 + 8);
        // window larger than the image collapses to one clipped window
        let m = density_mask(&ones, &MaskParams::new(50, 50, 24.0).unwrap()).unwrap();
        assert_eq!(m.count_ones(), 25);
    }

    #[test]
    fn mask_errors() {
        assert!(density_mask(&Raster::<f64>::zeros(0, 4), &MaskParams { window_h: 1, window_w: 1, threshold: 0.0 }).is_err());
        assert!(MaskParams::new(0, 1, 0.0).is_err());
        assert!(MaskParams::new(1, 1, -0.5).is_err());
    }

    #[test]
    fn random_mask_matches_brute_force() {
        let mut state = 99u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let d = Raster::from_fn(17, 23, |_, _| next() * 0.1);
        for _ in 0..50 {
            let th = next() * 2.0;
            let m = density_mask(&d, &MaskParams::new(5, 4, th).unwrap()).unwrap();
            assert_eq!(m.bits(), brute_mask(&d, 5, 4, th).as_slice());
        }
    }

    #[test]
    fn components_examples() {
        assert_eq!(connected_components(&DensityMask::new(4, 4)).count, 0);
        let diag = mask_from(&["#.", ".#"]);
        assert_eq!(connected_components(&diag).count, 1);
        let anti = mask_from(&[".#", "#."]);
        assert_eq!(connected_components(&anti).count, 1);
        // U shape merges through the bottom row in the second pass
        let u = mask_from(&["#.#", "#.#", "###"]);
        let l = connected_components(&u);
        assert_eq!(l.count, 1);
        let two = mask_from(&["#..#", "#..#"]);
        let l = connected_components(&two);
        assert_eq!(l.count, 2);
        assert_eq!((l.label(0, 0), l.label(0, 3)), (1, 2));
    }

    #[test]
    fn crops_examples() {
        assert!(crops_from_mask(&DensityMask::new(10, 10), 70, 1, 0.08).is_empty());
        let mut m = DensityMask::new(300, 300);
        for y in 10..90 {
            for x in 20..100 {
                m.set(y, x, true);
            }
        }
        let crops = crops_from_mask(&m, 70, 1, 0.08);
        assert_eq!(crops.len(), 1);
        assert_eq!(crops[0].rect, PixelRect { x: 20, y: 10, w: 80, h: 80 });
        assert_eq!(crops[0].component_size, 6400);

        let mut m = DensityMask::new(300, 300);
        for y in 0..60 {
            for x in 0..200 {
                m.set(y, x, true);
            }
        }
        assert!(crops_from_mask(&m, 70, 1, 0.08).is_empty());
        assert_eq!(crops_from_mask(&m, 60, 1, 0.08).len(), 1);
    }

    #[test]
    fn grid_examples() {
        let one = uniform_grid(50, 60, 1, 1, 0, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].rect, PixelRect { x: 0, y: 0, w: 60, h: 50 });

        let g = uniform_grid(600, 1000, 3, 4, 0, 1).unwrap();
        assert_eq!(g.len(), 12);
        assert!(g.iter().all(|c| c.rect.w == 250 && c.rect.h == 200));

        let g = uniform_grid(601, 1001, 3, 4, 0, 1).unwrap();
        let mut cover = vec![0u8; 601 * 1001];
        for c in &g {
            for y in c.rect.y..=c.rect.max_y() {
                for x in c.rect.x..=c.rect.max_x() {
                    cover[y as usize * 1001 + x as usize] += 1;
                }
            }
        }
        assert!(cover.iter().all(|&n| n == 1));
        assert_eq!(g.last().unwrap().rect, PixelRect { x: 750, y: 400, w: 251, h: 201 });

        let g = uniform_grid(100, 100, 2, 2, 5, 1).unwrap();
        assert_eq!(g[0].rect, PixelRect { x: 0, y: 0, w: 55, h: 55 });
        assert_eq!(g[3].rect, PixelRect { x: 45, y: 45, w: 55, h: 55 });

        assert!(uniform_grid(2, 100, 3, 1, 0, 1).is_err());
        assert!(uniform_grid(10, 10, 0, 1, 0, 1).is_err());
    }

    #[test]
    fn pgm_and_manifest_round_trip() {
        let m = mask_from(&["#..#", ".##.", "...."]);
        assert_eq!(DensityMask::from_pgm(&m.to_pgm()).unwrap(), m);
        assert!(DensityMask::from_pgm(b"P2\n1 1\n255\n0").is_err());
        let crops = uniform_grid(40, 60, 2, 3, 2, 9).unwrap();
        let back = read_manifest(&write_manifest(&crops)).unwrap();
        assert_eq!(back, crops);
    }

    fn arb_raster(max: usize) -> impl Strategy<Value = Raster<f64>> {
        (1..=max, 1..=max).prop_flat_map(|(h, w)| {
            prop::collection::vec(prop_oneof![Just(0.0), 0.0..0.05f64], h * w)
                .prop_map(move |v| Raster::from_vec(h, w, v).unwrap())
        })
    }

    fn arb_mask(max: usize) -> impl Strategy<Value = DensityMask> {
        (1..=max, 1..=max, 0.05..0.7f64).prop_flat_map(|(h, w, p)| {
            prop::collection::vec(prop::bool::weighted(p), h * w)
                .prop_map(move |bits| DensityMask::from_bits(h, w, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn threshold_monotone(d in arb_raster(30), wh in 1usize..6, ww in 1usize..6, a in 0.0..0.5f64, b in 0.0..0.5f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let m_lo = density_mask(&d, &MaskParams::new(wh, ww, lo).unwrap()).unwrap();
            let m_hi = density_mask(&d, &MaskParams::new(wh, ww, hi).unwrap()).unwrap();
            prop_assert!(m_hi.is_subset_of(&m_lo));
        }

        #[test]
        fn labeling_matches_flood_fill(m in arb_mask(24)) {
            let l = connected_components(&m);
            let reference = flood_fill(&m);
            prop_assert!(same_partition(&l.labels, &reference));
            prop_assert_eq!(l.count, reference.iter().copied().max().unwrap_or(0));
            // ids are dense and appear in raster order
            let mut seen = 0;
            for &v in &l.labels {
                if v > seen {
                    prop_assert_eq!(v, seen + 1);
                    seen = v;
                }
            }
        }

        #[test]
        fn crops_cover_mask(m in arb_mask(24)) {
            let crops = crops_from_mask(&m, 0, 1, 0.0);
            for y in 0..m.height() {
                for x in 0..m.width() {
                    if m.get(y, x) {
                        let n = crops.iter().filter(|c| c.rect.contains_pixel(x as u32, y as u32)).count();
                        prop_assert!(n >= 1);
                    }
                }
            }
            prop_assert_eq!(crops.iter().map(|c| c.component_size).sum::<u64>(), m.count_ones() as u64);
            prop_assert_eq!(crops_from_mask(&m, 0, 1, 0.0), crops);
        }

        #[test]
        fn grid_partitions(h in 4u32..300, w in 4u32..300, rows in 1u32..5, cols in 1u32..5) {
            let g = uniform_grid(h, w, rows, cols, 0, 1).unwrap();
            prop_assert_eq!(g.iter().map(|c| c.rect.area()).sum::<u64>(), h as u64 * w as u64);
        }
    }
}
