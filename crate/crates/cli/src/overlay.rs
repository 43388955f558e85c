//! Figure-style overlays: density heat layer, tinted mask, crop and
//! ground-truth rectangles.

use std::io::Cursor;

use dmcrop::geometry::PixelRect;
use dmcrop::mask::{CropRegion, DensityMask};
use dmcrop::{Annotation, DensityMap};
use image::{ImageFormat, Rgb, RgbImage};

use crate::error::{CliError, Result};

pub const CANVAS: Rgb<u8> = Rgb([0, 0, 0]);
pub const CROP_COLOR: Rgb<u8> = Rgb([255, 255, 0]);
pub const GT_COLOR: Rgb<u8> = Rgb([0, 255, 0]);
/// Weight of the heat colour at the densest pixel.
const DENSITY_ALPHA: f32 = 0.75;

#[derive(Debug, Default, Clone, Copy)]
pub struct Layers<'a> {
    pub density: Option<&'a DensityMap>,
    pub mask: Option<&'a DensityMask>,
    pub crops: &'a [CropRegion],
    pub annotations: &'a [Annotation],
}

pub fn blank_canvas(height: u32, width: u32) -> RgbImage {
    RgbImage::from_pixel(width, height, CANVAS)
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Black to red to yellow to white.
fn heat(t: f32) -> [f32; 3] {
    [(3.0 * t).min(1.0), (3.0 * t - 1.0).clamp(0.0, 1.0), (3.0 * t - 2.0).clamp(0.0, 1.0)]
}

fn check_extent(shape: (usize, usize), canvas: &RgbImage) -> Result<()> {
    let canvas_shape = (canvas.height() as usize, canvas.width() as usize);
    if shape != canvas_shape {
        return Err(CliError::Core(dmcrop::Error::ShapeMismatch { left: canvas_shape, right: shape }));
    }
    Ok(())
}

fn stroke(img: &mut RgbImage, rect: PixelRect, color: Rgb<u8>) {
    let (w, h) = img.dimensions();
    if rect.x >= w || rect.y >= h {
        return;
    }
    let x1 = (rect.x + rect.w - 1).min(w - 1);
    let y1 = (rect.y + rect.h - 1).min(h - 1);
    for x in rect.x..=x1 {
        img.put_pixel(x, rect.y, color);
        img.put_pixel(x, y1, color);
    }
    for y in rect.y..=y1 {
        img.put_pixel(rect.x, y, color);
        img.put_pixel(x1, y, color);
    }
}

/// Pixels covered by a box: `floor(x) .. ceil(x + w)`.
fn box_rect(a: &Annotation) -> Option<PixelRect> {
    let b = &a.bbox;
    let (x0, y0) = (b.x.floor().max(0.0), b.y.floor().max(0.0));
    let (x1, y1) = (b.right().ceil(), b.bottom().ceil());
    PixelRect::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32).ok()
}

/// Draws the layers onto `canvas` (density, then mask tint, then crop and box
/// outlines) and encodes the result as PNG. Identical inputs give identical bytes.
pub fn render_overlay(mut canvas: RgbImage, layers: &Layers<'_>) -> Result<Vec<u8>> {
    if let Some(d) = layers.density {
        check_extent(d.shape(), &canvas)?;
        let max = d.max_value();
        if max > 0.0 {
            for (x, y, px) in canvas.enumerate_pixels_mut() {
                let t = d[(y as usize, x as usize)] / max;
                if t <= 0.0 {
                    continue;
                }
                let a = DENSITY_ALPHA * t;
                let c = heat(t);
                for k in 0..3 {
                    let v = px.0[k] as f32 * (1.0 - a) + c[k] * 255.0 * a;
                    px.0[k] = v.round().clamp(0.0, 255.0) as u8;
                }
            }
        }
    }
    if let Some(m) = layers.mask {
        check_extent((m.height(), m.width()), &canvas)?;
        for (x, y, px) in canvas.enumerate_pixels_mut() {
            if m.get(y as usize, x as usize) {
                // halfway towards white
                px.0 = px.0.map(|c| ((c as u16 + 255) / 2) as u8);
            }
        }
    }
    for c in layers.crops {
        stroke(&mut canvas, c.rect, CROP_COLOR);
    }
    for a in layers.annotations {
        if let Some(r) = box_rect(a) {
            stroke(&mut canvas, r, GT_COLOR);
        }
    }
    encode_png(&canvas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dmcrop::geometry::BoundingBox;
    use dmcrop::raster::Raster;

    fn decode(bytes: &[u8]) -> RgbImage {
        image::load_from_memory_with_format(bytes, ImageFormat::Png).unwrap().to_rgb8()
    }

    fn crop(x: u32, y: u32, w: u32, h: u32) -> CropRegion {
        CropRegion { image_id: 1, crop_index: 0, rect: PixelRect { x, y, w, h }, component_size: 0, source_threshold: 0.08 }
    }

    #[test]
    fn empty_overlay_is_the_canvas() {
        let canvas = blank_canvas(40, 60);
        assert_eq!(render_overlay(canvas.clone(), &Layers::default()).unwrap(), encode_png(&canvas).unwrap());
    }

    #[test]
    fn mask_tint_covers_exactly_the_mask() {
        let mut m = DensityMask::new(30, 20);
        for (y, x) in [(0, 0), (5, 7), (5, 8), (29, 19), (12, 3)] {
            m.set(y, x, true);
        }
        let png = render_overlay(blank_canvas(30, 20), &Layers { mask: Some(&m), ..Default::default() }).unwrap();
        let tinted = decode(&png).pixels().filter(|p| **p != CANVAS).count();
        assert_eq!(tinted, m.count_ones());
    }

    #[test]
    fn rectangles_are_one_pixel_outlines() {
        let crops = [crop(10, 20, 30, 15)];
        let anns = [Annotation { id: 1, image_id: 1, category_id: 1, bbox: BoundingBox { x: 50.5, y: 50.0, w: 9.0, h: 10.0 } }];
        let img = decode(&render_overlay(blank_canvas(100, 100), &Layers { crops: &crops, annotations: &anns, ..Default::default() }).unwrap());
        assert_eq!(img.pixels().filter(|p| **p == CROP_COLOR).count(), 2 * 30 + 2 * 15 - 4);
        // 50.5..59.5 covers pixel columns 50..=59
        assert_eq!(img.pixels().filter(|p| **p == GT_COLOR).count(), 2 * 10 + 2 * 10 - 4);
        assert_eq!(*img.get_pixel(10, 20), CROP_COLOR);
        assert_eq!(*img.get_pixel(39, 34), CROP_COLOR);
        assert_eq!(*img.get_pixel(59, 59), GT_COLOR);
    }

    #[test]
    fn density_layer_and_extent_checks() {
        let mut d = Raster::zeros(10, 10);
        d[(4, 4)] = 2.0f32;
        d[(4, 5)] = 1.0;
        let img = decode(&render_overlay(blank_canvas(10, 10), &Layers { density: Some(&d), ..Default::default() }).unwrap());
        assert_eq!(img.pixels().filter(|p| **p != CANVAS).count(), 2);
        assert_eq!(img.get_pixel(4, 4).0, [191, 191, 191]);
        let wrong = Raster::zeros(10, 11);
        assert!(render_overlay(blank_canvas(10, 10), &Layers { density: Some(&wrong), ..Default::default() }).is_err());
        let m = DensityMask::new(9, 10);
        assert!(render_overlay(blank_canvas(10, 10), &Layers { mask: Some(&m), ..Default::default() }).is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let d = Raster::from_fn(32, 48, |y, x| ((y * 7 + x * 3) % 11) as f32 / 10.0);
        let mut m = DensityMask::new(32, 48);
        m.set(3, 3, true);
        let crops = [crop(2, 2, 20, 10)];
        let layers = Layers { density: Some(&d), mask: Some(&m), crops: &crops, annotations: &[] };
        assert_eq!(render_overlay(blank_canvas(32, 48), &layers).unwrap(), render_overlay(blank_canvas(32, 48), &layers).unwrap());
    }
}
