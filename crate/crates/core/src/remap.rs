//! Moving boxes between image and crop coordinates.

use std::collections::BTreeMap;

use crate::dataset::{Annotation, Dataset, ImageRecord, RawAnnotation};
use crate::detection::{Detection, Origin};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::mask::CropRegion;
use crate::scalar::Scalar;

pub const DEFAULT_MIN_VISIBILITY: f64 = 0.5;

/// Annotations of one crop in crop-local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CropAnnotationSet<T> {
    pub crop: CropRegion,
    pub annotations: Vec<Annotation<T>>,
    /// Clipped area over original area, per annotation.
    pub visibility: Vec<T>,
}

/// Clips each annotation to the crop and moves it into crop coordinates, keeping
/// those that retain at least `min_visibility` of their area.
pub fn project_annotations<T: Scalar>(
    crop: &CropRegion,
    annotations: &[Annotation<T>],
    min_visibility: T,
) -> CropAnnotationSet<T> {
    let region: BoundingBox<T> = crop.rect.to_box();
    let mut out = CropAnnotationSet { crop: *crop, annotations: Vec::new(), visibility: Vec::new() };
    for a in annotations.iter().filter(|a| a.image_id == crop.image_id) {
        let Some(clipped) = a.bbox.clip(&region) else { continue };
        let visibility = if clipped == a.bbox { T::one() } else { clipped.area() / a.bbox.area() };
        if visibility < min_visibility {
            continue;
        }
        out.annotations.push(Annotation { bbox: clipped.translate(-region.x, -region.y), ..*a });
        out.visibility.push(visibility);
    }
    out
}

/// Result of mapping crop detections back onto the image.
#[derive(Debug, Clone, PartialEq)]
pub struct Backprojected<T> {
    pub detections: Vec<Detection<T>>,
    /// Detections that vanished when clipped to the image.
    pub dropped: usize,
}

/// Maps crop-local detections (possibly on a resized crop, `scale` crop pixels per
/// detector pixel) into image coordinates, clipped to `image_width × image_height`.
pub fn backproject_detections<T: Scalar>(
    crop: &CropRegion,
    detections: &[Detection<T>],
    scale: T,
    image_width: u32,
    image_height: u32,
) -> Backprojected<T> {
    let bounds = BoundingBox {
        x: T::zero(),
        y: T::zero(),
        w: T::lit(image_width as f64),
        h: T::lit(image_height as f64),
    };
    let (ox, oy) = (T::lit(crop.rect.x as f64), T::lit(crop.rect.y as f64));
    let mut out = Backprojected { detections: Vec::with_capacity(detections.len()), dropped: 0 };
    for d in detections {
        let scaled = if scale == T::one() { d.bbox } else { d.bbox.scale(scale) };
        match scaled.translate(ox, oy).clip(&bounds) {
            Some(bbox) => out.detections.push(Detection {
                image_id: crop.image_id,
                bbox,
                origin: Origin::Crop(crop.crop_index),
                ..*d
            }),
            None => out.dropped += 1,
        }
    }
    out
}

/// True when a crop-local box reaches the edge of its crop, where the object may
/// continue outside the crop.
pub fn touches_crop_border<T: Scalar>(bbox: &BoundingBox<T>, crop: &CropRegion) -> bool {
    bbox.x <= T::zero()
        || bbox.y <= T::zero()
        || bbox.right() >= T::lit(crop.rect.w as f64)
        || bbox.bottom() >= T::lit(crop.rect.h as f64)
}

/// Synthetic file name of a crop image: `<stem>_crop<k>.jpg`.
pub fn crop_file_name(image: &ImageRecord, crop_index: usize) -> String {
    format!("{}_crop{}.jpg", image.stem(), crop_index)
}

/// Which crop a synthetic crop-image id stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct CropImageIndex {
    pub by_crop_image: BTreeMap<u64, CropRegion>,
}

impl CropImageIndex {
    /// Crop images are numbered from 1 in the order given.
    pub fn new(crops: &[CropRegion]) -> Self {
        CropImageIndex { by_crop_image: crops.iter().enumerate().map(|(i, c)| (i as u64 + 1, *c)).collect() }
    }

    pub fn crop(&self, crop_image_id: u64) -> Option<&CropRegion> {
        self.by_crop_image.get(&crop_image_id)
    }
}

/// Builds a crop-level training set: one image record per crop (ids from 1 in
/// crop order) holding its projected annotations.
pub fn crop_dataset<T: Scalar>(source: &Dataset<T>, crops: &[CropRegion], min_visibility: T) -> Result<Dataset<T>> {
    let mut images = Vec::with_capacity(crops.len());
    let mut raw = Vec::new();
    for (crop_image_id, crop) in CropImageIndex::new(crops).by_crop_image {
        let image = source
            .image(crop.image_id)
            .ok_or_else(|| Error::Integrity(format!("crop references missing image {}", crop.image_id)))?;
        if crop.rect.x + crop.rect.w > image.width || crop.rect.y + crop.rect.h > image.height {
            return Err(Error::Validation(format!("crop {:?} exceeds image {}", crop.rect, image.id)));
        }
        images.push(ImageRecord {
            id: crop_image_id,
            file_name: crop_file_name(image, crop.crop_index),
            width: crop.rect.w,
            height: crop.rect.h,
        });
        let anns: Vec<Annotation<T>> = source.annotations_of(crop.image_id).copied().collect();
        let projected = project_annotations(&crop, &anns, min_visibility);
        for a in projected.annotations {
            let b = a.bbox.cast::<f64>();
            raw.push(RawAnnotation {
                id: raw.len() as u64 + 1,
                image_id: crop_image_id,
                category_id: a.category_id,
                bbox: b.to_array(),
            });
        }
    }
    let (dataset, _) = Dataset::build(images, raw, source.categories().clone())?;
    Ok(dataset)
}
