//! Class-aware greedy NMS and fusion of global and crop detections.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::detection::Detection;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// IoU threshold used when fusing global and crop detections.
pub const FUSION_NMS_IOU: f64 = 0.7;
/// Alternative fusion IoU threshold (the stricter setting).
pub const STANDARD_NMS_IOU: f64 = 0.5;
pub const DEFAULT_MAX_DETS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams<T> {
    pub nms_iou: T,
    pub max_dets_per_image: usize,
}

impl<T: Scalar> Default for FusionParams<T> {
    fn default() -> Self {
        FusionParams { nms_iou: T::lit(FUSION_NMS_IOU), max_dets_per_image: DEFAULT_MAX_DETS }
    }
}

impl<T: Scalar> FusionParams<T> {
    pub fn new(nms_iou: T, max_dets_per_image: usize) -> Result<Self> {
        let p = FusionParams { nms_iou, max_dets_per_image };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nms_iou > T::zero() && self.nms_iou < T::one()) {
            return Err(Error::InvalidParameter(format!("nms iou must lie in (0, 1), got {}", self.nms_iou)));
        }
        if self.max_dets_per_image == 0 {
            return Err(Error::InvalidParameter("max detections per image must be >= 1".into()));
        }
        Ok(())
    }
}

/// Processing order: descending score, then ascending area, then input position.
fn priority<T: Scalar>(dets: &[Detection<T>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&dets[a], &dets[b]);
        db.score
            .partial_cmp(&da.score)
            .unwrap_or(Ordering::Equal)
            .then(da.bbox.area().partial_cmp(&db.bbox.area()).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    order
}

/// Greedy per-(image, category) suppression. A box is kept iff its IoU with every
/// already-kept box of its group is at most `iou_threshold`. The result is in
/// processing order.
pub fn nms<T: Scalar>(dets: &[Detection<T>], iou_threshold: T) -> Vec<Detection<T>> {
    let mut kept_by_group: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    let mut out = Vec::new();
    for i in priority(dets) {
        let d = &dets[i];
        let kept = kept_by_group.entry((d.image_id, d.category_id)).or_default();
        if kept.iter().all(|&k| dets[k].bbox.iou(&d.bbox) <= iou_threshold) {
            kept.push(i);
            out.push(*d);
        }
    }
    out
}

/// Concatenates global and crop detections, suppresses duplicates, then keeps the
/// best `max_dets_per_image` per image. Output is ordered by image id, then in
/// NMS processing order.
pub fn fuse<T: Scalar>(
    global: &[Detection<T>],
    crops: &[Detection<T>],
    params: &FusionParams<T>,
) -> Result<Vec<Detection<T>>> {
    params.validate()?;
    let all: Vec<Detection<T>> = global.iter().chain(crops).copied().collect();
    let mut per_image: HashMap<u64, usize> = HashMap::new();
    let mut out: Vec<Detection<T>> = nms(&all, params.nms_iou)
        .into_iter()
        .filter(|d| {
            let n = per_image.entry(d.image_id).or_default();
            *n += 1;
            *n <= params.max_dets_per_image
        })
        .collect();
    out.sort_by_key(|d| d.image_id);
    Ok(out)
}
