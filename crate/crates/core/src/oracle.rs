//! A stand-in detector that returns ground truth, so the whole pipeline can be
//! checked without trained models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::detection::{Detection, Origin};
use crate::geometry::{AreaClass, BoundingBox};
use crate::mask::CropRegion;
use crate::scalar::Scalar;

/// Per-size probabilities of missing a ground-truth object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissPolicy {
    pub small: f64,
    pub medium: f64,
    pub large: f64,
    pub seed: u64,
}

impl MissPolicy {
    pub fn none() -> Self {
        MissPolicy { small: 0.0, medium: 0.0, large: 0.0, seed: 0 }
    }

    pub fn probability(&self, class: AreaClass) -> f64 {
        match class {
            AreaClass::Small => self.small,
            AreaClass::Medium => self.medium,
            AreaClass::Large => self.large,
        }
    }

    pub fn is_none(&self) -> bool {
        self.small <= 0.0 && self.medium <= 0.0 && self.large <= 0.0
    }
}

impl Default for MissPolicy {
    fn default() -> Self {
        MissPolicy::none()
    }
}

/// What the oracle looks at.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    FullImage(u64),
    Crop(&'a CropRegion),
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Ground-truth boxes whose centers fall in the region, clipped to it, in
/// region-local coordinates with score 1. The random stream depends only on the
/// policy seed, the image and the crop index.
pub fn oracle_detect<T: Scalar>(region: Region<'_>, gt: &Dataset<T>, policy: &MissPolicy) -> Vec<Detection<T>> {
    let (image_id, area, origin, stream) = match region {
        Region::FullImage(id) => match gt.image(id) {
            Some(im) => (id, im.bounds::<T>(), Origin::Global, 0u64),
            None => return Vec::new(),
        },
        Region::Crop(c) => (c.image_id, c.rect.to_box::<T>(), Origin::Crop(c.crop_index), c.crop_index as u64 + 1),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(mix(policy.seed ^ mix(image_id ^ mix(stream))));
    let mut out = Vec::new();
    for a in gt.annotations_of(image_id) {
        let u: f64 = rng.gen();
        if u < policy.probability(a.bbox.area_class()) {
            continue;
        }
        let (cx, cy) = a.bbox.center();
        if !area.contains_point(cx, cy) {
            continue;
        }
        let Some(clipped) = a.bbox.clip(&area) else { continue };
        let local: BoundingBox<T> = clipped.translate(-area.x, -area.y);
        out.push(Detection { image_id, category_id: a.category_id, bbox: local, score: T::one(), origin });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ImageRecord, RawAnnotation};
    use crate::geometry::PixelRect;
    use std::collections::BTreeMap;

    fn fixture() -> Dataset<f64> {
        let images = vec![ImageRecord { id: 1, file_name: "a.jpg".into(), width: 400, height: 300 }];
        let boxes = [[10.0, 10.0, 8.0, 8.0], [100.0, 100.0, 50.0, 40.0], [200.0, 50.0, 150.0, 120.0], [30.0, 200.0, 20.0, 20.0]];
        let raw = boxes
            .iter()
            .enumerate()
            .map(|(i, &bbox)| RawAnnotation { id: i as u64 + 1, image_id: 1, category_id: 1 + i as u64 % 2, bbox })
            .collect();
        let cats = BTreeMap::from([(1, "a".to_string()), (2, "b".to_string())]);
        Dataset::build(images, raw, cats).unwrap().0
    }

    #[test]
    fn full_image_returns_all_ground_truth() {
        let gt = fixture();
        let dets = oracle_detect(Region::FullImage(1), &gt, &MissPolicy::none());
        assert_eq!(dets.len(), 4);
        for (d, a) in dets.iter().zip(gt.annotations()) {
            assert_eq!((d.bbox, d.category_id, d.score, d.origin), (a.bbox, a.category_id, 1.0, Origin::Global));
        }
        assert!(oracle_detect(Region::FullImage(9), &gt, &MissPolicy::none()).is_empty());
    }

    #[test]
    fn crop_region_local_and_clipped() {
        let gt = fixture();
        let empty = CropRegion { image_id: 1, crop_index: 0, rect: PixelRect { x: 360, y: 250, w: 40, h: 50 }, component_size: 1, source_threshold: 0.0 };
        assert!(oracle_detect(Region::Crop(&empty), &gt, &MissPolicy::none()).is_empty());
        let c = CropRegion { image_id: 1, crop_index: 3, rect: PixelRect { x: 90, y: 90, w: 200, h: 100 }, component_size: 1, source_threshold: 0.0 };
        let dets = oracle_detect(Region::Crop(&c), &gt, &MissPolicy::none());
        // the 50x40 box is inside; the 150x120 box has its center (275, 110) inside and is clipped
        assert_eq!(dets.len(), 2);
        assert_eq!(dets[0].bbox, BoundingBox { x: 10.0, y: 10.0, w: 50.0, h: 40.0 });
        assert_eq!(dets[1].bbox, BoundingBox { x: 110.0, y: 0.0, w: 90.0, h: 80.0 });
        assert_eq!(dets[1].origin, Origin::Crop(3));
    }

    #[test]
    fn miss_policy_drops_small() {
        let gt = fixture();
        let policy = MissPolicy { small: 1.0, medium: 0.0, large: 0.0, seed: 42 };
        let dets = oracle_detect(Region::FullImage(1), &gt, &policy);
        let expected: Vec<_> = gt.annotations().iter().filter(|a| a.bbox.area_class() != AreaClass::Small).map(|a| a.bbox).collect();
        assert_eq!(dets.iter().map(|d| d.bbox).collect::<Vec<_>>(), expected);
    }

    #[test]
    fn seeded_misses_are_reproducible() {
        let gt = fixture();
        let policy = MissPolicy { small: 0.5, medium: 0.5, large: 0.5, seed: 7 };
        let a = oracle_detect(Region::FullImage(1), &gt, &policy);
        assert_eq!(a, oracle_detect(Region::FullImage(1), &gt, &policy));
    }
}
