//! COCO annotation ingest, dataset statistics, and COCO results output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::detection::{Detection, Origin};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

impl ImageRecord {
    pub fn bounds<T: Scalar>(&self) -> BoundingBox<T> {
        BoundingBox { x: T::zero(), y: T::zero(), w: T::lit(self.width as f64), h: T::lit(self.height as f64) }
    }

    /// File name without directories or extension.
    pub fn stem(&self) -> &str {
        let base = self.file_name.rsplit(['/', '\\']).next().unwrap_or(&self.file_name);
        match base.rfind('.') {
            Some(i) if i > 0 => &base[..i],
            _ => base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annotation<T> {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BoundingBox<T>,
}

/// What happened to the raw annotations while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    /// Annotations dropped for non-positive width or height (before or after clamping).
    pub dropped_degenerate: usize,
    /// Ids of annotations whose boxes were clamped to the image bounds.
    pub clamped: Vec<u64>,
}

/// An immutable, integrity-checked annotation set. Images, annotations and
/// categories are ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    images: Vec<ImageRecord>,
    annotations: Vec<Annotation<T>>,
    categories: BTreeMap<u64, String>,
    by_image: BTreeMap<u64, Vec<usize>>,
}

/// Annotation before clamping, with coordinates straight from the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: [f64; 4],
}

impl<T: Scalar> Dataset<T> {
    /// Validates referential integrity, clamps boxes to their image and drops
    /// degenerate ones.
    pub fn build(
        mut images: Vec<ImageRecord>,
        raw: Vec<RawAnnotation>,
        categories: BTreeMap<u64, String>,
    ) -> Result<(Self, LoadReport)> {
        images.sort_by_key(|im| im.id);
        for pair in images.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Integrity(format!("duplicate image {}", pair[0].id)));
            }
        }
        if let Some(im) = images.iter().find(|im| im.width == 0 || im.height == 0) {
            return Err(Error::Integrity(format!("image {} has zero size", im.id)));
        }
        let mut report = LoadReport::default();
        let mut annotations = Vec::with_capacity(raw.len());
        for ann in raw {
            let image = images
                .binary_search_by_key(&ann.image_id, |im| im.id)
                .map(|i| &images[i])
                .map_err(|_| Error::Integrity(format!("annotation {} references missing image {}", ann.id, ann.image_id)))?;
            if !categories.contains_key(&ann.category_id) {
                return Err(Error::Integrity(format!(
                    "annotation {} references missing category {}",
                    ann.id, ann.category_id
                )));
            }
            let [x, y, w, h] = ann.bbox;
            if !(w > 0.0 && h > 0.0) || !x.is_finite() || !y.is_finite() || !w.is_finite() || !h.is_finite() {
                report.dropped_degenerate += 1;
                continue;
            }
            let bbox = match clamp_to_image(x, y, w, h, image) {
                Clamped::Inside => BoundingBox { x: T::lit(x), y: T::lit(y), w: T::lit(w), h: T::lit(h) },
                Clamped::Moved(b) => {
                    report.clamped.push(ann.id);
                    b.cast()
                }
                Clamped::Gone => {
                    report.dropped_degenerate += 1;
                    continue;
                }
            };
            annotations.push(Annotation { id: ann.id, image_id: ann.image_id, category_id: ann.category_id, bbox });
        }
        annotations.sort_by_key(|a| a.id);
        for pair in annotations.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Integrity(format!("duplicate annotation {}", pair[0].id)));
            }
        }
        let mut by_image: BTreeMap<u64, Vec<usize>> = images.iter().map(|im| (im.id, Vec::new())).collect();
        for (i, a) in annotations.iter().enumerate() {
            by_image.get_mut(&a.image_id).expect("image checked above").push(i);
        }
        Ok((Dataset { images, annotations, categories, by_image }, report))
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn annotations(&self) -> &[Annotation<T>] {
        &self.annotations
    }

    pub fn categories(&self) -> &BTreeMap<u64, String> {
        &self.categories
    }

    pub fn image(&self, id: u64) -> Option<&ImageRecord> {
        self.images.binary_search_by_key(&id, |im| im.id).ok().map(|i| &self.images[i])
    }

    /// Annotations of one image, in id order.
    pub fn annotations_of(&self, image_id: u64) -> impl Iterator<Item = &Annotation<T>> + '_ {
        self.by_image.get(&image_id).into_iter().flatten().map(move |&i| &self.annotations[i])
    }

    /// The annotations presented as perfect detections (score 1).
    pub fn as_detections(&self) -> Vec<Detection<T>> {
        self.annotations.iter().map(|a| Detection::new(a.image_id, a.category_id, a.bbox, T::one())).collect()
    }
}

enum Clamped {
    Inside,
    Moved(BoundingBox<f64>),
    Gone,
}

fn clamp_to_image(x: f64, y: f64, w: f64, h: f64, image: &ImageRecord) -> Clamped {
    let (iw, ih) = (image.width as f64, image.height as f64);
    if x >= 0.0 && y >= 0.0 && x + w <= iw && y + h <= ih {
        return Clamped::Inside;
    }
    let (x1, y1) = (x.max(0.0), y.max(0.0));
    let (x2, y2) = ((x + w).min(iw), (y + h).min(ih));
    match BoundingBox::from_corners(x1, y1, x2, y2) {
        Some(b) => Clamped::Moved(b),
        None => Clamped::Gone,
    }
}

#[derive(Deserialize)]
struct CocoDoc {
    images: Vec<ImageRecord>,
    annotations: Vec<CocoAnnotation>,
    categories: Vec<CocoCategory>,
}

#[derive(Deserialize, Serialize)]
struct CocoAnnotation {
    id: u64,
    image_id: u64,
    category_id: u64,
    bbox: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    area: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    iscrowd: Option<u8>,
}

#[derive(Deserialize, Serialize)]
struct CocoCategory {
    id: u64,
    #[serde(default)]
    name: String,
}

fn json_error(bytes: &[u8], err: serde_json::Error) -> Error {
    // serde_json reports 1-based line/column; turn that into a byte offset.
    let line_start: usize = bytes
        .split_inclusive(|&b| b == b'\n')
        .take(err.line().saturating_sub(1))
        .map(|l| l.len())
        .sum();
    Error::Json { offset: line_start + err.column().saturating_sub(1), message: err.to_string() }
}

/// Parses a COCO annotation document (`images`, `annotations`, `categories`).
pub fn parse_coco<T: Scalar>(bytes: &[u8]) -> Result<(Dataset<T>, LoadReport)> {
    let doc: CocoDoc = serde_json::from_slice(bytes).map_err(|e| json_error(bytes, e))?;
    let mut categories = BTreeMap::new();
    for c in doc.categories {
        if categories.insert(c.id, c.name).is_some() {
            return Err(Error::Integrity(format!("duplicate category {}", c.id)));
        }
    }
    let raw = doc
        .annotations
        .into_iter()
        .map(|a| RawAnnotation { id: a.id, image_id: a.image_id, category_id: a.category_id, bbox: a.bbox })
        .collect();
    Dataset::build(doc.images, raw, categories)
}

/// Serializes a dataset back to COCO annotation JSON.
pub fn write_coco_dataset<T: Scalar>(d: &Dataset<T>) -> Vec<u8> {
    #[derive(Serialize)]
    struct Out<'a> {
        images: &'a [ImageRecord],
        annotations: Vec<CocoAnnotation>,
        categories: Vec<CocoCategory>,
    }
    let out = Out {
        images: &d.images,
        annotations: d
            .annotations
            .iter()
            .map(|a| {
                let b = a.bbox.cast::<f64>();
                CocoAnnotation {
                    id: a.id,
                    image_id: a.image_id,
                    category_id: a.category_id,
                    bbox: b.to_array(),
                    area: Some(b.w * b.h),
                    iscrowd: Some(0),
                }
            })
            .collect(),
        categories: d.categories.iter().map(|(&id, name)| CocoCategory { id, name: name.clone() }).collect(),
    };
    serde_json::to_vec(&out).expect("dataset serializes")
}

/// Mean box size of one category (or of the whole dataset).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScale<T> {
    pub mean_h: T,
    pub mean_w: T,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats<T> {
    pub per_category: BTreeMap<u64, ClassScale<T>>,
    pub global: ClassScale<T>,
}

impl<T: Scalar> CategoryStats<T> {
    pub fn category(&self, id: u64) -> Option<&ClassScale<T>> {
        self.per_category.get(&id)
    }

    /// Global mean `(height, width)` rounded to whole pixels, at least 1.
    pub fn window_size(&self) -> (usize, usize) {
        let round = |v: T| v.as_f64().round().max(1.0) as usize;
        (round(self.global.mean_h), round(self.global.mean_w))
    }
}

/// Order-independent mean: values are sorted before summation.
fn sorted_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn scale_of<T: Scalar>(hs: Vec<f64>, ws: Vec<f64>) -> ClassScale<T> {
    let count = hs.len();
    ClassScale { mean_h: T::lit(sorted_mean(hs)), mean_w: T::lit(sorted_mean(ws)), count }
}

/// Per-category and global mean box height/width.
pub fn dataset_stats<T: Scalar>(d: &Dataset<T>) -> Result<CategoryStats<T>> {
    if d.annotations.is_empty() {
        return Err(Error::NoAnnotations);
    }
    let mut groups: BTreeMap<u64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for a in &d.annotations {
        let g = groups.entry(a.category_id).or_default();
        g.0.push(a.bbox.h.as_f64());
        g.1.push(a.bbox.w.as_f64());
    }
    let global_h = d.annotations.iter().map(|a| a.bbox.h.as_f64()).collect();
    let global_w = d.annotations.iter().map(|a| a.bbox.w.as_f64()).collect();
    Ok(CategoryStats {
        per_category: groups.into_iter().map(|(id, (hs, ws))| (id, scale_of(hs, ws))).collect(),
        global: scale_of(global_h, global_w),
    })
}

#[derive(Serialize, Deserialize)]
struct CocoResult {
    image_id: u64,
    category_id: u64,
    bbox: [f64; 4],
    score: f64,
}

/// COCO results JSON, ordered by image id then descending score (stable).
pub fn write_coco_detections<T: Scalar>(dets: &[Detection<T>]) -> Result<Vec<u8>> {
    if let Some(d) = dets.iter().find(|d| !d.has_valid_score()) {
        return Err(Error::Validation(format!("score {} outside [0, 1] on image {}", d.score, d.image_id)));
    }
    let mut order: Vec<&Detection<T>> = dets.iter().collect();
    order.sort_by(|a, b| a.image_id.cmp(&b.image_id).then(b.score.partial_cmp(&a.score).unwrap()));
    let out: Vec<CocoResult> = order
        .into_iter()
        .map(|d| CocoResult {
            image_id: d.image_id,
            category_id: d.category_id,
            bbox: d.bbox.cast::<f64>().to_array(),
            score: d.score.as_f64(),
        })
        .collect();
    Ok(serde_json::to_vec(&out).expect("results serialize"))
}

/// Reads COCO results JSON; every detection gets [`Origin::Global`].
pub fn parse_coco_results<T: Scalar>(bytes: &[u8]) -> Result<Vec<Detection<T>>> {
    let raw: Vec<CocoResult> = serde_json::from_slice(bytes).map_err(|e| json_error(bytes, e))?;
    raw.into_iter()
        .map(|r| {
            let [x, y, w, h] = r.bbox;
            let bbox = BoundingBox::new(T::lit(x), T::lit(y), T::lit(w), T::lit(h))?;
            let det = Detection {
                image_id: r.image_id,
                category_id: r.category_id,
                bbox,
                score: T::lit(r.score),
                origin: Origin::Global,
            };
            if !(0.0..=1.0).contains(&r.score) {
                return Err(Error::Validation(format!("score {} outside [0, 1] on image {}", r.score, r.image_id)));
            }
            Ok(det)
        })
        .collect()
}
