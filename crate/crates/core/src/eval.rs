//! COCO-style average precision.
//!
//! Follows the reference COCO evaluator for boxes: per image and category,
//! detections (sorted by score, capped at `max_dets`) are greedily matched to the
//! best unmatched ground truth with IoU at least the threshold, preferring
//! in-bucket ground truth. Precision is made monotone and read off at 101 recall
//! points. Size buckets use [`AreaClass`]; unmatched detections outside the bucket
//! are ignored.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::dataset::{Annotation, Dataset};
use crate::detection::Detection;
use crate::error::{Error, Result};
use crate::geometry::{AreaClass, BoundingBox};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalParams {
    pub iou_thresholds: Vec<f64>,
    pub recall_points: usize,
    pub max_dets: usize,
}

impl Default for EvalParams {
    /// IoU 0.50:0.05:0.95, 101 recall points, 500 detections per image.
    fn default() -> Self {
        EvalParams {
            iou_thresholds: (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect(),
            recall_points: 101,
            max_dets: 500,
        }
    }
}

/// Summary metrics; `None` marks a bucket with no ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_small: Option<f64>,
    pub ap_medium: Option<f64>,
    pub ap_large: Option<f64>,
    pub per_category: BTreeMap<u64, Option<f64>>,
}

#[derive(Serialize)]
struct Report<'a> {
    #[serde(rename = "AP")]
    ap: f64,
    #[serde(rename = "AP50")]
    ap50: f64,
    #[serde(rename = "AP75")]
    ap75: f64,
    #[serde(rename = "APs")]
    ap_small: f64,
    #[serde(rename = "APm")]
    ap_medium: f64,
    #[serde(rename = "APl")]
    ap_large: f64,
    per_category: BTreeMap<&'a str, f64>,
}

impl EvalResult {
    /// JSON report; undefined metrics are written as -1. Categories are keyed by id.
    pub fn to_json(&self) -> String {
        let keys: Vec<String> = self.per_category.keys().map(|k| k.to_string()).collect();
        let or_neg = |v: Option<f64>| v.unwrap_or(-1.0);
        let report = Report {
            ap: or_neg(self.ap),
            ap50: or_neg(self.ap50),
            ap75: or_neg(self.ap75),
            ap_small: or_neg(self.ap_small),
            ap_medium: or_neg(self.ap_medium),
            ap_large: or_neg(self.ap_large),
            per_category: keys.iter().map(String::as_str).zip(self.per_category.values().map(|v| or_neg(*v))).collect(),
        };
        serde_json::to_string(&report).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bucket {
    All,
    Size(AreaClass),
}

impl Bucket {
    fn admits(self, area: f64) -> bool {
        match self {
            Bucket::All => true,
            Bucket::Size(c) => AreaClass::of_area(area) == c,
        }
    }
}

/// Per-image matching outcome for one category, bucket and all thresholds.
struct ImageEval {
    scores: Vec<f64>,
    /// `matched[t][d]`
    matched: Vec<Vec<bool>>,
    ignored: Vec<Vec<bool>>,
    relevant_gt: usize,
}

fn evaluate_image(gts: &[BoundingBox<f64>], dts: &[(f64, BoundingBox<f64>)], bucket: Bucket, p: &EvalParams) -> ImageEval {
    let mut gt_order: Vec<(bool, &BoundingBox<f64>)> = gts.iter().map(|g| (!bucket.admits(g.area()), g)).collect();
    // in-bucket ground truth first, stable
    gt_order.sort_by_key(|(ignore, _)| *ignore);
    let relevant_gt = gt_order.iter().filter(|(ig, _)| !ig).count();

    let mut dt_order: Vec<&(f64, BoundingBox<f64>)> = dts.iter().collect();
    dt_order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    dt_order.truncate(p.max_dets);

    let ious: Vec<Vec<f64>> = dt_order.iter().map(|(_, d)| gt_order.iter().map(|(_, g)| d.iou(g)).collect()).collect();
    let nt = p.iou_thresholds.len();
    let mut matched = vec![vec![false; dt_order.len()]; nt];
    let mut ignored = vec![vec![false; dt_order.len()]; nt];
    for (t, &thr) in p.iou_thresholds.iter().enumerate() {
        let mut gt_taken = vec![false; gt_order.len()];
        for (d, (_, dbox)) in dt_order.iter().enumerate() {
            let mut best_iou = thr.min(1.0 - 1e-10);
            let mut best: Option<usize> = None;
            for (g, &(g_ignored, _)) in gt_order.iter().enumerate() {
                if gt_taken[g] {
                    continue;
                }
                // already matched an in-bucket box; the rest are ignored ones
                if let Some(m) = best {
                    if !gt_order[m].0 && g_ignored {
                        break;
                    }
                }
                if ious[d][g] < best_iou {
                    continue;
                }
                best_iou = ious[d][g];
                best = Some(g);
            }
            match best {
                Some(m) => {
                    gt_taken[m] = true;
                    matched[t][d] = true;
                    ignored[t][d] = gt_order[m].0;
                }
                None => ignored[t][d] = !bucket.admits(dbox.area()),
            }
        }
    }
    ImageEval { scores: dt_order.iter().map(|(s, _)| *s).collect(), matched, ignored, relevant_gt }
}

/// Interpolated precision at each recall point for every threshold, or `None`
/// when the bucket has no ground truth for this category.
fn accumulate(evals: &[ImageEval], p: &EvalParams) -> Option<Vec<Vec<f64>>> {
    let npig: usize = evals.iter().map(|e| e.relevant_gt).sum();
    if npig == 0 {
        return None;
    }
    // (score, image, detection), stable by image order for equal scores
    let mut order: Vec<(f64, usize, usize)> =
        evals.iter().enumerate().flat_map(|(i, e)| e.scores.iter().enumerate().map(move |(d, &s)| (s, i, d))).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));

    let recall_thresholds: Vec<f64> =
        (0..p.recall_points).map(|i| i as f64 / (p.recall_points - 1).max(1) as f64).collect();
    let mut out = Vec::with_capacity(p.iou_thresholds.len());
    for t in 0..p.iou_thresholds.len() {
        let (mut tp, mut fp) = (0usize, 0usize);
        let mut recall = Vec::with_capacity(order.len());
        let mut precision = Vec::with_capacity(order.len());
        for &(_, i, d) in &order {
            if evals[i].ignored[t][d] {
                // ignored detections still occupy a rank with unchanged counts
            } else if evals[i].matched[t][d] {
                tp += 1;
            } else {
                fp += 1;
            }
            recall.push(tp as f64 / npig as f64);
            precision.push(if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 });
        }
        for k in (1..precision.len()).rev() {
            if precision[k] > precision[k - 1] {
                precision[k - 1] = precision[k];
            }
        }
        let q = recall_thresholds
            .iter()
            .map(|&r| {
                let idx = recall.partition_point(|&rc| rc < r);
                precision.get(idx).copied().unwrap_or(0.0)
            })
            .collect();
        out.push(q);
    }
    Some(out)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores detections against a ground-truth dataset.
pub fn evaluate<T: Scalar>(dets: &[Detection<T>], gt: &Dataset<T>, params: &EvalParams) -> Result<EvalResult> {
    if params.iou_thresholds.is_empty() || params.recall_points == 0 || params.max_dets == 0 {
        return Err(Error::InvalidParameter("evaluation needs thresholds, recall points and max_dets".into()));
    }
    type Key = (u64, u64);
    let mut det_groups: HashMap<Key, Vec<(f64, BoundingBox<f64>)>> = HashMap::new();
    for d in dets {
        if !gt.categories().contains_key(&d.category_id) {
            return Err(Error::UnknownCategory(d.category_id));
        }
        if gt.image(d.image_id).is_none() {
            return Err(Error::Integrity(format!("detection references missing image {}", d.image_id)));
        }
        det_groups.entry((d.image_id, d.category_id)).or_default().push((d.score.as_f64(), d.bbox.cast()));
    }
    let mut gt_groups: HashMap<Key, Vec<BoundingBox<f64>>> = HashMap::new();
    for a in gt.annotations() {
        let a: &Annotation<T> = a;
        gt_groups.entry((a.image_id, a.category_id)).or_default().push(a.bbox.cast());
    }

    let buckets = [Bucket::All, Bucket::Size(AreaClass::Small), Bucket::Size(AreaClass::Medium), Bucket::Size(AreaClass::Large)];
    // precision[bucket][category] = per-threshold, per-recall-point precision
    let mut precision: Vec<BTreeMap<u64, Option<Vec<Vec<f64>>>>> = Vec::with_capacity(buckets.len());
    for &bucket in &buckets {
        let mut per_cat = BTreeMap::new();
        for &cat in gt.categories().keys() {
            let evals: Vec<ImageEval> = gt
                .images()
                .iter()
                .filter_map(|im| {
                    let g = gt_groups.get(&(im.id, cat)).map(Vec::as_slice).unwrap_or(&[]);
                    let d = det_groups.get(&(im.id, cat)).map(Vec::as_slice).unwrap_or(&[]);
                    (!g.is_empty() || !d.is_empty()).then(|| evaluate_image(g, d, bucket, params))
                })
                .collect();
            per_cat.insert(cat, accumulate(&evals, params));
        }
        precision.push(per_cat);
    }

    let summarize = |b: usize, threshold: Option<usize>| -> Option<f64> {
        mean(precision[b].values().flatten().flat_map(|per_t| {
            per_t.iter().enumerate().filter(move |(t, _)| threshold.is_none_or(|x| x == *t)).flat_map(|(_, q)| q.iter().copied())
        }))
    };
    let t50 = params.iou_thresholds.iter().position(|&t| (t - 0.5).abs() < 1e-9);
    let t75 = params.iou_thresholds.iter().position(|&t| (t - 0.75).abs() < 1e-9);
    Ok(EvalResult {
        ap: summarize(0, None),
        ap50: t50.and_then(|t| summarize(0, Some(t))),
        ap75: t75.and_then(|t| summarize(0, Some(t))),
        ap_small: summarize(1, None),
        ap_medium: summarize(2, None),
        ap_large: summarize(3, None),
        per_category: precision[0]
            .iter()
            .map(|(&cat, p)| (cat, p.as_ref().and_then(|per_t| mean(per_t.iter().flatten().copied()))))
            .collect(),
    })
}
