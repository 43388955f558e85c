//! Ground-truth density rendering and density-map comparison.
//!
//! Every object contributes a discrete Gaussian centered on the pixel containing
//! its box center. The kernel is a square of radius `ceil(truncation_sigmas * sigma)`
//! pixels, normalized to sum to 1 before it is clipped at the image border, so an
//! object whose kernel lies inside the image adds exactly one unit of mass.

use std::collections::HashMap;

use crate::dataset::{Annotation, CategoryStats};
use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::scalar::Scalar;

pub const DEFAULT_FIXED_SIGMA: f64 = 15.0;
pub const DEFAULT_BETA: f64 = 0.3;
pub const DEFAULT_KNN: usize = 3;
pub const DEFAULT_TRUNCATION_SIGMAS: f64 = 4.0;

/// How the spread of each object's Gaussian is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelMode<T> {
    /// One sigma for every object.
    Fixed { sigma: T },
    /// `sigma = beta * mean distance to the k nearest other objects`; images with a
    /// single object use `fallback_sigma`.
    Adaptive { beta: T, k: usize, fallback_sigma: T },
    /// Half the diagonal of the category's mean box.
    ClassWise(CategoryStats<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec<T> {
    pub mode: KernelMode<T>,
    pub truncation_sigmas: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn fixed(sigma: T) -> Self {
        KernelSpec { mode: KernelMode::Fixed { sigma }, truncation_sigmas: T::lit(DEFAULT_TRUNCATION_SIGMAS) }
    }

    pub fn adaptive(beta: T, k: usize, fallback_sigma: T) -> Self {
        KernelSpec {
            mode: KernelMode::Adaptive { beta, k, fallback_sigma },
            truncation_sigmas: T::lit(DEFAULT_TRUNCATION_SIGMAS),
        }
    }

    pub fn class_wise(stats: CategoryStats<T>) -> Self {
        KernelSpec { mode: KernelMode::ClassWise(stats), truncation_sigmas: T::lit(DEFAULT_TRUNCATION_SIGMAS) }
    }

    pub fn with_truncation(mut self, sigmas: T) -> Self {
        self.truncation_sigmas = sigmas;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T, what: &str| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{what} must be positive, got {v}")))
            }
        };
        positive(self.truncation_sigmas, "truncation radius")?;
        match &self.mode {
            KernelMode::Fixed { sigma } => positive(*sigma, "sigma"),
            KernelMode::Adaptive { beta, k, fallback_sigma } => {
                positive(*beta, "beta")?;
                positive(*fallback_sigma, "fallback sigma")?;
                if *k == 0 {
                    return Err(Error::InvalidParameter("k must be at least 1".into()));
                }
                Ok(())
            }
            KernelMode::ClassWise(_) => Ok(()),
        }
    }
}

/// Class-wise spread: `0.5 * sqrt(mean_h^2 + mean_w^2)`.
pub fn sigma_classwise<T: Scalar>(stats: &CategoryStats<T>, category_id: u64) -> Result<T> {
    let scale = stats.category(category_id).ok_or(Error::UnknownCategory(category_id))?;
    if scale.count == 0 || !(scale.mean_h > T::zero()) || !(scale.mean_w > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "category {category_id} has degenerate mean scale {}x{}",
            scale.mean_w, scale.mean_h
        )));
    }
    Ok(T::lit(0.5) * scale.mean_h.hypot(scale.mean_w))
}

/// Geometry-adaptive spread of `centers[index]`: `beta` times the mean distance to
/// its `k` nearest other centers.
pub fn sigma_adaptive<T: Scalar>(centers: &[(T, T)], index: usize, beta: T, k: usize) -> Result<T> {
    if centers.len() < 2 {
        return Err(Error::IsolatedObject);
    }
    if index >= centers.len() {
        return Err(Error::InvalidParameter(format!("index {index} out of {} centers", centers.len())));
    }
    if k == 0 || k > centers.len() - 1 {
        return Err(Error::InvalidParameter(format!("k = {k} with only {} neighbours", centers.len() - 1)));
    }
    let (cx, cy) = centers[index];
    let mut dists: Vec<T> = centers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != index)
        .map(|(_, &(x, y))| (x - cx).hypot(y - cy))
        .collect();
    dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
    let mut nearest = dists[..k].to_vec();
    nearest.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total = nearest.iter().fold(T::zero(), |acc, &d| acc + d);
    Ok(beta * total / T::lit(k as f64))
}

/// Normalized 1-D Gaussian taps for offsets `-r..=r`.
fn gaussian_taps(sigma: f64, truncation_sigmas: f64) -> Vec<f64> {
    let radius = (truncation_sigmas * sigma).ceil().max(0.0) as i64;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / denom).exp()).collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    taps
}

/// Adds one normalized kernel centered at pixel `(cy, cx)`, clipped to the raster.
fn splat<T: Scalar>(raster: &mut Raster<T>, cy: usize, cx: usize, taps: &[f64]) {
    let radius = (taps.len() / 2) as i64;
    let (h, w) = (raster.height() as i64, raster.width() as i64);
    let (cy, cx) = (cy as i64, cx as i64);
    let x_lo = (cx - radius).max(0);
    let x_hi = (cx + radius).min(w - 1);
    if x_lo > x_hi {
        return;
    }
    for y in (cy - radius).max(0)..=(cy + radius).min(h - 1) {
        let wy = taps[(y - cy + radius) as usize];
        let row = raster.row_mut(y as usize);
        let kx = &taps[(x_lo - cx + radius) as usize..=(x_hi - cx + radius) as usize];
        for (dst, &wx) in row[x_lo as usize..=x_hi as usize].iter_mut().zip(kx) {
            *dst += T::lit(wy * wx);
        }
    }
}

/// Renders the density map of one image of size `height × width`.
pub fn render_density<T: Scalar>(
    height: usize,
    width: usize,
    annotations: &[Annotation<T>],
    spec: &KernelSpec<T>,
) -> Result<Raster<T>> {
    spec.validate()?;
    let mut raster = Raster::zeros(height, width);
    if height == 0 || width == 0 || annotations.is_empty() {
        return Ok(raster);
    }
    let centers: Vec<(T, T)> = annotations.iter().map(|a| a.bbox.center()).collect();
    let sigmas: Vec<T> = match &spec.mode {
        KernelMode::Fixed { sigma } => vec![*sigma; annotations.len()],
        KernelMode::ClassWise(stats) => {
            annotations.iter().map(|a| sigma_classwise(stats, a.category_id)).collect::<Result<_>>()?
        }
        KernelMode::Adaptive { beta, k, fallback_sigma } => {
            if annotations.len() == 1 {
                vec![*fallback_sigma]
            } else {
                let k = (*k).min(annotations.len() - 1);
                (0..centers.len())
                    .map(|i| {
                        // coincident neighbours give a zero spread
                        sigma_adaptive(&centers, i, *beta, k).map(|s| if s > T::zero() { s } else { *fallback_sigma })
                    })
                    .collect::<Result<_>>()?
            }
        }
    };
    let trunc = spec.truncation_sigmas.as_f64();
    let mut cache: HashMap<u64, Vec<f64>> = HashMap::new();
    for (&(cx, cy), sigma) in centers.iter().zip(sigmas) {
        if !(sigma.is_finite() && sigma > T::zero()) {
            return Err(Error::InvalidParameter(format!("kernel sigma must be positive, got {sigma}")));
        }
        let s = sigma.as_f64();
        let taps = cache.entry(s.to_bits()).or_insert_with(|| gaussian_taps(s, trunc));
        let px = (cx.as_f64().floor().max(0.0) as usize).min(width - 1);
        let py = (cy.as_f64().floor().max(0.0) as usize).min(height - 1);
        splat(&mut raster, py, px, taps);
    }
    Ok(raster)
}

/// Output grid for [`upsample_bicubic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpsampleTarget {
    Factor(usize),
    Size { height: usize, width: usize },
}

/// Catmull-Rom cubic convolution weight (`a = -0.5`).
fn cubic_weight(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Four source indices (edge-clamped) and weights for continuous coordinate `src`.
fn cubic_taps(src: f64, len: usize) -> ([usize; 4], [f64; 4]) {
    let base = src.floor();
    let t = src - base;
    let base = base as i64;
    let last = len as i64 - 1;
    let mut idx = [0usize; 4];
    let mut wts = [0f64; 4];
    for k in 0..4 {
        idx[k] = (base - 1 + k as i64).clamp(0, last) as usize;
        wts[k] = cubic_weight(t - (k as f64 - 1.0));
    }
    (idx, wts)
}

/// Per-output-sample taps for resizing `src_len` samples to `dst_len`, mapping
/// pixel centers to pixel centers.
fn resize_taps(src_len: usize, dst_len: usize) -> Vec<([usize; 4], [f64; 4])> {
    let ratio = src_len as f64 / dst_len as f64;
    (0..dst_len).map(|d| cubic_taps((d as f64 + 0.5) * ratio - 0.5, src_len)).collect()
}

/// Evaluates the continuous bicubic interpolant at source coordinates `(y, x)`,
/// where integer coordinates are sample sites. Interpolates the source samples exactly.
pub fn sample_bicubic<T: Scalar>(r: &Raster<T>, y: f64, x: f64) -> f64 {
    let (yi, yw) = cubic_taps(y, r.height());
    let (xi, xw) = cubic_taps(x, r.width());
    let mut acc = 0.0;
    for (&row, &wy) in yi.iter().zip(&yw) {
        let line = r.row(row);
        let inner: f64 = xi.iter().zip(&xw).map(|(&c, &wx)| wx * line[c].as_f64()).sum();
        acc += wy * inner;
    }
    acc
}

/// Separable Catmull-Rom upsampling. Negative overshoot is clamped to zero.
pub fn upsample_bicubic<T: Scalar>(r: &Raster<T>, target: UpsampleTarget) -> Result<Raster<T>> {
    let (sh, sw) = r.shape();
    if sh == 0 || sw == 0 {
        return Err(Error::InvalidParameter("cannot upsample an empty raster".into()));
    }
    let (dh, dw) = match target {
        UpsampleTarget::Factor(0) => return Err(Error::InvalidParameter("upsampling factor must be >= 1".into())),
        UpsampleTarget::Factor(f) => (sh * f, sw * f),
        UpsampleTarget::Size { height, width } => (height, width),
    };
    if dh < sh || dw < sw {
        return Err(Error::InvalidParameter(format!("target {dh}x{dw} is smaller than source {sh}x{sw}")));
    }
    let col_taps = resize_taps(sw, dw);
    let row_taps = resize_taps(sh, dh);

    let mut horizontal = vec![0f64; sh * dw];
    for y in 0..sh {
        let src = r.row(y);
        let dst = &mut horizontal[y * dw..(y + 1) * dw];
        for (out, (idx, wts)) in dst.iter_mut().zip(&col_taps) {
            *out = (0..4).map(|k| wts[k] * src[idx[k]].as_f64()).sum();
        }
    }
    let mut out = Raster::zeros(dh, dw);
    for (y, (idx, wts)) in row_taps.iter().enumerate() {
        let rows: [&[f64]; 4] = std::array::from_fn(|k| &horizontal[idx[k] * dw..(idx[k] + 1) * dw]);
        for (x, dst) in out.row_mut(y).iter_mut().enumerate() {
            let v: f64 = (0..4).map(|k| wts[k] * rows[k][x]).sum();
            *dst = T::lit(v.max(0.0));
        }
    }
    Ok(out)
}

/// Comparison of a predicted density map against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DensityError {
    /// Sum of squared differences divided by `2 * n_images`.
    pub loss: f64,
    /// `loss` further divided by the pixel count.
    pub loss_per_pixel: f64,
    /// Mean absolute per-pixel difference.
    pub mae: f64,
    /// `|sum(pred) - sum(gt)|`
    pub count_error: f64,
}

pub fn density_error<T: Scalar>(pred: &Raster<T>, gt: &Raster<T>, n_images: usize) -> Result<DensityError> {
    if pred.shape() != gt.shape() {
        return Err(Error::ShapeMismatch { left: pred.shape(), right: gt.shape() });
    }
    if n_images == 0 {
        return Err(Error::InvalidParameter("n_images must be at least 1".into()));
    }
    let pixels = pred.as_slice().len().max(1) as f64;
    let (mut sq, mut abs) = (0.0f64, 0.0f64);
    for (p, g) in pred.as_slice().iter().zip(gt.as_slice()) {
        let d = p.as_f64() - g.as_f64();
        sq += d * d;
        abs += d.abs();
    }
    let loss = sq / (2.0 * n_images as f64);
    Ok(DensityError {
        loss,
        loss_per_pixel: loss / pixels,
        mae: abs / pixels,
        count_error: (pred.sum() - gt.sum()).abs(),
    })
}

/// Loss over a set of image pairs: squared norms summed and divided by `2N`;
/// `mae` and `count_error` are averaged over images.
pub fn density_error_batch<T: Scalar>(pairs: &[(Raster<T>, Raster<T>)]) -> Result<DensityError> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no image pairs".into()));
    }
    let n = pairs.len();
    let mut acc = DensityError { loss: 0.0, loss_per_pixel: 0.0, mae: 0.0, count_error: 0.0 };
    for (p, g) in pairs {
        let e = density_error(p, g, n)?;
        acc.loss += e.loss;
        acc.loss_per_pixel += e.loss_per_pixel;
        acc.mae += e.mae / n as f64;
        acc.count_error += e.count_error / n as f64;
    }
    Ok(acc)
}
