//! Per-stage batch drivers shared by the subcommands and `pipeline`.
//!
//! Images are processed on a bounded worker pool; results always come back in
//! image-id order.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dmcrop::dataset::{CategoryStats, ImageRecord};
use dmcrop::density::{render_density, upsample_bicubic, KernelSpec, UpsampleTarget};
use dmcrop::mask::{crops_from_mask, density_mask, uniform_grid, CropRegion, DensityMask, MaskParams};
use dmcrop::oracle::{oracle_detect, MissPolicy, Region};
use dmcrop::remap::{backproject_detections, touches_crop_border, CropImageIndex};
use dmcrop::{CocoDataset, DensityMap, Detection};
use rayon::prelude::*;

use crate::config::GridSpec;
use crate::error::{CliError, Result};
use crate::io;

pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))
}

/// Maps `f` over `items` in parallel. On failure the error of the earliest item
/// is returned, whichever worker finished first.
pub fn par_map<T: Sync, R: Send>(
    pool: &rayon::ThreadPool,
    items: &[T],
    f: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let results: Vec<Result<R>> = pool.install(|| items.par_iter().map(&f).collect());
    results.into_iter().collect()
}

/// `<stem>.dmap`, unique per dataset.
pub fn density_file_names(images: &[ImageRecord]) -> Result<Vec<String>> {
    let mut seen = BTreeSet::new();
    images
        .iter()
        .map(|im| {
            let name = format!("{}.dmap", im.stem());
            if !seen.insert(name.clone()) {
                return Err(CliError::Usage(format!("two images share the file stem of {:?}", im.file_name)));
            }
            Ok(name)
        })
        .collect()
}

/// Ground-truth density of one image, stored as `f32`.
pub fn render_image(ds: &CocoDataset, image: &ImageRecord, spec: &KernelSpec<f64>) -> Result<DensityMap> {
    let anns: Vec<_> = ds.annotations_of(image.id).copied().collect();
    let d = render_density(image.height as usize, image.width as usize, &anns, spec)?;
    Ok(d.cast())
}

pub fn render_all(ds: &CocoDataset, spec: &KernelSpec<f64>, pool: &rayon::ThreadPool) -> Result<Vec<DensityMap>> {
    par_map(pool, ds.images(), |im| render_image(ds, im, spec))
}

/// Brings a predicted map to the image resolution. With `preserve_count` the
/// values are scaled so the integral is unchanged.
pub fn fit_density(d: DensityMap, height: usize, width: usize, preserve_count: bool) -> Result<DensityMap> {
    if d.shape() == (height, width) {
        return Ok(d);
    }
    let (sh, sw) = d.shape();
    let up = upsample_bicubic(&d, UpsampleTarget::Size { height, width })?;
    if !preserve_count {
        return Ok(up);
    }
    let k = ((sh * sw) as f64 / (height * width) as f64) as f32;
    Ok(up.map(|v| v * k))
}

/// Reads `<dir>/<stem>.dmap` for every image, upsampled to the image size.
pub fn load_densities(
    ds: &CocoDataset,
    dir: &Path,
    preserve_count: bool,
    pool: &rayon::ThreadPool,
) -> Result<Vec<DensityMap>> {
    let names = density_file_names(ds.images())?;
    let jobs: Vec<(&ImageRecord, PathBuf)> = ds.images().iter().zip(names).map(|(im, n)| (im, dir.join(n))).collect();
    par_map(pool, &jobs, |(im, path)| {
        let d = io::density(path)?;
        fit_density(d, im.height as usize, im.width as usize, preserve_count)
            .map_err(|e| CliError::io(path, e))
    })
}

pub struct ImageCrops {
    pub mask: DensityMask,
    pub crops: Vec<CropRegion>,
}

pub fn mask_and_crops(density: &DensityMap, params: &MaskParams<f32>, min_crop: u32, image_id: u64) -> Result<ImageCrops> {
    let mask = density_mask(density, params)?;
    let crops = crops_from_mask(&mask, min_crop, image_id, params.threshold as f64);
    Ok(ImageCrops { mask, crops })
}

pub fn grid_crops(ds: &CocoDataset, grid: GridSpec) -> Result<Vec<CropRegion>> {
    let mut out = Vec::new();
    for im in ds.images() {
        out.extend(uniform_grid(im.height, im.width, grid.rows, grid.cols, grid.overlap, im.id)?);
    }
    Ok(out)
}

/// Statistics from `--stats` when given, otherwise from the annotations.
pub fn stats_or(ds: &CocoDataset, path: Option<&Path>) -> Result<CategoryStats<f64>> {
    match path {
        Some(p) => io::stats(p),
        None => Ok(dmcrop::dataset::dataset_stats(ds)?),
    }
}

/// Oracle detections on every full image, in image order.
pub fn oracle_global(ds: &CocoDataset, miss: &MissPolicy) -> Vec<Detection> {
    ds.images().iter().flat_map(|im| oracle_detect(Region::FullImage(im.id), ds, miss)).collect()
}

/// Oracle detections per crop, in crop-local coordinates and keyed by the
/// synthetic crop-image id (crops numbered from 1 in manifest order).
pub fn oracle_crops(ds: &CocoDataset, crops: &[CropRegion], miss: &MissPolicy) -> Vec<Detection> {
    let index = CropImageIndex::new(crops);
    let mut out = Vec::new();
    for (&crop_image_id, crop) in &index.by_crop_image {
        out.extend(oracle_detect(Region::Crop(crop), ds, miss).into_iter().map(|d| Detection { image_id: crop_image_id, ..d }));
    }
    out
}

/// Maps crop-level detections back to their source images. Detections are
/// handled in input order; ones touching the crop edge are skipped with `drop_border`.
pub fn crops_to_global(
    ds: &CocoDataset,
    crops: &[CropRegion],
    dets: &[Detection],
    scale: f64,
    drop_border: bool,
) -> Result<Vec<Detection>> {
    let index = CropImageIndex::new(crops);
    let mut out = Vec::with_capacity(dets.len());
    for d in dets {
        let crop = index
            .crop(d.image_id)
            .ok_or_else(|| dmcrop::Error::Integrity(format!("detection references missing crop image {}", d.image_id)))?;
        let image = ds
            .image(crop.image_id)
            .ok_or_else(|| dmcrop::Error::Integrity(format!("crop references missing image {}", crop.image_id)))?;
        if drop_border && touches_crop_border(&d.bbox.scale(scale), crop) {
            continue;
        }
        out.extend(backproject_detections(crop, std::slice::from_ref(d), scale, image.width, image.height).detections);
    }
    Ok(out)
}
