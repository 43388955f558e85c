//! End-to-end run with the oracle detector: annotations, density, mask, crops,
//! detection on the full images and on the crops, fusion, evaluation.

use std::path::Path;

use dmcrop::dataset::{write_coco_dataset, write_coco_detections};
use dmcrop::eval::{evaluate, EvalParams, EvalResult};
use dmcrop::fusion::fuse;
use dmcrop::mask::{write_manifest, CropRegion, DensityMask};
use dmcrop::raster::write_density;
use dmcrop::remap::crop_dataset;
use dmcrop::{DensityMap, Detection};

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::{io, stages};

/// Everything a run produced, in image-id order.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    /// Empty when a uniform grid replaced the density crops.
    pub densities: Vec<DensityMap>,
    pub masks: Vec<DensityMask>,
    pub crops: Vec<CropRegion>,
    pub global: Vec<Detection>,
    /// Crop-local, keyed by crop-image id.
    pub crop_local: Vec<Detection>,
    pub crop_global: Vec<Detection>,
    pub fused: Vec<Detection>,
    pub report: EvalResult,
}

/// File layout written under `--out-dir`.
pub mod layout {
    pub const DENSITY_DIR: &str = "density";
    pub const MASK_DIR: &str = "masks";
    pub const MANIFEST: &str = "crops.jsonl";
    pub const CROP_ANNOTATIONS: &str = "crop_annotations.json";
    pub const GLOBAL_DETS: &str = "dets_global.json";
    pub const CROP_DETS: &str = "dets_crops.json";
    pub const CROP_GLOBAL_DETS: &str = "dets_crops_global.json";
    pub const FUSED_DETS: &str = "dets_fused.json";
    pub const REPORT: &str = "report.json";
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    let pool = stages::thread_pool(cfg.jobs)?;
    let (ds, _) = io::dataset(&cfg.annotations)?;

    let (densities, masks, crops) = match cfg.grid {
        Some(grid) => (Vec::new(), Vec::new(), stages::grid_crops(&ds, grid)?),
        None => {
            let stats = stages::stats_or(&ds, cfg.stats.as_deref())?;
            let densities = match &cfg.density_dir {
                Some(dir) => stages::load_densities(&ds, dir, cfg.preserve_count, &pool)?,
                None => stages::render_all(&ds, &cfg.kernel.spec(&stats)?, &pool)?,
            };
            let params = cfg.mask.params(Some(&stats))?;
            let items: Vec<_> = ds.images().iter().zip(&densities).collect();
            let per_image = stages::par_map(&pool, &items, |(im, d)| {
                stages::mask_and_crops(d, &params, cfg.mask.min_crop, im.id)
            })?;
            let mut masks = Vec::with_capacity(per_image.len());
            let mut crops = Vec::new();
            for ic in per_image {
                masks.push(ic.mask);
                crops.extend(ic.crops);
            }
            (densities, masks, crops)
        }
    };

    let global = stages::oracle_global(&ds, &cfg.miss);
    let crop_local = stages::oracle_crops(&ds, &crops, &cfg.miss);
    let crop_global = stages::crops_to_global(&ds, &crops, &crop_local, 1.0, false)?;
    let fused = fuse(&global, &crop_global, &cfg.fusion)?;
    let params = EvalParams { max_dets: cfg.fusion.max_dets_per_image, ..EvalParams::default() };
    let report = evaluate(&fused, &ds, &params)?;

    let run = PipelineRun { densities, masks, crops, global, crop_local, crop_global, fused, report };
    if let Some(dir) = &cfg.out_dir {
        write_artifacts(dir, &ds, &run, cfg.min_visibility)?;
    }
    Ok(run)
}

fn write_artifacts(dir: &Path, ds: &dmcrop::CocoDataset, run: &PipelineRun, min_visibility: f64) -> Result<()> {
    use layout::*;
    let names = stages::density_file_names(ds.images())?;
    for ((name, d), m) in names.iter().zip(&run.densities).zip(&run.masks) {
        io::write(&dir.join(DENSITY_DIR).join(name), &write_density(d))?;
        let stem = name.trim_end_matches(".dmap");
        io::write(&dir.join(MASK_DIR).join(format!("{stem}.pgm")), &m.to_pgm())?;
    }
    io::write(&dir.join(MANIFEST), &write_manifest(&run.crops))?;
    io::write(&dir.join(CROP_ANNOTATIONS), &write_coco_dataset(&crop_dataset(ds, &run.crops, min_visibility)?))?;
    io::write(&dir.join(GLOBAL_DETS), &write_coco_detections(&run.global)?)?;
    io::write(&dir.join(CROP_DETS), &write_coco_detections(&run.crop_local)?)?;
    io::write(&dir.join(CROP_GLOBAL_DETS), &write_coco_detections(&run.crop_global)?)?;
    io::write(&dir.join(FUSED_DETS), &write_coco_detections(&run.fused)?)?;
    io::write(&dir.join(REPORT), format!("{}\n", run.report.to_json()).as_bytes())?;
    Ok(())
}
