use std::io::Write;
use std::path::{Path, PathBuf};

use dmcrop::dataset::{dataset_stats, write_coco_dataset, write_coco_detections};
use dmcrop::eval::{evaluate, EvalParams};
use dmcrop::fusion::fuse;
use dmcrop::mask::{write_manifest, CropRegion};
use dmcrop::raster::write_density;
use dmcrop::remap::{crop_dataset, crop_file_name};
use dmcrop::CocoDataset;

use crate::args::{Cli, Command, RemapCommand};
use crate::config::{KernelConfig, PipelineConfig};
use crate::error::{CliError, Result};
use crate::overlay::{blank_canvas, render_overlay, Layers};
use crate::pipeline::run_pipeline;
use crate::{io, stages};

fn print_line(out: &mut dyn Write, text: &str) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("value serializes")
}

/// Executes one parsed command line, writing reports to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let jobs = cli.jobs;
    match cli.command {
        Command::Stats { ann } => {
            let (ds, _) = io::dataset(&ann)?;
            print_line(out, &json(&dataset_stats(&ds)?))
        }
        Command::GtDensity { ann, out_dir, kernel } => {
            let pool = stages::thread_pool(jobs)?;
            let (ds, _) = io::dataset(&ann)?;
            let stats = stages::stats_or(&ds, kernel.stats.as_deref())?;
            let spec = KernelConfig::from(&kernel).spec(&stats)?;
            let densities = stages::render_all(&ds, &spec, &pool)?;
            let names = stages::density_file_names(ds.images())?;
            for ((im, d), name) in ds.images().iter().zip(&densities).zip(&names) {
                io::write(&out_dir.join(name), &write_density(d))?;
                let line = serde_json::json!({ "image_id": im.id, "file": name, "sum": d.sum() });
                print_line(out, &line.to_string())?;
            }
            Ok(())
        }
        Command::Mask { density, mask, stats, image_id, upsample, resize, preserve_count, mask_out, manifest } => {
            let cfg = mask.resolve()?;
            let stats = stats.as_deref().map(io::stats).transpose()?;
            let params = cfg.params(stats.as_ref())?;
            let mut d = io::density(&density)?;
            let size = match (upsample, resize) {
                (Some(0), _) => return Err(CliError::Usage("--upsample must be at least 1".into())),
                (Some(f), _) => Some((d.height() * f, d.width() * f)),
                (None, Some(v)) => Some((v[0], v[1])),
                (None, None) => None,
            };
            if let Some((h, w)) = size {
                d = stages::fit_density(d, h, w, preserve_count)?;
            }
            let ic = stages::mask_and_crops(&d, &params, cfg.min_crop, image_id)?;
            let mask_out = mask_out.unwrap_or_else(|| sibling(&density, "mask.pgm"));
            let manifest = manifest.unwrap_or_else(|| sibling(&density, "crops.jsonl"));
            io::write(&mask_out, &ic.mask.to_pgm())?;
            io::write(&manifest, &write_manifest(&ic.crops))?;
            let line = serde_json::json!({ "mask_pixels": ic.mask.count_ones(), "crops": ic.crops.len() });
            print_line(out, &line.to_string())
        }
        Command::Crop {
            ann,
            density_dir,
            preserve_count,
            kernel,
            mask,
            grid,
            out: manifest_path,
            masks_dir,
            image_dir,
            crop_image_dir,
        } => {
            let pool = stages::thread_pool(jobs)?;
            let (ds, _) = io::dataset(&ann)?;
            let crops = match grid.spec() {
                Some(g) => stages::grid_crops(&ds, g)?,
                None => {
                    let cfg = mask.resolve()?;
                    let stats = stages::stats_or(&ds, kernel.stats.as_deref())?;
                    let densities = match &density_dir {
                        Some(dir) => stages::load_densities(&ds, dir, preserve_count, &pool)?,
                        None => stages::render_all(&ds, &KernelConfig::from(&kernel).spec(&stats)?, &pool)?,
                    };
                    let params = cfg.params(Some(&stats))?;
                    let items: Vec<_> = ds.images().iter().zip(&densities).collect();
                    let per_image =
                        stages::par_map(&pool, &items, |(im, d)| stages::mask_and_crops(d, &params, cfg.min_crop, im.id))?;
                    let names = stages::density_file_names(ds.images())?;
                    let mut crops = Vec::new();
                    for (ic, name) in per_image.into_iter().zip(&names) {
                        if let Some(dir) = &masks_dir {
                            io::write(&dir.join(format!("{}.pgm", name.trim_end_matches(".dmap"))), &ic.mask.to_pgm())?;
                        }
                        crops.extend(ic.crops);
                    }
                    crops
                }
            };
            io::write(&manifest_path, &write_manifest(&crops))?;
            if let (Some(src), Some(dst)) = (&image_dir, &crop_image_dir) {
                cut_crops(&ds, &crops, src, dst)?;
            }
            print_line(out, &serde_json::json!({ "images": ds.images().len(), "crops": crops.len() }).to_string())
        }
        Command::Remap(RemapCommand::ToCrops { ann, manifest, min_visibility, out: path }) => {
            let (ds, _) = io::dataset(&ann)?;
            let crops = io::manifest(&manifest)?;
            let crop_ds = crop_dataset(&ds, &crops, min_visibility)?;
            io::write(&path, &write_coco_dataset(&crop_ds))?;
            let line = serde_json::json!({ "images": crop_ds.images().len(), "annotations": crop_ds.annotations().len() });
            print_line(out, &line.to_string())
        }
        Command::Remap(RemapCommand::ToGlobal { ann, manifest, dets, scale, drop_border, out: path }) => {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(CliError::Usage(format!("--scale must be positive, got {scale}")));
            }
            let (ds, _) = io::dataset(&ann)?;
            let crops = io::manifest(&manifest)?;
            let local = io::detections(&dets)?;
            let global = stages::crops_to_global(&ds, &crops, &local, scale, drop_border)?;
            io::write(&path, &write_coco_detections(&global)?)?;
            print_line(out, &serde_json::json!({ "detections": global.len(), "dropped": local.len() - global.len() }).to_string())
        }
        Command::Detect { oracle: _, ann, manifest, miss, out: path } => {
            let (ds, _) = io::dataset(&ann)?;
            let policy = miss.policy()?;
            let dets = match &manifest {
                Some(m) => stages::oracle_crops(&ds, &io::manifest(m)?, &policy),
                None => stages::oracle_global(&ds, &policy),
            };
            io::write(&path, &write_coco_detections(&dets)?)?;
            print_line(out, &serde_json::json!({ "detections": dets.len() }).to_string())
        }
        Command::Fuse { global, crops, fusion, out: path } => {
            let params = fusion.params()?;
            let g = io::detections(&global)?;
            let c = crops.as_deref().map(io::detections).transpose()?.unwrap_or_default();
            let fused = fuse(&g, &c, &params)?;
            io::write(&path, &write_coco_detections(&fused)?)?;
            print_line(out, &serde_json::json!({ "detections": fused.len() }).to_string())
        }
        Command::Eval { ann, dets, max_dets, out: path } => {
            if max_dets == 0 {
                return Err(CliError::Usage("--max-dets must be at least 1".into()));
            }
            let (ds, _) = io::dataset(&ann)?;
            let d = io::detections(&dets)?;
            let report = evaluate(&d, &ds, &EvalParams { max_dets, ..EvalParams::default() })?.to_json();
            if let Some(p) = path {
                io::write(&p, format!("{report}\n").as_bytes())?;
            }
            print_line(out, &report)
        }
        Command::Render { image, size, density, mask, manifest, ann, image_id, out: path } => {
            render(image, size, density, mask, manifest, ann, image_id, &path)?;
            print_line(out, &serde_json::json!({ "written": path }).to_string())
        }
        Command::Pipeline {
            oracle: _,
            ann,
            density_dir,
            preserve_count,
            kernel,
            mask,
            grid,
            fusion,
            miss,
            min_visibility,
            out_dir,
        } => {
            let cfg = PipelineConfig {
                density_dir,
                preserve_count,
                kernel: KernelConfig::from(&kernel),
                stats: kernel.stats.clone(),
                mask: mask.resolve()?,
                grid: grid.spec(),
                fusion: fusion.params()?,
                min_visibility,
                miss: miss.policy()?,
                out_dir,
                jobs,
                ..PipelineConfig::new(ann, mask.profile)?
            };
            let run = run_pipeline(&cfg)?;
            print_line(out, &run.report.to_json())
        }
    }
}

/// `dir/stem.suffix` for an input `dir/stem.ext`.
fn sibling(input: &Path, suffix: &str) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    input.with_file_name(format!("{stem}.{suffix}"))
}

fn cut_crops(ds: &CocoDataset, crops: &[CropRegion], src: &Path, dst: &Path) -> Result<()> {
    let mut current: Option<(u64, image::RgbImage)> = None;
    for c in crops {
        let record = ds
            .image(c.image_id)
            .ok_or_else(|| dmcrop::Error::Integrity(format!("crop references missing image {}", c.image_id)))?;
        if current.as_ref().map(|(id, _)| *id) != Some(c.image_id) {
            let path = src.join(&record.file_name);
            let img = image::open(&path).map_err(|e| CliError::io(&path, e))?.to_rgb8();
            current = Some((c.image_id, img));
        }
        let (_, img) = current.as_ref().expect("image loaded above");
        let r = c.rect;
        if r.x + r.w > img.width() || r.y + r.h > img.height() {
            return Err(dmcrop::Error::Validation(format!("crop {:?} exceeds {}", r, record.file_name)).into());
        }
        let piece = image::imageops::crop_imm(img, r.x, r.y, r.w, r.h).to_image();
        let path = dst.join(crop_file_name(record, c.crop_index));
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        piece.save(&path).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn render(
    image: Option<PathBuf>,
    size: Option<Vec<u32>>,
    density: Option<PathBuf>,
    mask: Option<PathBuf>,
    manifest: Option<PathBuf>,
    ann: Option<PathBuf>,
    image_id: Option<u64>,
    path: &Path,
) -> Result<()> {
    let ds = ann.as_deref().map(io::dataset).transpose()?.map(|(d, _)| d);
    let record = match (&ds, image_id) {
        (Some(d), Some(id)) => Some(d.image(id).ok_or_else(|| dmcrop::Error::Integrity(format!("no image {id}")))?.clone()),
        _ => None,
    };
    let canvas = match (&image, &size, &record) {
        (Some(p), _, _) => image::open(p).map_err(|e| CliError::io(p, e))?.to_rgb8(),
        (None, Some(s), _) => blank_canvas(s[0], s[1]),
        (None, None, Some(r)) => blank_canvas(r.height, r.width),
        (None, None, None) => {
            let d = density.as_deref().map(io::density).transpose()?;
            let m = mask.as_deref().map(io::mask).transpose()?;
            match (d, m) {
                (Some(d), _) => blank_canvas(d.height() as u32, d.width() as u32),
                (None, Some(m)) => blank_canvas(m.height() as u32, m.width() as u32),
                _ => return Err(CliError::Usage("need --image, --size, --ann with --image-id, or a raster".into())),
            }
        }
    };
    let d = density.as_deref().map(io::density).transpose()?;
    let m = mask.as_deref().map(io::mask).transpose()?;
    let mut crops = manifest.as_deref().map(io::manifest).transpose()?.unwrap_or_default();
    if let Some(id) = image_id {
        crops.retain(|c| c.image_id == id);
    }
    let anns: Vec<dmcrop::Annotation> = match (&ds, image_id) {
        (Some(d), Some(id)) => d.annotations_of(id).copied().collect(),
        (Some(d), None) => d.annotations().to_vec(),
        _ => Vec::new(),
    };
    let png = render_overlay(canvas, &Layers { density: d.as_ref(), mask: m.as_ref(), crops: &crops, annotations: &anns })?;
    io::write(path, &png)
}
