//! File access with the offending path attached to every error.

use std::fs;
use std::path::Path;

use dmcrop::dataset::{parse_coco, parse_coco_results, CategoryStats, LoadReport};
use dmcrop::mask::{read_manifest, CropRegion, DensityMask};
use dmcrop::raster::read_density;
use dmcrop::{CocoDataset, DensityMap, Detection};

use crate::error::{CliError, Result};

pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

/// Writes a file, creating missing parent directories.
pub fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn in_file<T>(path: &Path, r: dmcrop::Result<T>) -> Result<T> {
    r.map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

pub fn dataset(path: &Path) -> Result<(CocoDataset, LoadReport)> {
    in_file(path, parse_coco(&read(path)?))
}

pub fn detections(path: &Path) -> Result<Vec<Detection>> {
    in_file(path, parse_coco_results(&read(path)?))
}

pub fn manifest(path: &Path) -> Result<Vec<CropRegion>> {
    in_file(path, read_manifest(&read(path)?))
}

pub fn density(path: &Path) -> Result<DensityMap> {
    in_file(path, read_density(&read(path)?))
}

pub fn mask(path: &Path) -> Result<DensityMask> {
    in_file(path, DensityMask::from_pgm(&read(path)?))
}

pub fn stats(path: &Path) -> Result<CategoryStats<f64>> {
    serde_json::from_slice(&read(path)?).map_err(|e| CliError::io(path, e))
}
