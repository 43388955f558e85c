//! Density-map guided cropping for aerial object detection.
//!
//! The pipeline renders object density maps from box annotations, thresholds
//! them with a sliding window into a binary mask, turns 8-connected mask
//! components into crop rectangles, and fuses detections from the crops with
//! detections on the full image. A COCO-style evaluator and a ground-truth
//! oracle detector make the whole chain testable without trained models.
//!
//! Geometry, rasters and the numeric stages are generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the common choices. Density maps
//! exchanged through files are always `f32`.

pub mod dataset;
pub mod density;
pub mod detection;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod mask;
pub mod oracle;
pub mod raster;
pub mod remap;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Box with `f64` coordinates.
pub type BBox = geometry::BoundingBox<f64>;
/// Box with `f32` coordinates.
pub type BBox32 = geometry::BoundingBox<f32>;
/// Density map as stored in `DMAP` files.
pub type DensityMap = raster::Raster<f32>;
/// Density map with `f64` accumulation.
pub type DensityMap64 = raster::Raster<f64>;
pub type CocoDataset = dataset::Dataset<f64>;
pub type Annotation = dataset::Annotation<f64>;
pub type Detection = detection::Detection<f64>;
pub type CategoryStats = dataset::CategoryStats<f64>;
pub type KernelSpec = density::KernelSpec<f64>;
pub type MaskParams = mask::MaskParams<f32>;
pub type FusionParams = fusion::FusionParams<f64>;
