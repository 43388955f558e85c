//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dmcrop::density::{DEFAULT_BETA, DEFAULT_FIXED_SIGMA, DEFAULT_KNN, DEFAULT_TRUNCATION_SIGMAS};
use dmcrop::fusion::DEFAULT_MAX_DETS;
use dmcrop::oracle::MissPolicy;
use dmcrop::remap::DEFAULT_MIN_VISIBILITY;

use crate::config::{GridSpec, KernelConfig, KernelKind, MaskConfig, NmsProfile, Profile};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "dmcrop", version, about = "Density-map guided cropping for aerial object detection")]
pub struct Cli {
    /// Worker threads for per-image stages. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-category mean box size as JSON.
    Stats {
        #[arg(long)]
        ann: PathBuf,
    },
    /// Renders a ground-truth density map (`<stem>.dmap`) for every image.
    GtDensity {
        #[arg(long)]
        ann: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Density mask and crop manifest for one density map.
    Mask {
        #[arg(long)]
        density: PathBuf,
        #[command(flatten)]
        mask: MaskArgs,
        /// Category statistics used for the default window size.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Image id written into the manifest.
        #[arg(long, default_value_t = 0)]
        image_id: u64,
        /// Upsample the map by an integer factor first.
        #[arg(long, conflicts_with = "resize")]
        upsample: Option<usize>,
        /// Upsample the map to this size first.
        #[arg(long, num_args = 2, value_names = ["H", "W"])]
        resize: Option<Vec<usize>>,
        #[arg(long)]
        preserve_count: bool,
        /// Defaults to `<density stem>.mask.pgm` next to the input.
        #[arg(long)]
        mask_out: Option<PathBuf>,
        /// Defaults to `<density stem>.crops.jsonl` next to the input.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Crop manifest for a whole dataset, from density maps or a uniform grid.
    Crop {
        #[arg(long)]
        ann: PathBuf,
        /// Density maps named `<stem>.dmap`; rendered from the annotations when absent.
        #[arg(long)]
        density_dir: Option<PathBuf>,
        #[arg(long)]
        preserve_count: bool,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        mask: MaskArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write each mask as `<stem>.pgm` here.
        #[arg(long)]
        masks_dir: Option<PathBuf>,
        /// Source images, for cutting crop pixels.
        #[arg(long, requires = "crop_image_dir")]
        image_dir: Option<PathBuf>,
        /// Where cut crops are written as `<stem>_crop<k>.jpg`.
        #[arg(long, requires = "image_dir")]
        crop_image_dir: Option<PathBuf>,
    },
    /// Moves annotations into crops or detections out of them.
    #[command(subcommand)]
    Remap(RemapCommand),
    /// Oracle detections from ground truth.
    Detect {
        /// Use the ground-truth oracle (the only detector available).
        #[arg(long, required = true)]
        oracle: bool,
        #[arg(long)]
        ann: PathBuf,
        /// Detect inside these crops instead of on full images. Output is
        /// crop-local, one synthetic image id per crop (from 1, manifest order).
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        miss: MissArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fuses global and crop detections with class-aware NMS.
    Fuse {
        #[arg(long)]
        global: PathBuf,
        #[arg(long)]
        crops: Option<PathBuf>,
        #[command(flatten)]
        fusion: FusionArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// COCO-style AP of detections against annotations.
    Eval {
        #[arg(long)]
        ann: PathBuf,
        #[arg(long)]
        dets: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_DETS)]
        max_dets: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlay of density, mask, crops and boxes as PNG.
    Render {
        /// Background image; a black canvas is used otherwise.
        #[arg(long)]
        image: Option<PathBuf>,
        /// Canvas size when there is no image or annotation file.
        #[arg(long, num_args = 2, value_names = ["H", "W"])]
        size: Option<Vec<u32>>,
        #[arg(long)]
        density: Option<PathBuf>,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        ann: Option<PathBuf>,
        /// Which image's crops and boxes to draw.
        #[arg(long)]
        image_id: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs every stage with the oracle detector and prints the evaluation.
    Pipeline {
        #[arg(long, required = true)]
        oracle: bool,
        #[arg(long)]
        ann: PathBuf,
        #[arg(long)]
        density_dir: Option<PathBuf>,
        #[arg(long)]
        preserve_count: bool,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        mask: MaskArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        fusion: FusionArgs,
        #[command(flatten)]
        miss: MissArgs,
        #[arg(long, default_value_t = DEFAULT_MIN_VISIBILITY)]
        min_visibility: f64,
        /// Write every intermediate artifact here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RemapCommand {
    /// Crop-level COCO annotations, one image record per crop.
    ToCrops {
        #[arg(long)]
        ann: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_VISIBILITY)]
        min_visibility: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Crop-level detections back in image coordinates.
    ToGlobal {
        #[arg(long)]
        ann: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        dets: PathBuf,
        /// Crop pixels per detector pixel.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Discard detections touching the crop edge.
        #[arg(long)]
        drop_border: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value_t = KernelKind::Classwise)]
    pub kernel: KernelKind,
    /// Fixed sigma, also the adaptive fallback for lone objects.
    #[arg(long, default_value_t = DEFAULT_FIXED_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = DEFAULT_KNN)]
    pub knn: usize,
    #[arg(long, default_value_t = DEFAULT_TRUNCATION_SIGMAS)]
    pub trunc_sigmas: f64,
    /// Category statistics (from `stats`) for the class-wise kernel and the
    /// default window; computed from the annotations when absent.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

impl From<&KernelArgs> for KernelConfig {
    fn from(a: &KernelArgs) -> Self {
        KernelConfig { kind: a.kernel, sigma: a.sigma, beta: a.beta, knn: a.knn, truncation_sigmas: a.trunc_sigmas }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MaskArgs {
    #[arg(long, value_enum, env = "DMNET_PROFILE", default_value = "visiondrone")]
    pub profile: Profile,
    /// Density threshold; overrides the profile.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Window height and width; defaults to the mean object size.
    #[arg(long, num_args = 2, value_names = ["H", "W"])]
    pub window: Option<Vec<usize>>,
    /// Minimum crop width and height; overrides the profile.
    #[arg(long)]
    pub min_crop: Option<u32>,
}

impl MaskArgs {
    pub fn resolve(&self) -> Result<MaskConfig> {
        MaskConfig::resolve(self.profile, self.threshold, pair(&self.window), self.min_crop)
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Uniform `R × C` tiling instead of density crops.
    #[arg(long, num_args = 2, value_names = ["R", "C"])]
    pub grid: Option<Vec<u32>>,
    /// Pixels each grid tile extends across interior edges.
    #[arg(long, default_value_t = 0, requires = "grid")]
    pub overlap: u32,
}

impl GridArgs {
    pub fn spec(&self) -> Option<GridSpec> {
        pair(&self.grid).map(|(rows, cols)| GridSpec { rows, cols, overlap: self.overlap })
    }
}

#[derive(Debug, Clone, Args)]
pub struct FusionArgs {
    #[arg(long, value_enum, default_value_t = NmsProfile::Fusion)]
    pub nms_profile: NmsProfile,
    /// Overrides the NMS profile.
    #[arg(long)]
    pub nms_iou: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_DETS)]
    pub max_dets: usize,
}

impl FusionArgs {
    pub fn params(&self) -> Result<dmcrop::FusionParams> {
        let iou = self.nms_iou.unwrap_or(self.nms_profile.iou());
        dmcrop::FusionParams::new(iou, self.max_dets).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct MissArgs {
    /// Probability that the oracle misses a small object.
    #[arg(long, default_value_t = 0.0)]
    pub miss_small: f64,
    #[arg(long, default_value_t = 0.0)]
    pub miss_medium: f64,
    #[arg(long, default_value_t = 0.0)]
    pub miss_large: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl MissArgs {
    pub fn policy(&self) -> Result<MissPolicy> {
        for p in [self.miss_small, self.miss_medium, self.miss_large] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Usage(format!("miss probability {p} outside [0, 1]")));
            }
        }
        Ok(MissPolicy { small: self.miss_small, medium: self.miss_medium, large: self.miss_large, seed: self.seed })
    }
}

fn pair<T: Copy>(v: &Option<Vec<T>>) -> Option<(T, T)> {
    v.as_ref().map(|v| (v[0], v[1]))
}
