//! Resolved settings for the pipeline stages.

use std::path::PathBuf;

use clap::ValueEnum;
use dmcrop::dataset::CategoryStats;
use dmcrop::density::{KernelSpec, DEFAULT_BETA, DEFAULT_FIXED_SIGMA, DEFAULT_KNN, DEFAULT_TRUNCATION_SIGMAS};
use dmcrop::fusion::{FusionParams, FUSION_NMS_IOU, STANDARD_NMS_IOU};
use dmcrop::mask::{MaskParams, DEFAULT_MIN_CROP, UAVDT_THRESHOLD, VISDRONE_THRESHOLD};
use dmcrop::oracle::MissPolicy;
use dmcrop::remap::DEFAULT_MIN_VISIBILITY;

use crate::error::{CliError, Result};

/// Dataset presets for the mask threshold and minimum crop size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    #[value(alias = "visdrone")]
    Visiondrone,
    Uavdt,
    /// No preset threshold; `--threshold` is required.
    Custom,
}

impl Profile {
    pub fn threshold(self) -> Option<f64> {
        match self {
            Profile::Visiondrone => Some(VISDRONE_THRESHOLD),
            Profile::Uavdt => Some(UAVDT_THRESHOLD),
            Profile::Custom => None,
        }
    }

    pub fn min_crop(self) -> u32 {
        DEFAULT_MIN_CROP
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Fixed,
    Adaptive,
    Classwise,
}

/// Fusion IoU presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NmsProfile {
    /// 0.7
    Fusion,
    /// 0.5
    Standard,
}

impl NmsProfile {
    pub fn iou(self) -> f64 {
        match self {
            NmsProfile::Fusion => FUSION_NMS_IOU,
            NmsProfile::Standard => STANDARD_NMS_IOU,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub sigma: f64,
    pub beta: f64,
    pub knn: usize,
    pub truncation_sigmas: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            kind: KernelKind::Classwise,
            sigma: DEFAULT_FIXED_SIGMA,
            beta: DEFAULT_BETA,
            knn: DEFAULT_KNN,
            truncation_sigmas: DEFAULT_TRUNCATION_SIGMAS,
        }
    }
}

impl KernelConfig {
    /// The adaptive kernel falls back to `sigma` for lone objects.
    pub fn spec(&self, stats: &CategoryStats<f64>) -> Result<KernelSpec<f64>> {
        let spec = match self.kind {
            KernelKind::Fixed => KernelSpec::fixed(self.sigma),
            KernelKind::Adaptive => KernelSpec::adaptive(self.beta, self.knn, self.sigma),
            KernelKind::Classwise => KernelSpec::class_wise(stats.clone()),
        }
        .with_truncation(self.truncation_sigmas);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskConfig {
    pub threshold: f64,
    /// `None` means the global mean object size.
    pub window: Option<(usize, usize)>,
    pub min_crop: u32,
}

impl MaskConfig {
    /// Explicit values win over the profile presets.
    pub fn resolve(
        profile: Profile,
        threshold: Option<f64>,
        window: Option<(usize, usize)>,
        min_crop: Option<u32>,
    ) -> Result<Self> {
        let threshold = threshold
            .or(profile.threshold())
            .ok_or_else(|| CliError::Usage("the custom profile needs --threshold".into()))?;
        Ok(MaskConfig { threshold, window, min_crop: min_crop.unwrap_or(profile.min_crop()) })
    }

    pub fn params(&self, stats: Option<&CategoryStats<f64>>) -> Result<MaskParams<f32>> {
        let (h, w) = match (self.window, stats) {
            (Some(win), _) => win,
            (None, Some(s)) => s.window_size(),
            (None, None) => return Err(CliError::Usage("--window is required without annotations or --stats".into())),
        };
        Ok(MaskParams::new(h, w, self.threshold as f32)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub rows: u32,
    pub cols: u32,
    pub overlap: u32,
}

/// Everything `pipeline` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub annotations: PathBuf,
    /// Predicted density maps (`<stem>.dmap`); rendered from annotations when absent.
    pub density_dir: Option<PathBuf>,
    pub preserve_count: bool,
    pub profile: Profile,
    pub kernel: KernelConfig,
    pub stats: Option<PathBuf>,
    pub mask: MaskConfig,
    /// Replaces density crops with a uniform grid.
    pub grid: Option<GridSpec>,
    pub fusion: FusionParams<f64>,
    pub min_visibility: f64,
    pub miss: MissPolicy,
    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
}

impl PipelineConfig {
    pub fn new(annotations: PathBuf, profile: Profile) -> Result<Self> {
        Ok(PipelineConfig {
            annotations,
            density_dir: None,
            preserve_count: false,
            profile,
            kernel: KernelConfig::default(),
            stats: None,
            mask: MaskConfig::resolve(profile, None, None, None)?,
            grid: None,
            fusion: FusionParams::default(),
            min_visibility: DEFAULT_MIN_VISIBILITY,
            miss: MissPolicy::none(),
            out_dir: None,
            jobs: 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_overrides() {
        let vd = MaskConfig::resolve(Profile::Visiondrone, None, None, None).unwrap();
        assert_eq!((vd.threshold, vd.min_crop), (0.08, 70));
        let ua = MaskConfig::resolve(Profile::Uavdt, None, None, None).unwrap();
        assert_eq!((ua.threshold, ua.min_crop), (0.03, 70));
        let over = MaskConfig::resolve(Profile::Uavdt, Some(0.2), Some((4, 5)), Some(10)).unwrap();
        assert_eq!((over.threshold, over.window, over.min_crop), (0.2, Some((4, 5)), 10));
        assert_eq!(MaskConfig::resolve(Profile::Custom, None, None, None).unwrap_err().exit_code(), 2);
        assert_eq!(NmsProfile::Fusion.iou(), 0.7);
        assert_eq!(NmsProfile::Standard.iou(), 0.5);
    }

    #[test]
    fn window_needs_a_source() {
        let m = MaskConfig::resolve(Profile::Visiondrone, None, None, None).unwrap();
        assert!(m.params(None).is_err());
        let m = MaskConfig { window: Some((40, 30)), ..m };
        let p = m.params(None).unwrap();
        assert_eq!((p.window_h, p.window_w, p.threshold), (40, 30, 0.08f32));
    }
}
