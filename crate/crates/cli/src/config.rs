use std::path::{Path, PathBuf};

use mriscreen_core::pipeline::{PipelineParams, SegChoice, SegmentationParams};
use mriscreen_core::segmentation::FcmParams;
use mriscreen_core::InterpKind;
use serde::Deserialize;

use crate::args::{RunArgs, SegArgs};
use crate::UsageError;

/// Config file for `run`: the same options as the flags, snake_case.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub target_path: Option<PathBuf>,
    pub reference_path: Option<PathBuf>,
    pub landmarks_path: Option<PathBuf>,
    pub roi_path: Option<PathBuf>,
    pub baseline_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub subject_id: Option<String>,
    pub subject_age: Option<f64>,
    pub interp: Option<InterpKind>,
    pub canonical_size: Option<[usize; 2]>,
    pub normalize: Option<bool>,
    pub foreground_threshold: Option<f64>,
    pub rmse_warn: Option<f64>,
    pub fixed_timestamp: Option<bool>,
    pub seg_method: Option<SegChoice>,
    pub fixed_threshold: Option<f64>,
    pub histogram_bins: Option<usize>,
    pub fcm_clusters: Option<usize>,
    pub fcm_fuzzifier: Option<f64>,
    pub fcm_tol: Option<f64>,
    pub fcm_max_iter: Option<usize>,
    pub fcm_spatial_window: Option<usize>,
    pub fcm_seed: Option<u64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config '{}': {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| UsageError(format!("config '{}': {e}", path.display())))
    }
}

/// Fully resolved `run` configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub target_path: PathBuf,
    pub reference_path: PathBuf,
    pub landmarks_path: PathBuf,
    pub roi_path: PathBuf,
    pub baseline_path: PathBuf,
    pub output_path: PathBuf,
    pub subject_id: String,
    pub subject_age: f64,
    pub params: PipelineParams,
    pub fixed_timestamp: bool,
}

fn required<T>(flag: &str, value: Option<T>) -> Result<T, UsageError> {
    value.ok_or_else(|| UsageError(format!("missing --{flag} (or its config file key)")))
}

fn nonempty(flag: &str, value: Option<PathBuf>) -> Result<PathBuf, UsageError> {
    let path = required(flag, value)?;
    if path.as_os_str().is_empty() {
        return Err(UsageError(format!("--{flag} must not be empty")));
    }
    Ok(path)
}

/// Segmentation parameters from flags, falling back to `file` and then to defaults.
pub fn segmentation_params(flags: &SegArgs, file: &ConfigFile) -> SegmentationParams {
    let d = SegmentationParams::default();
    let fcm = FcmParams {
        clusters: flags.fcm_clusters.or(file.fcm_clusters).unwrap_or(d.fcm.clusters),
        fuzzifier: flags.fcm_fuzzifier.or(file.fcm_fuzzifier).unwrap_or(d.fcm.fuzzifier),
        tolerance: flags.fcm_tol.or(file.fcm_tol).unwrap_or(d.fcm.tolerance),
        max_iter: flags.fcm_max_iter.or(file.fcm_max_iter).unwrap_or(d.fcm.max_iter),
        spatial_window: flags
            .fcm_spatial_window
            .or(file.fcm_spatial_window)
            .unwrap_or(d.fcm.spatial_window),
        seed: flags.fcm_seed.or(file.fcm_seed).unwrap_or(d.fcm.seed),
    };
    SegmentationParams {
        method: flags.seg_method.or(file.seg_method).unwrap_or(d.method),
        fixed_threshold: flags.fixed_threshold.or(file.fixed_threshold),
        histogram_bins: flags.histogram_bins.or(file.histogram_bins).unwrap_or(d.histogram_bins),
        fcm,
    }
}

impl PipelineConfig {
    pub fn resolve(args: RunArgs) -> Result<Self, UsageError> {
        let file = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let d = PipelineParams::default();
        let params = PipelineParams {
            interp: args.interp.or(file.interp).unwrap_or(d.interp),
            normalize: args.normalize || file.normalize.unwrap_or(d.normalize),
            canonical_size: args.canonical_size.or(file.canonical_size),
            segmentation: segmentation_params(&args.seg, &file),
            foreground_threshold: args
                .foreground_threshold
                .or(file.foreground_threshold)
                .unwrap_or(d.foreground_threshold),
            rmse_warn: args.rmse_warn.or(file.rmse_warn).unwrap_or(d.rmse_warn),
        };
        params.validate().map_err(|e| UsageError(e.message))?;
        let subject_age = required("subject-age", args.subject_age.or(file.subject_age))?;
        if !(subject_age.is_finite() && subject_age >= 0.0) {
            return Err(UsageError(format!("subject age {subject_age} must be a finite, non-negative number")));
        }
        Ok(Self {
            target_path: nonempty("target", args.target.or(file.target_path))?,
            reference_path: nonempty("reference", args.reference.or(file.reference_path))?,
            landmarks_path: nonempty("landmarks", args.landmarks.or(file.landmarks_path))?,
            roi_path: nonempty("roi", args.roi.or(file.roi_path))?,
            baseline_path: nonempty("baseline", args.baseline.or(file.baseline_path))?,
            output_path: nonempty("output", args.output.or(file.output_path))?,
            subject_id: required("subject-id", args.subject_id.or(file.subject_id))?,
            subject_age,
            params,
            fixed_timestamp: args.fixed_timestamp || file.fixed_timestamp.unwrap_or(false),
        })
    }
}
