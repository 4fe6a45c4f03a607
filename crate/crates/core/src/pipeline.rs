//! End-to-end screening pipeline.
//!
//! Each stage is a standalone function so the CLI can run them one at a time,
//! persisting intermediates as 16-bit PGM and a JSON [`PipelineRecord`].
//! Stage outputs are quantized to 16 bits in memory as well, which makes an
//! in-memory run and a chain of file-based stage invocations agree exactly.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, NormativeBaseline, AREA_RATIO, CAVITY_RATIO};
use crate::imgcore::{self, BitDepth, Image, InterpKind};
use crate::measurement::{self, PixelCounts, RoiMask, RoiShape, SizeComparison};
use crate::registration::{self, ControlPointPair, RegistrationResult};
use crate::reporting::{self, ReportInputs, ScreeningReport};
use crate::segmentation::{self, BinaryMap, FcmParams, MembershipMap, SegMethod};

/// Depth at which intermediate images are exchanged between stages.
pub const INTERMEDIATE_DEPTH: BitDepth = BitDepth::Sixteen;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Config,
    Resize,
    Registration,
    SizeComparison,
    Roi,
    Segmentation,
    Counting,
    Analysis,
    Report,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Resize => "resize",
            Stage::Registration => "registration",
            Stage::SizeComparison => "size-comparison",
            Stage::Roi => "roi",
            Stage::Segmentation => "segmentation",
            Stage::Counting => "counting",
            Stage::Analysis => "analysis",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage} stage: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, err: impl fmt::Display) -> Self {
        Self {
            stage,
            message: err.to_string(),
        }
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: fmt::Display> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegChoice {
    #[default]
    Otsu,
    Fcm,
}

impl std::str::FromStr for SegChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "otsu" => Ok(SegChoice::Otsu),
            "fcm" => Ok(SegChoice::Fcm),
            other => Err(format!("unknown segmentation method '{other}' (expected otsu or fcm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub method: SegChoice,
    /// Overrides the Otsu threshold when set.
    pub fixed_threshold: Option<f64>,
    pub histogram_bins: usize,
    pub fcm: FcmParams,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            method: SegChoice::Otsu,
            fixed_threshold: None,
            histogram_bins: segmentation::DEFAULT_BINS,
            fcm: FcmParams::default(),
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.method == SegChoice::Fcm && self.fixed_threshold.is_some() {
            return Err("a fixed threshold cannot be combined with fuzzy c-means".into());
        }
        if let Some(t) = self.fixed_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(format!("fixed threshold {t} outside [0, 1]"));
            }
        }
        if self.histogram_bins < 2 {
            return Err(format!("histogram bins must be >= 2, got {}", self.histogram_bins));
        }
        self.fcm.validate().map_err(|e| e.to_string())
    }
}

/// Every tunable that can change the measured metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub interp: InterpKind,
    pub normalize: bool,
    pub canonical_size: Option<[usize; 2]>,
    pub segmentation: SegmentationParams,
    pub foreground_threshold: f64,
    pub rmse_warn: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            interp: InterpKind::Bilinear,
            normalize: false,
            canonical_size: None,
            segmentation: SegmentationParams::default(),
            foreground_threshold: 0.05,
            rmse_warn: 3.0,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if let Some([w, h]) = self.canonical_size {
            if w == 0 || h == 0 {
                return Err(PipelineError::new(Stage::Config, "canonical size must be at least 1x1"));
            }
        }
        if !(self.foreground_threshold > 0.0 && self.foreground_threshold < 1.0) {
            return Err(PipelineError::new(
                Stage::Config,
                format!("foreground threshold {} must lie in (0, 1)", self.foreground_threshold),
            ));
        }
        if !(self.rmse_warn >= 0.0) {
            return Err(PipelineError::new(Stage::Config, "rmse warning threshold must be >= 0"));
        }
        self.segmentation
            .validate()
            .map_err(|m| PipelineError::new(Stage::Config, m))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResizeRecord {
    pub width: usize,
    pub height: usize,
    pub interp: InterpKind,
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationRecord {
    pub result: RegistrationResult,
    pub interp: InterpKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRecord {
    pub foreground_threshold: f64,
    pub comparison: SizeComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcmOutcome {
    pub centers: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub final_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationRecord {
    pub params: SegmentationParams,
    pub method: SegMethod,
    pub threshold_used: Option<f64>,
    pub fcm: Option<FcmOutcome>,
}

/// Stage outputs accumulated over a run; everything the report needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub resize: Option<ResizeRecord>,
    pub registration: Option<RegistrationRecord>,
    pub size_comparison: Option<SizeRecord>,
    pub roi: Option<RoiShape>,
    pub segmentation: Option<SegmentationRecord>,
    pub counts: Option<PixelCounts>,
}

impl PipelineRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Target dimensions for both slices: the canonical size, else the reference's own.
pub fn working_size(params: &PipelineParams, reference: &Image) -> [usize; 2] {
    params
        .canonical_size
        .unwrap_or([reference.width(), reference.height()])
}

pub fn resize_stage(
    img: &Image,
    size: [usize; 2],
    interp: InterpKind,
    normalize: bool,
) -> Result<(Image, ResizeRecord), PipelineError> {
    let mut out = imgcore::resize(img, size[0], size[1], interp).at(Stage::Resize)?;
    if normalize {
        out = imgcore::normalize_intensity(&out);
    }
    let record = ResizeRecord {
        width: size[0],
        height: size[1],
        interp,
        normalize,
    };
    Ok((out.quantized(INTERMEDIATE_DEPTH), record))
}

pub fn register_stage(
    target: &Image,
    landmarks: &[ControlPointPair],
    reference_size: [usize; 2],
    interp: InterpKind,
) -> Result<(Image, RegistrationRecord), PipelineError> {
    let result = registration::estimate_affine(landmarks).at(Stage::Registration)?;
    let warped = registration::warp_to_reference(
        target,
        &result.transform,
        reference_size[0],
        reference_size[1],
        interp,
    )
    .at(Stage::Registration)?;
    Ok((
        warped.quantized(INTERMEDIATE_DEPTH),
        RegistrationRecord { result, interp },
    ))
}

pub fn size_stage(
    warped: &Image,
    reference: &Image,
    foreground_threshold: f64,
) -> Result<SizeRecord, PipelineError> {
    let comparison =
        measurement::compare_sizes(warped, reference, foreground_threshold).at(Stage::SizeComparison)?;
    Ok(SizeRecord {
        foreground_threshold,
        comparison,
    })
}

pub fn roi_stage(shape: &RoiShape, size: [usize; 2]) -> Result<RoiMask, PipelineError> {
    measurement::make_roi(shape, size[0], size[1]).at(Stage::Roi)
}

pub fn segment_stage(
    img: &Image,
    params: &SegmentationParams,
) -> Result<(BinaryMap, SegmentationRecord, Option<MembershipMap>), PipelineError> {
    params
        .validate()
        .map_err(|m| PipelineError::new(Stage::Segmentation, m))?;
    let (bm, fcm, mm) = match (params.method, params.fixed_threshold) {
        (SegChoice::Otsu, Some(t)) => (segmentation::binarize(img, t).at(Stage::Segmentation)?, None, None),
        (SegChoice::Otsu, None) => {
            let h = segmentation::histogram(img, params.histogram_bins).at(Stage::Segmentation)?;
            let t = segmentation::otsu_threshold(&h).at(Stage::Segmentation)?;
            let mut bm = segmentation::binarize(img, t).at(Stage::Segmentation)?;
            bm.method = SegMethod::Otsu;
            (bm, None, None)
        }
        (SegChoice::Fcm, _) => {
            let mm = segmentation::fcm_segment(img, &params.fcm).at(Stage::Segmentation)?;
            let outcome = FcmOutcome {
                centers: mm.centers.clone(),
                iterations_run: mm.iterations_run,
                converged: mm.converged,
                final_objective: mm.final_objective,
            };
            (segmentation::memberships_to_binary(&mm), Some(outcome), Some(mm))
        }
    };
    let record = SegmentationRecord {
        params: params.clone(),
        method: bm.method,
        threshold_used: bm.threshold_used,
        fcm,
    };
    Ok((bm, record, mm))
}

pub fn count_stage(bm: &BinaryMap, roi: &RoiMask, emit_coords: bool) -> Result<PixelCounts, PipelineError> {
    measurement::count_pixels(bm, roi, emit_coords).at(Stage::Counting)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub id: String,
    pub age: f64,
}

/// Metrics, z-scores and report assembly from a completed record.
pub fn analyze_stage(
    record: &PipelineRecord,
    baselines: &[NormativeBaseline],
    subject: &Subject,
    rmse_warn: f64,
    timestamp: DateTime<Utc>,
) -> Result<ScreeningReport, PipelineError> {
    let missing = |what: &str| PipelineError::new(Stage::Analysis, format!("record has no {what} result"));
    let counts = record.counts.as_ref().ok_or_else(|| missing("counting"))?;
    let size = record
        .size_comparison
        .as_ref()
        .ok_or_else(|| missing("size-comparison"))?;
    let metrics = analysis::compute_metrics(counts, &size.comparison).at(Stage::Analysis)?;

    let mut z_scores = BTreeMap::new();
    let mut rows_used = Vec::new();
    let mut notes = Vec::new();
    for metric in [CAVITY_RATIO, AREA_RATIO] {
        match analysis::lookup_baseline(baselines, metric, subject.age) {
            Ok(row) => {
                let value = metrics.get(metric).expect("known metric");
                z_scores.insert(metric.to_string(), analysis::z_score(value, row));
                rows_used.push(row.clone());
            }
            Err(e) if metric == CAVITY_RATIO => return Err(PipelineError::new(Stage::Analysis, e)),
            Err(e) => notes.push(format!("{e}; z-score omitted")),
        }
    }

    reporting::build_report(ReportInputs {
        subject_id: subject.id.clone(),
        subject_age: subject.age,
        timestamp,
        record,
        metrics,
        z_scores,
        baseline_rows_used: rows_used,
        rmse_warn,
        notes,
    })
    .at(Stage::Report)
}

pub struct PipelineInputs<'a> {
    pub target: &'a Image,
    pub reference: &'a Image,
    pub landmarks: &'a [ControlPointPair],
    pub roi: &'a RoiShape,
    pub baselines: &'a [NormativeBaseline],
    pub subject: Subject,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub resized_target: Image,
    pub resized_reference: Image,
    pub warped: Image,
    pub binary: BinaryMap,
    pub memberships: Option<MembershipMap>,
    pub record: PipelineRecord,
    pub report: ScreeningReport,
}

/// Runs every stage in order: resize, register, compare sizes, ROI,
/// segment, count, analyze, report.
pub fn run(
    inputs: &PipelineInputs<'_>,
    params: &PipelineParams,
    timestamp: DateTime<Utc>,
) -> Result<PipelineOutput, PipelineError> {
    params.validate()?;
    let size = working_size(params, inputs.reference);
    let (resized_target, resize_record) =
        resize_stage(inputs.target, size, params.interp, params.normalize)?;
    let (resized_reference, _) = resize_stage(inputs.reference, size, params.interp, params.normalize)?;

    let (warped, registration) = register_stage(&resized_target, inputs.landmarks, size, params.interp)?;
    let size_record = size_stage(&warped, &resized_reference, params.foreground_threshold)?;
    let roi = roi_stage(inputs.roi, size)?;
    let (binary, seg_record, memberships) = segment_stage(&warped, &params.segmentation)?;
    let counts = count_stage(&binary, &roi, false)?;

    let record = PipelineRecord {
        resize: Some(resize_record),
        registration: Some(registration),
        size_comparison: Some(size_record),
        roi: Some(inputs.roi.clone()),
        segmentation: Some(seg_record),
        counts: Some(counts),
    };
    let report = analyze_stage(&record, inputs.baselines, &inputs.subject, params.rmse_warn, timestamp)?;
    Ok(PipelineOutput {
        resized_target,
        resized_reference,
        warped,
        binary,
        memberships,
        record,
        report,
    })
}
