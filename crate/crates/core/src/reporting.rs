//! Screening report assembly and JSON / text rendering.
//!
//! Reals are written with 6 significant digits in both formats so renderings
//! are stable across platforms. JSON keys follow the field order of
//! [`ScreeningReport`]; the schema is described in `report.schema` at the
//! repository root.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{classify_severity, MetricSet, NormativeBaseline, SeverityBand, CAVITY_RATIO};
use crate::imgcore::InterpKind;
use crate::measurement::{RoiShape, SizeComparison};
use crate::pipeline::{PipelineRecord, SegmentationParams};
use crate::registration::AffineTransform2D;
use crate::segmentation::SegMethod;

pub const DISCLAIMER: &str = "NOT A DIAGNOSIS: this automated screening summary compares pixel statistics \
against a normative baseline and is intended for research and radiologist review only; severity bands are \
statistical deviation labels, not clinical disease stages.";

/// Z-scores at or below this value on the cavity fraction are flagged as a data-quality concern.
pub const LOW_Z_NOTE: f64 = -2.0;

/// CLI parameter name and the JSON pointer where its effect is recorded in the report.
pub const PARAMETER_REGISTRY: &[(&str, &str)] = &[
    ("subject-id", "/subject_id"),
    ("subject-age", "/subject_age"),
    ("interp", "/parameters/interp"),
    ("canonical-size", "/parameters/working_size"),
    ("normalize", "/parameters/normalize"),
    ("landmarks", "/registration/pair_count"),
    ("foreground-threshold", "/parameters/foreground_threshold"),
    ("roi", "/roi"),
    ("seg-method", "/parameters/segmentation/method"),
    ("fixed-threshold", "/parameters/segmentation/fixed_threshold"),
    ("histogram-bins", "/parameters/segmentation/histogram_bins"),
    ("fcm-clusters", "/parameters/segmentation/fcm/clusters"),
    ("fcm-fuzzifier", "/parameters/segmentation/fcm/fuzzifier"),
    ("fcm-tol", "/parameters/segmentation/fcm/tolerance"),
    ("fcm-max-iter", "/parameters/segmentation/fcm/max_iter"),
    ("fcm-spatial-window", "/parameters/segmentation/fcm/spatial_window"),
    ("fcm-seed", "/parameters/segmentation/fcm/seed"),
    ("baseline", "/baseline_rows_used"),
    ("rmse-warn", "/parameters/rmse_warn"),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("cannot assemble report: missing {0}")]
    Missing(&'static str),
    #[error("cannot assemble report: {0}")]
    Invalid(String),
    #[error("report JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationSummary {
    pub rmse: f64,
    pub pair_count: usize,
    pub warning: bool,
    pub interp: InterpKind,
    pub transform: AffineTransform2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationSummary {
    pub method: SegMethod,
    pub threshold_used: Option<f64>,
    pub fcm_centers: Option<Vec<f64>>,
    pub fcm_iterations: Option<usize>,
    pub fcm_converged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub interp: InterpKind,
    pub working_size: [usize; 2],
    pub normalize: bool,
    pub foreground_threshold: f64,
    pub rmse_warn: f64,
    pub segmentation: SegmentationParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub subject_id: String,
    pub subject_age: f64,
    pub timestamp: String,
    pub metrics: MetricSet,
    pub z_scores: BTreeMap<String, f64>,
    pub severity: SeverityBand,
    pub registration: RegistrationSummary,
    pub segmentation: SegmentationSummary,
    pub roi: RoiShape,
    pub size_comparison: SizeComparison,
    pub parameters: ReportParameters,
    pub baseline_rows_used: Vec<NormativeBaseline>,
    pub warnings: Vec<String>,
    pub disclaimer: String,
}

pub struct ReportInputs<'a> {
    pub subject_id: String,
    pub subject_age: f64,
    pub timestamp: DateTime<Utc>,
    pub record: &'a PipelineRecord,
    pub metrics: MetricSet,
    pub z_scores: BTreeMap<String, f64>,
    pub baseline_rows_used: Vec<NormativeBaseline>,
    pub rmse_warn: f64,
    /// Upstream notes carried into the warnings list.
    pub notes: Vec<String>,
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Assembles the report; severity is always derived from the cavity-fraction z-score.
pub fn build_report(inputs: ReportInputs<'_>) -> Result<ScreeningReport, ReportError> {
    let record = inputs.record;
    let resize = record.resize.as_ref().ok_or(ReportError::Missing("resize record"))?;
    let registration = record
        .registration
        .as_ref()
        .ok_or(ReportError::Missing("registration record"))?;
    let size = record
        .size_comparison
        .as_ref()
        .ok_or(ReportError::Missing("size comparison"))?;
    let roi = record.roi.clone().ok_or(ReportError::Missing("region of interest"))?;
    let seg = record
        .segmentation
        .as_ref()
        .ok_or(ReportError::Missing("segmentation record"))?;
    let z = *inputs
        .z_scores
        .get(CAVITY_RATIO)
        .ok_or(ReportError::Missing("cavity_ratio z-score"))?;
    let severity = classify_severity(z).map_err(|e| ReportError::Invalid(e.to_string()))?;

    let mut warnings = Vec::new();
    let rmse = registration.result.rmse;
    let rmse_flag = rmse > inputs.rmse_warn;
    if rmse_flag {
        warnings.push(format!(
            "registration quality: landmark rmse {} px exceeds the {} px warning threshold",
            fmt_real(rmse),
            fmt_real(inputs.rmse_warn)
        ));
    }
    if let Some(fcm) = &seg.fcm {
        if !fcm.converged {
            warnings.push(format!(
                "segmentation: fuzzy c-means stopped after {} iterations without converging",
                fcm.iterations_run
            ));
        }
    }
    if z <= LOW_Z_NOTE {
        warnings.push(format!(
            "data quality: cavity_ratio z-score {} is unusually low; check ROI placement and segmentation",
            fmt_real(z)
        ));
    }
    warnings.extend(inputs.notes);

    Ok(ScreeningReport {
        subject_id: inputs.subject_id,
        subject_age: inputs.subject_age,
        timestamp: format_timestamp(inputs.timestamp),
        metrics: inputs.metrics,
        z_scores: inputs.z_scores,
        severity,
        registration: RegistrationSummary {
            rmse,
            pair_count: registration.result.pair_count,
            warning: rmse_flag,
            interp: registration.interp,
            transform: registration.result.transform,
        },
        segmentation: SegmentationSummary {
            method: seg.method,
            threshold_used: seg.threshold_used,
            fcm_centers: seg.fcm.as_ref().map(|f| f.centers.clone()),
            fcm_iterations: seg.fcm.as_ref().map(|f| f.iterations_run),
            fcm_converged: seg.fcm.as_ref().map(|f| f.converged),
        },
        roi,
        size_comparison: size.comparison.clone(),
        parameters: ReportParameters {
            interp: resize.interp,
            working_size: [resize.width, resize.height],
            normalize: resize.normalize,
            foreground_threshold: size.foreground_threshold,
            rmse_warn: inputs.rmse_warn,
            segmentation: seg.params.clone(),
        },
        baseline_rows_used: inputs.baseline_rows_used,
        warnings,
        disclaimer: DISCLAIMER.to_string(),
    })
}

/// Rounds to 6 significant digits.
pub fn sig6(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.5e}").parse().expect("formatted float parses")
}

/// Shortest decimal form of the 6-significant-digit rounding.
pub fn fmt_real(v: f64) -> String {
    format!("{}", sig6(v))
}

fn quantize_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let q = sig6(n.as_f64().expect("f64 number"));
            if let Some(num) = serde_json::Number::from_f64(q) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(quantize_numbers),
        Value::Object(map) => map.values_mut().for_each(quantize_numbers),
        _ => {}
    }
}

pub fn render_json(r: &ScreeningReport) -> Vec<u8> {
    let mut value = serde_json::to_value(r).expect("report serializes");
    quantize_numbers(&mut value);
    let mut out = serde_json::to_vec_pretty(&value).expect("value serializes");
    out.push(b'\n');
    out
}

pub fn parse_report_json(bytes: &[u8]) -> Result<ScreeningReport, ReportError> {
    serde_json::from_slice(bytes).map_err(|e| ReportError::Json(e.to_string()))
}

pub fn render_text(r: &ScreeningReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Atrophy screening report | subject {} | age {} | {}",
        r.subject_id,
        fmt_real(r.subject_age),
        r.timestamp
    );
    s.push('\n');
    let _ = writeln!(s, "{:<14} {:>14} {:>10}", "metric", "value", "z-score");
    let z = |name: &str| r.z_scores.get(name).map_or("-".to_string(), |v| fmt_real(*v));
    let rows = [
        ("cavity_ratio", fmt_real(r.metrics.cavity_ratio), z("cavity_ratio")),
        ("area_ratio", fmt_real(r.metrics.area_ratio), z("area_ratio")),
        ("black_count", r.metrics.black_count.to_string(), "-".to_string()),
        ("white_count", r.metrics.white_count.to_string(), "-".to_string()),
        ("roi_area", r.metrics.roi_area.to_string(), "-".to_string()),
    ];
    for (name, value, zs) in rows {
        let _ = writeln!(s, "{name:<14} {value:>14} {zs:>10}");
    }
    s.push('\n');
    let _ = writeln!(
        s,
        "Registration: rmse {} px over {} landmark pairs ({} sampling)",
        fmt_real(r.registration.rmse),
        r.registration.pair_count,
        r.registration.interp
    );
    let threshold = r
        .segmentation
        .threshold_used
        .map_or("none".to_string(), fmt_real);
    let _ = writeln!(
        s,
        "Segmentation: {} (threshold {threshold})",
        r.segmentation.method.as_str()
    );
    let _ = writeln!(s, "ROI: {}", r.roi.describe());
    let _ = writeln!(
        s,
        "Severity: {} (cavity_ratio z = {}; statistical band, non-diagnostic)",
        r.severity.shout(),
        z(CAVITY_RATIO)
    );
    s.push('\n');
    s.push_str("Warnings:\n");
    if r.warnings.is_empty() {
        s.push_str("  none\n");
    }
    for w in &r.warnings {
        let _ = writeln!(s, "  - {w}");
    }
    s.push('\n');
    let _ = writeln!(s, "{}", r.disclaimer);
    s
}
