use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use mriscreen_core::analysis::{parse_baselines, NormativeBaseline};
use mriscreen_core::imgcore::{load_pgm, save_pgm};
use mriscreen_core::measurement::RoiShape;
use mriscreen_core::phantom::{generate_phantom, PhantomSpec};
use mriscreen_core::pipeline::{
    self, PipelineError, PipelineInputs, PipelineRecord, Stage, Subject, INTERMEDIATE_DEPTH,
};
use mriscreen_core::registration::{landmarks_to_json, parse_landmarks, ControlPointPair};
use mriscreen_core::reporting::{fmt_real, render_json, render_text, ScreeningReport};
use mriscreen_core::segmentation::{BinaryMap, SegMethod};
use mriscreen_core::{BitDepth, Image};

use crate::args::{
    AnalyzeArgs, MeasureArgs, PhantomArgs, RegisterArgs, ResizeArgs, RunArgs, SegmentArgs,
};
use crate::config::{segmentation_params, ConfigFile, PipelineConfig};
use crate::UsageError;

fn fail(stage: Stage, msg: impl std::fmt::Display) -> PipelineError {
    PipelineError::new(stage, msg)
}

fn read_text(path: &Path, what: &str, stage: Stage) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| fail(stage, format!("cannot read {what} '{}': {e}", path.display())))
}

fn read_image(path: &Path, stage: Stage) -> Result<Image, PipelineError> {
    let bytes =
        std::fs::read(path).map_err(|e| fail(stage, format!("cannot read image '{}': {e}", path.display())))?;
    load_pgm(&bytes).map_err(|e| fail(stage, format!("'{}': {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8], stage: Stage) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| fail(stage, format!("cannot create '{}': {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| fail(stage, format!("cannot write '{}': {e}", path.display())))
}

fn read_landmarks(path: &Path) -> Result<Vec<ControlPointPair>, PipelineError> {
    let text = read_text(path, "landmarks", Stage::Registration)?;
    parse_landmarks(&text).map_err(|e| fail(Stage::Registration, format!("'{}': {e}", path.display())))
}

fn read_roi(path: &Path) -> Result<RoiShape, PipelineError> {
    let text = read_text(path, "ROI", Stage::Roi)?;
    RoiShape::from_json(&text).map_err(|e| fail(Stage::Roi, format!("'{}': {e}", path.display())))
}

fn read_baselines(path: &Path) -> Result<Vec<NormativeBaseline>, PipelineError> {
    let text = read_text(path, "baseline", Stage::Analysis)?;
    parse_baselines(&text).map_err(|e| fail(Stage::Analysis, format!("'{}': {e}", path.display())))
}

fn load_record(path: Option<&PathBuf>, stage: Stage) -> Result<PipelineRecord, PipelineError> {
    match path {
        Some(p) if p.exists() => {
            let text = read_text(p, "stage record", stage)?;
            PipelineRecord::from_json(&text).map_err(|e| fail(stage, format!("'{}': {e}", p.display())))
        }
        _ => Ok(PipelineRecord::default()),
    }
}

fn update_record(
    path: Option<&PathBuf>,
    stage: Stage,
    edit: impl FnOnce(&mut PipelineRecord),
) -> Result<(), PipelineError> {
    let Some(path) = path else { return Ok(()) };
    let mut record = load_record(Some(path), stage)?;
    edit(&mut record);
    write_file(path, record.to_json().as_bytes(), stage)
}

fn timestamp(fixed: bool) -> DateTime<Utc> {
    if fixed {
        DateTime::<Utc>::UNIX_EPOCH
    } else {
        Utc::now()
    }
}

fn write_reports(dir: &Path, report: &ScreeningReport) -> Result<[PathBuf; 2], PipelineError> {
    let json = dir.join("report.json");
    let text = dir.join("report.txt");
    write_file(&json, &render_json(report), Stage::Report)?;
    write_file(&text, render_text(report).as_bytes(), Stage::Report)?;
    Ok([json, text])
}

fn write_image(path: &Path, img: &Image, depth: BitDepth, stage: Stage) -> Result<(), PipelineError> {
    write_file(path, &save_pgm(img, depth), stage)
}

pub fn run(args: RunArgs) -> Result<()> {
    let cfg = PipelineConfig::resolve(args)?;
    let target = read_image(&cfg.target_path, Stage::Resize)?;
    let reference = read_image(&cfg.reference_path, Stage::Resize)?;
    let landmarks = read_landmarks(&cfg.landmarks_path)?;
    let roi = read_roi(&cfg.roi_path)?;
    let baselines = read_baselines(&cfg.baseline_path)?;
    let inputs = PipelineInputs {
        target: &target,
        reference: &reference,
        landmarks: &landmarks,
        roi: &roi,
        baselines: &baselines,
        subject: Subject {
            id: cfg.subject_id.clone(),
            age: cfg.subject_age,
        },
    };
    let out = pipeline::run(&inputs, &cfg.params, timestamp(cfg.fixed_timestamp))?;

    let work = cfg.output_path.join("work");
    write_image(&work.join("target_resized.pgm"), &out.resized_target, INTERMEDIATE_DEPTH, Stage::Resize)?;
    write_image(&work.join("reference_resized.pgm"), &out.resized_reference, INTERMEDIATE_DEPTH, Stage::Resize)?;
    write_image(&work.join("warped.pgm"), &out.warped, INTERMEDIATE_DEPTH, Stage::Registration)?;
    write_image(&work.join("binary.pgm"), &out.binary.to_image(), BitDepth::Eight, Stage::Segmentation)?;
    write_file(&work.join("record.json"), out.record.to_json().as_bytes(), Stage::Report)?;
    for path in write_reports(&cfg.output_path, &out.report)? {
        println!("{}", path.display());
    }
    for w in &out.report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

pub fn resize(args: ResizeArgs) -> Result<()> {
    if args.canonical_size.is_some_and(|s| s.contains(&0)) {
        return Err(UsageError("canonical size must be at least 1x1".into()).into());
    }
    let input = read_image(&args.input, Stage::Resize)?;
    let reference = read_image(&args.reference, Stage::Resize)?;
    let size = args.canonical_size.unwrap_or([reference.width(), reference.height()]);
    let (out, record) = pipeline::resize_stage(&input, size, args.interp, args.normalize)?;
    write_image(&args.output, &out, INTERMEDIATE_DEPTH, Stage::Resize)?;
    update_record(args.record.as_ref(), Stage::Resize, |r| r.resize = Some(record))?;
    println!("{}x{}", size[0], size[1]);
    Ok(())
}

pub fn register(args: RegisterArgs) -> Result<()> {
    let target = read_image(&args.target, Stage::Registration)?;
    let reference = read_image(&args.reference, Stage::Registration)?;
    let landmarks = read_landmarks(&args.landmarks)?;
    let size = [reference.width(), reference.height()];
    let (warped, record) = pipeline::register_stage(&target, &landmarks, size, args.interp)?;
    write_image(&args.output, &warped, INTERMEDIATE_DEPTH, Stage::Registration)?;
    println!("rmse {} px over {} pairs", fmt_real(record.result.rmse), record.result.pair_count);
    update_record(args.record.as_ref(), Stage::Registration, |r| r.registration = Some(record))?;
    Ok(())
}

pub fn segment(args: SegmentArgs) -> Result<()> {
    let params = segmentation_params(&args.seg, &ConfigFile::default());
    params.validate().map_err(UsageError)?;
    let img = read_image(&args.input, Stage::Segmentation)?;
    let (bm, record, _) = pipeline::segment_stage(&img, &params)?;
    write_image(&args.output, &bm.to_image(), BitDepth::Eight, Stage::Segmentation)?;
    match (&record.fcm, record.threshold_used) {
        (Some(fcm), _) => {
            let centers: Vec<String> = fcm.centers.iter().map(|&c| fmt_real(c)).collect();
            println!(
                "fcm centers {} ({} iterations, {})",
                centers.join(", "),
                fcm.iterations_run,
                if fcm.converged { "converged" } else { "not converged" }
            );
        }
        (None, Some(t)) => println!("threshold {}", fmt_real(t)),
        (None, None) => {}
    }
    update_record(args.record.as_ref(), Stage::Segmentation, |r| r.segmentation = Some(record))?;
    Ok(())
}

pub fn measure(args: MeasureArgs) -> Result<()> {
    if !(args.foreground_threshold > 0.0 && args.foreground_threshold < 1.0) {
        return Err(UsageError(format!(
            "foreground threshold {} must lie in (0, 1)",
            args.foreground_threshold
        ))
        .into());
    }
    let warped = read_image(&args.warped, Stage::SizeComparison)?;
    let reference = read_image(&args.reference, Stage::SizeComparison)?;
    let size_record = pipeline::size_stage(&warped, &reference, args.foreground_threshold)?;

    let shape = read_roi(&args.roi)?;
    let roi = pipeline::roi_stage(&shape, [warped.width(), warped.height()])?;
    let record = load_record(args.record.as_ref(), Stage::Counting)?;
    let (method, threshold) = record
        .segmentation
        .as_ref()
        .map_or((SegMethod::FixedThreshold, None), |s| (s.method, s.threshold_used));
    let bm = BinaryMap::from_image(&read_image(&args.binary, Stage::Counting)?, method, threshold);
    let mut counts = pipeline::count_stage(&bm, &roi, args.coords.is_some())?;
    if let Some(path) = &args.coords {
        let coords = serde_json::json!({
            "black": counts.black_coords.take(),
            "white": counts.white_coords.take(),
        });
        let text = serde_json::to_string(&coords)?;
        write_file(path, text.as_bytes(), Stage::Counting)?;
    }
    println!(
        "black {} white {} roi_area {} area_ratio {}",
        counts.black_count,
        counts.white_count,
        counts.roi_area,
        fmt_real(size_record.comparison.area_ratio)
    );
    update_record(args.record.as_ref(), Stage::Counting, |r| {
        r.size_comparison = Some(size_record);
        r.roi = Some(shape);
        r.counts = Some(counts);
    })?;
    Ok(())
}

pub fn analyze(args: AnalyzeArgs) -> Result<()> {
    if !(args.subject_age.is_finite() && args.subject_age >= 0.0) {
        return Err(UsageError(format!("subject age {} must be finite and non-negative", args.subject_age)).into());
    }
    if !(args.rmse_warn >= 0.0) {
        return Err(UsageError("rmse warning threshold must be >= 0".into()).into());
    }
    let text = read_text(&args.record, "stage record", Stage::Analysis)?;
    let record = PipelineRecord::from_json(&text)
        .map_err(|e| fail(Stage::Analysis, format!("'{}': {e}", args.record.display())))?;
    let baselines = read_baselines(&args.baseline)?;
    let subject = Subject {
        id: args.subject_id,
        age: args.subject_age,
    };
    let report =
        pipeline::analyze_stage(&record, &baselines, &subject, args.rmse_warn, timestamp(args.fixed_timestamp))?;
    for path in write_reports(&args.output, &report)? {
        println!("{}", path.display());
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

pub fn phantom(args: PhantomArgs) -> Result<()> {
    let spec = PhantomSpec {
        width: args.width,
        height: args.height,
        head_radius: args.head_radius,
        ventricle_radius: args.ventricle_radius,
        ventricle_offset: args.ventricle_offset.unwrap_or([0.0, 0.0]),
        tissue_intensity: args.tissue_intensity,
        cavity_intensity: args.cavity_intensity,
        background_intensity: args.background_intensity,
        noise_sd: args.noise_sd,
        seed: args.seed,
    };
    let p = generate_phantom(&spec).map_err(|e| UsageError(e.to_string()))?;
    let dir = &args.output;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create '{}'", dir.display()))?;
    let files = [
        ("phantom.pgm", save_pgm(&p.image, BitDepth::Sixteen)),
        ("ground_truth.pgm", save_pgm(&p.ground_truth.to_image(), BitDepth::Eight)),
        ("landmarks.json", landmarks_to_json(&p.landmarks).into_bytes()),
    ];
    for (name, bytes) in &files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("cannot write '{}'", path.display()))?;
    }
    for name in ["phantom.pgm", "ground_truth.pgm", "landmarks.json"] {
        println!("{}", dir.join(name).display());
    }
    Ok(())
}
