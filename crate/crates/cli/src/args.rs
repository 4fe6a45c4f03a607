use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mriscreen_core::pipeline::SegChoice;
use mriscreen_core::InterpKind;

#[derive(Debug, Parser)]
#[command(name = "mriscreen", version, about = "Landmark-registered MRI slice screening for ventricular enlargement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every stage and write report.json, report.txt and work/ intermediates
    Run(RunArgs),
    /// Resample an image onto the working grid
    Resize(ResizeArgs),
    /// Fit the landmark affine and warp the target into reference space
    Register(RegisterArgs),
    /// Segment a registered slice into a 0/255 binary map
    Segment(SegmentArgs),
    /// Compare head sizes and count black/white pixels inside the ROI
    Measure(MeasureArgs),
    /// Compute metrics and z-scores from a stage record and render the reports
    Analyze(AnalyzeArgs),
    /// Generate a synthetic phantom, its ground truth and landmarks
    Phantom(PhantomArgs),
}

/// `WIDTHxHEIGHT`, e.g. `256x256`.
pub fn parse_size(s: &str) -> Result<[usize; 2], String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("bad dimension '{v}': {e}"));
    let size = [parse(w)?, parse(h)?];
    if size.contains(&0) {
        return Err("dimensions must be at least 1".into());
    }
    Ok(size)
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("bad number '{v}': {e}"));
    Ok([parse(a)?, parse(b)?])
}

#[derive(Debug, Clone, Default, Args)]
pub struct SegArgs {
    /// otsu or fcm [default: otsu]
    #[arg(long)]
    pub seg_method: Option<SegChoice>,
    /// Binarize at this intensity instead of the Otsu threshold
    #[arg(long)]
    pub fixed_threshold: Option<f64>,
    /// Histogram bins for Otsu [default: 256]
    #[arg(long)]
    pub histogram_bins: Option<usize>,
    /// FCM cluster count [default: 3]
    #[arg(long)]
    pub fcm_clusters: Option<usize>,
    /// FCM fuzzifier m [default: 2]
    #[arg(long)]
    pub fcm_fuzzifier: Option<f64>,
    /// FCM convergence tolerance on center shift [default: 1e-5]
    #[arg(long)]
    pub fcm_tol: Option<f64>,
    /// FCM iteration cap [default: 300]
    #[arg(long)]
    pub fcm_max_iter: Option<usize>,
    /// Spatial smoothing window radius, 0 disables [default: 0]
    #[arg(long)]
    pub fcm_spatial_window: Option<usize>,
    /// FCM seed, recorded in the report [default: 0]
    #[arg(long)]
    pub fcm_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file with any of the options below (snake_case keys); flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// JSON array of {"label", "ref": [x, y], "subj": [x, y]}
    #[arg(long)]
    pub landmarks: Option<PathBuf>,
    /// JSON region of interest, e.g. {"shape": "ellipse", "cx": 128, "cy": 128, "rx": 60, "ry": 60}
    #[arg(long)]
    pub roi: Option<PathBuf>,
    /// Baseline CSV with header age_min,age_max,metric,mean,sd,n
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub subject_id: Option<String>,
    #[arg(long)]
    pub subject_age: Option<f64>,
    /// nearest, bilinear or bicubic [default: bilinear]
    #[arg(long)]
    pub interp: Option<InterpKind>,
    /// Working grid WIDTHxHEIGHT [default: reference size]
    #[arg(long, value_parser = parse_size)]
    pub canonical_size: Option<[usize; 2]>,
    /// Percentile-normalize both slices after resizing
    #[arg(long)]
    pub normalize: bool,
    /// Head foreground threshold for size comparison [default: 0.05]
    #[arg(long)]
    pub foreground_threshold: Option<f64>,
    /// Registration rmse (px) above which a warning is raised [default: 3.0]
    #[arg(long)]
    pub rmse_warn: Option<f64>,
    /// Stamp the report with 1970-01-01T00:00:00Z for reproducible output
    #[arg(long)]
    pub fixed_timestamp: bool,
    #[command(flatten)]
    pub seg: SegArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ResizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Reference slice; its size is the working grid unless --canonical-size is given
    #[arg(long)]
    pub reference: PathBuf,
    /// 16-bit PGM output
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_parser = parse_size)]
    pub canonical_size: Option<[usize; 2]>,
    #[arg(long, default_value = "bilinear")]
    pub interp: InterpKind,
    #[arg(long)]
    pub normalize: bool,
    /// Stage record to create or update
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RegisterArgs {
    /// Resized target slice
    #[arg(long)]
    pub target: PathBuf,
    /// Resized reference slice (sets the output grid)
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub landmarks: PathBuf,
    /// Warped target, 16-bit PGM
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "bilinear")]
    pub interp: InterpKind,
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Binary map, 8-bit PGM with black 0 and white 255
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub seg: SegArgs,
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    /// Binary map from `segment`
    #[arg(long)]
    pub binary: PathBuf,
    /// Warped target from `register`
    #[arg(long)]
    pub warped: PathBuf,
    /// Resized reference
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub roi: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub foreground_threshold: f64,
    /// Also write the black and white pixel coordinates to this JSON file
    #[arg(long)]
    pub coords: Option<PathBuf>,
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Stage record holding every earlier stage
    #[arg(long)]
    pub record: PathBuf,
    #[arg(long)]
    pub baseline: PathBuf,
    #[arg(long)]
    pub subject_id: String,
    #[arg(long)]
    pub subject_age: f64,
    #[arg(long, default_value_t = 3.0)]
    pub rmse_warn: f64,
    #[arg(long)]
    pub fixed_timestamp: bool,
    /// Directory for report.json and report.txt
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    /// Directory for phantom.pgm, ground_truth.pgm and landmarks.json
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[arg(long, default_value_t = 100.0)]
    pub head_radius: f64,
    #[arg(long, default_value_t = 20.0)]
    pub ventricle_radius: f64,
    /// Ventricle center relative to the head center, X,Y
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub ventricle_offset: Option<[f64; 2]>,
    #[arg(long, default_value_t = 0.7)]
    pub tissue_intensity: f64,
    #[arg(long, default_value_t = 0.1)]
    pub cavity_intensity: f64,
    #[arg(long, default_value_t = 0.0)]
    pub background_intensity: f64,
    #[arg(long, default_value_t = 0.03)]
    pub noise_sd: f64,
}
