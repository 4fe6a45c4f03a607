//! Atrophy metrics and comparison against an age-banded normative baseline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::measurement::{PixelCounts, SizeComparison};

pub const CAVITY_RATIO: &str = "cavity_ratio";
pub const AREA_RATIO: &str = "area_ratio";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("baseline needs at least 2 non-identical samples for '{0}'")]
    DegenerateBaseline(String),
    #[error("invalid baseline row: {0}")]
    InvalidBaseline(String),
    #[error("no baseline row for metric '{metric}' at age {age}")]
    BaselineMissing { metric: String, age: f64 },
    #[error("baseline file: {0}")]
    Csv(String),
    #[error("z-score must be finite, got {0}")]
    NonFiniteZ(f64),
    #[error("ROI area must be positive")]
    EmptyRoi,
}

/// Normal-cohort statistics for one metric within one age band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormativeBaseline {
    pub age_min: f64,
    pub age_max: f64,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
    pub n: u64,
}

impl NormativeBaseline {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: &str| Err(AnalysisError::InvalidBaseline(format!("{}: {m}", self.metric)));
        if !(self.sd > 0.0) || !self.sd.is_finite() {
            return bad("sd must be positive");
        }
        if !self.mean.is_finite() {
            return bad("mean must be finite");
        }
        if !(self.age_min <= self.age_max) {
            return bad("age_min exceeds age_max");
        }
        if self.n < 2 {
            return bad("sample count must be at least 2");
        }
        Ok(())
    }

    pub fn covers(&self, age: f64) -> bool {
        self.age_min <= age && age <= self.age_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub cavity_ratio: f64,
    pub black_count: u64,
    pub white_count: u64,
    pub roi_area: u64,
    pub area_ratio: f64,
}

impl MetricSet {
    /// Looks up a ratio metric by its baseline name.
    pub fn get(&self, metric: &str) -> Option<f64> {
        match metric {
            CAVITY_RATIO => Some(self.cavity_ratio),
            AREA_RATIO => Some(self.area_ratio),
            _ => None,
        }
    }
}

pub fn compute_metrics(counts: &PixelCounts, size_cmp: &SizeComparison) -> Result<MetricSet, AnalysisError> {
    if counts.roi_area == 0 {
        return Err(AnalysisError::EmptyRoi);
    }
    Ok(MetricSet {
        cavity_ratio: counts.black_count as f64 / counts.roi_area as f64,
        black_count: counts.black_count,
        white_count: counts.white_count,
        roi_area: counts.roi_area,
        area_ratio: size_cmp.area_ratio,
    })
}

pub fn z_score(value: f64, baseline: &NormativeBaseline) -> f64 {
    (value - baseline.mean) / baseline.sd
}

/// Mean and sample standard deviation (n − 1) of a healthy cohort.
pub fn fit_baseline(
    samples: &[f64],
    age_min: f64,
    age_max: f64,
    metric: &str,
) -> Result<NormativeBaseline, AnalysisError> {
    if samples.len() < 2 || samples.iter().all(|&x| x == samples[0]) {
        return Err(AnalysisError::DegenerateBaseline(metric.to_string()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(AnalysisError::DegenerateBaseline(metric.to_string()));
    }
    let baseline = NormativeBaseline {
        age_min,
        age_max,
        metric: metric.to_string(),
        mean,
        sd,
        n: samples.len() as u64,
    };
    baseline.validate()?;
    Ok(baseline)
}

/// One-sided severity band; only elevated cavity fractions escalate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeverityBand {
    WithinRange,
    Borderline,
    Elevated,
    Severe,
}

impl SeverityBand {
    pub fn as_str(self) -> &'static str {
        match self {
            SeverityBand::WithinRange => "WithinRange",
            SeverityBand::Borderline => "Borderline",
            SeverityBand::Elevated => "Elevated",
            SeverityBand::Severe => "Severe",
        }
    }

    pub fn shout(self) -> &'static str {
        match self {
            SeverityBand::WithinRange => "WITHIN RANGE",
            SeverityBand::Borderline => "BORDERLINE",
            SeverityBand::Elevated => "ELEVATED",
            SeverityBand::Severe => "SEVERE",
        }
    }
}

impl fmt::Display for SeverityBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify_severity(z: f64) -> Result<SeverityBand, AnalysisError> {
    if !z.is_finite() {
        return Err(AnalysisError::NonFiniteZ(z));
    }
    Ok(if z < 1.0 {
        SeverityBand::WithinRange
    } else if z < 2.0 {
        SeverityBand::Borderline
    } else if z < 3.0 {
        SeverityBand::Elevated
    } else {
        SeverityBand::Severe
    })
}

/// Parses a baseline table with header `age_min,age_max,metric,mean,sd,n`.
pub fn parse_baselines(csv_text: &str) -> Result<Vec<NormativeBaseline>, AnalysisError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers().map_err(|e| AnalysisError::Csv(e.to_string()))?;
    let expected = ["age_min", "age_max", "metric", "mean", "sd", "n"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(AnalysisError::Csv(format!(
            "header must be '{}', found '{}'",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in reader.deserialize::<NormativeBaseline>() {
        let row = record.map_err(|e| AnalysisError::Csv(e.to_string()))?;
        row.validate()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn baselines_to_csv(rows: &[NormativeBaseline]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

/// First row whose age band contains `age` and whose metric matches.
pub fn lookup_baseline<'a>(
    rows: &'a [NormativeBaseline],
    metric: &str,
    age: f64,
) -> Result<&'a NormativeBaseline, AnalysisError> {
    rows.iter()
        .find(|r| r.metric == metric && r.covers(age))
        .ok_or_else(|| AnalysisError::BaselineMissing {
            metric: metric.to_string(),
            age,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(black: u64, area: u64) -> PixelCounts {
        PixelCounts {
            black_count: black,
            white_count: area - black,
            roi_area: area,
            black_coords: None,
            white_coords: None,
        }
    }

    fn size() -> SizeComparison {
        SizeComparison {
            target_extent: [0, 0, 1, 1],
            reference_extent: [0, 0, 1, 1],
            target_area: 4,
            reference_area: 4,
            area_ratio: 1.0,
        }
    }

    fn baseline(mean: f64, sd: f64) -> NormativeBaseline {
        NormativeBaseline {
            age_min: 60.0,
            age_max: 70.0,
            metric: CAVITY_RATIO.into(),
            mean,
            sd,
            n: 20,
        }
    }

    #[test]
    fn cavity_ratio_examples() {
        assert_eq!(compute_metrics(&counts(0, 100), &size()).unwrap().cavity_ratio, 0.0);
        assert_eq!(compute_metrics(&counts(100, 100), &size()).unwrap().cavity_ratio, 1.0);
        assert_eq!(compute_metrics(&counts(37, 148), &size()).unwrap().cavity_ratio, 0.25);
        assert_eq!(compute_metrics(&counts(0, 0), &size()), Err(AnalysisError::EmptyRoi));
    }

    #[test]
    fn z_score_examples() {
        assert_eq!(z_score(0.25, &baseline(0.25, 0.03)), 0.0);
        assert_eq!(z_score(0.28, &baseline(0.25, 0.03)), (0.28 - 0.25) / 0.03);
        assert!((z_score(0.31, &baseline(0.25, 0.03)) - 2.0).abs() < 1e-12);
        let b = baseline(0.4, 0.125);
        assert_eq!(z_score(b.mean + b.sd, &b), 1.0);
    }

    #[test]
    fn two_point_baseline() {
        let b = fit_baseline(&[0.2, 0.4], 60.0, 70.0, CAVITY_RATIO).unwrap();
        assert!((b.mean - 0.3).abs() < 1e-15);
        assert!((b.sd - 0.02f64.sqrt()).abs() < 1e-15);
        assert!((z_score(0.2, &b) + z_score(0.4, &b)).abs() < 1e-12);
        assert!(matches!(
            fit_baseline(&[0.3; 5], 60.0, 70.0, CAVITY_RATIO),
            Err(AnalysisError::DegenerateBaseline(_))
        ));
        assert!(fit_baseline(&[0.3], 60.0, 70.0, CAVITY_RATIO).is_err());
    }

    #[test]
    fn severity_bands() {
        use SeverityBand::*;
        let cases = [(0.0, WithinRange), (0.999, WithinRange), (1.0, Borderline), (2.0, Elevated), (2.99, Elevated), (3.0, Severe), (-4.0, WithinRange), (40.0, Severe)];
        for (z, band) in cases {
            assert_eq!(classify_severity(z).unwrap(), band, "z={z}");
        }
        assert!(classify_severity(f64::NAN).is_err());
        assert!(WithinRange < Borderline && Elevated < Severe);
    }

    #[test]
    fn csv_round_trip_and_lookup() {
        let text = "age_min,age_max,metric,mean,sd,n\n60,69,cavity_ratio,0.25,0.03,40\n70,79,cavity_ratio,0.3,0.04,35\n60,79,area_ratio,1,0.05,75\n";
        let rows = parse_baselines(text).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(lookup_baseline(&rows, CAVITY_RATIO, 72.0).unwrap().mean, 0.3);
        assert_eq!(lookup_baseline(&rows, AREA_RATIO, 65.0).unwrap().n, 75);
        assert!(matches!(
            lookup_baseline(&rows, CAVITY_RATIO, 85.0),
            Err(AnalysisError::BaselineMissing { .. })
        ));
        assert_eq!(parse_baselines(&baselines_to_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn csv_errors() {
        assert!(parse_baselines("min,max,metric,mean,sd,n\n").is_err());
        assert!(parse_baselines("age_min,age_max,metric,mean,sd,n\n60,70,cavity_ratio,0.2,0,10\n").is_err());
        assert!(parse_baselines("age_min,age_max,metric,mean,sd,n\n60,70,cavity_ratio,abc,0.1,10\n").is_err());
    }
}
