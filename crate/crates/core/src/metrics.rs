//! Evaluation metrics: confusion-matrix quality, scalability statistics and
//! the COCOMO II effort equation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("confusion counts are all zero")]
    EmptyCounts,
    #[error("no samples")]
    EmptySamples,
    #[error("sample {0} is not positive")]
    NonPositiveSample(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fn_, fp, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when some ratio had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

fn ratio(num: f64, den: f64, flag: &mut bool) -> f64 {
    if den == 0.0 {
        *flag = true;
        0.0
    } else {
        num / den
    }
}

pub fn confusion_metrics(c: ConfusionCounts) -> Result<ConfusionMetrics, MetricsError> {
    if c.total() == 0 {
        return Err(MetricsError::EmptyCounts);
    }
    let (tp, fn_, fp, tn) = (c.tp as f64, c.fn_ as f64, c.fp as f64, c.tn as f64);
    let mut zero_division = false;
    let accuracy = (tp + tn) / c.total() as f64;
    let precision = ratio(tp, tp + fp, &mut zero_division);
    let recall = ratio(tp, tp + fn_, &mut zero_division);
    let f1 = ratio(2.0 * precision * recall, precision + recall, &mut zero_division);
    Ok(ConfusionMetrics {
        accuracy,
        precision,
        recall,
        f1,
        zero_division,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityRow {
    pub n_services: usize,
    /// Response times in milliseconds.
    pub samples: Vec<f64>,
    pub harmonic_mean: f64,
    pub stddev: f64,
    /// Harmonic mean per service.
    pub tps: f64,
    /// `1 - tps / baseline_tps`; 0 without a baseline.
    pub rate: f64,
}

pub fn harmonic_mean(samples: &[f64]) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    if let Some(&bad) = samples.iter().find(|&&x| !(x > 0.0)) {
        return Err(MetricsError::NonPositiveSample(bad));
    }
    Ok(samples.len() as f64 / samples.iter().map(|x| 1.0 / x).sum::<f64>())
}

/// Sample standard deviation (n - 1 denominator); 0 for a single sample.
pub fn sample_stddev(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

pub fn improvement_rate(tps: f64, baseline_tps: f64) -> f64 {
    1.0 - tps / baseline_tps
}

pub fn scalability_stats(
    samples: &[f64],
    n_services: usize,
    baseline_tps: Option<f64>,
) -> Result<ScalabilityRow, MetricsError> {
    if n_services == 0 {
        return Err(MetricsError::NonPositiveInput {
            name: "n_services",
            value: 0.0,
        });
    }
    let harmonic_mean = harmonic_mean(samples)?;
    let tps = harmonic_mean / n_services as f64;
    Ok(ScalabilityRow {
        n_services,
        samples: samples.to_vec(),
        harmonic_mean,
        stddev: sample_stddev(samples),
        tps,
        rate: baseline_tps.map_or(0.0, |b| improvement_rate(tps, b)),
    })
}

pub const COCOMO_A: f64 = 3.2;
pub const COCOMO_B: f64 = 1.05;

/// Effort in person-months: `a * kloc^b * eaf`.
pub fn cocomo_effort(kloc: f64, eaf: f64, a: f64, b: f64) -> Result<f64, MetricsError> {
    if !(kloc > 0.0) {
        return Err(MetricsError::NonPositiveInput { name: "kloc", value: kloc });
    }
    if !(eaf > 0.0) {
        return Err(MetricsError::NonPositiveInput { name: "eaf", value: eaf });
    }
    Ok(a * kloc.powf(b) * eaf)
}
