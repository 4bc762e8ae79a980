//! JSON report shapes written by `evaluate`.

use serde::Serialize;
use serde_json::Value;
use weednet_core::dataset::Taxonomy;
use weednet_core::ensemble::EnsemblePolicy;
use weednet_core::objectives::{ErrorRates, EvalReport};

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub weights: String,
    /// Name of the directory holding the weight file, if any.
    pub weights_dir: Option<String>,
    pub genotype: String,
    pub objective: Option<String>,
    pub report: EvalReport,
}

/// Error rates in percent of evaluated samples.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorPercentages {
    pub best: ErrorRates,
    pub worst: ErrorRates,
    pub ensemble: ErrorRates,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateReport {
    pub taxonomy: Taxonomy,
    pub budget: Vec<(String, usize)>,
    pub policy: EnsemblePolicy,
    pub models: Vec<ModelReport>,
    /// Index into `models` of the most accurate sub-model (first on ties).
    pub best_model: usize,
    pub best_accuracy: f64,
    pub ensemble: EvalReport,
    pub error_percentages: ErrorPercentages,
}

pub fn percent(r: &EvalReport) -> ErrorRates {
    let f = r.error_rates();
    ErrorRates {
        moderate: 100.0 * f.moderate,
        minor: 100.0 * f.minor,
        considerable: 100.0 * f.considerable,
        dangerous: 100.0 * f.dangerous,
    }
}

pub fn argmax_accuracy(models: &[ModelReport]) -> usize {
    let mut best = 0;
    for (i, m) in models.iter().enumerate() {
        if m.report.accuracy > models[best].report.accuracy {
            best = i;
        }
    }
    best
}

pub fn argmin_accuracy(models: &[ModelReport]) -> usize {
    let mut worst = 0;
    for (i, m) in models.iter().enumerate() {
        if m.report.accuracy < models[worst].report.accuracy {
            worst = i;
        }
    }
    worst
}

/// JSON value for a weed:crop ratio, with `"inf"` for the no-crop case.
pub fn ratio_value(r: f64) -> Value {
    if r.is_infinite() {
        Value::String("inf".into())
    } else {
        serde_json::json!(r)
    }
}
