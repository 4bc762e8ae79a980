//! Flat `key=value` configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments win,
//! so command-line overrides are applied simply by setting them after the file.
//!
//! | key | meaning |
//! |-----|---------|
//! | `seed` | global seed, propagated to every stage |
//! | `output_root` | default output directory |
//! | `h_range`, `s_range`, `v_range` | vegetation mask ranges, `lo,hi` (exclusive lo) |
//! | `t_size`, `t_ratio`, `open_kernel_side` | segment filters and opening kernel |
//! | `alpha`, `beta` | weed sampling coefficients |
//! | `split` | `train,val,test` fractions |
//! | `input_side`, `batch_size`, `epochs`, `learning_rate`, `momentum`, `max_grad_norm` | training |
//! | `objective` | `cce`, `nmw`, `nmw-symmetric` or `dm` |
//! | `trials_per_dataset`, `keep_top_k`, `probe_epochs` | architecture search |
//! | `strict_ensemble` | require a budget gap for unanimous crop votes too |
//! | `budget.<crop>` | planted count for one crop category |

use std::path::{Path, PathBuf};

use serde::Serialize;
use weednet_core::dataset::{DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_SPLIT};
use weednet_core::ensemble::EnsemblePolicy;
use weednet_core::imaging::{ChannelRange, SegmentationParams};
use weednet_core::nn::TrainConfig;
use weednet_core::objectives::ObjectiveKind;
use weednet_core::search::SearchConfig;

use crate::error::{CliError, Result};

/// Parses `key=value` lines, skipping blanks and `#` comments.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got `{line}`", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse `{v}`")))
}

fn range(key: &str, v: &str) -> Result<ChannelRange> {
    let (lo, hi) = v
        .split_once(',')
        .ok_or_else(|| CliError::Config(format!("{key}: expected lo,hi")))?;
    Ok(ChannelRange::new(num(key, lo.trim())?, num(key, hi.trim())?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_root: Option<PathBuf>,
    pub segmentation: SegmentationParams,
    pub alpha: f64,
    pub beta: f64,
    pub split: (f64, f64, f64),
    pub train: TrainConfig,
    pub search: SearchConfig,
    pub objective: ObjectiveKind,
    pub strict_ensemble: bool,
    pub budget: Vec<(String, usize)>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            output_root: None,
            segmentation: SegmentationParams::default(),
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            split: DEFAULT_SPLIT,
            train: TrainConfig::default(),
            search: SearchConfig::default(),
            objective: ObjectiveKind::Dm,
            strict_ensemble: false,
            budget: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut cfg = PipelineConfig::default();
        for (k, v) in parse_kv(&text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    /// Loads `path` if given, then applies `overrides` in order.
    pub fn resolve(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.segmentation.validate()?;
        cfg.train_config().validate()?;
        cfg.search_config().validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = num(key, v)?,
            "output_root" => self.output_root = Some(PathBuf::from(v)),
            "h_range" => self.segmentation.h_range = range(key, v)?,
            "s_range" => self.segmentation.s_range = range(key, v)?,
            "v_range" => self.segmentation.v_range = range(key, v)?,
            "t_size" => self.segmentation.t_size = num(key, v)?,
            "t_ratio" => self.segmentation.t_ratio = num(key, v)?,
            "open_kernel_side" => self.segmentation.open_kernel_side = num(key, v)?,
            "alpha" => self.alpha = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "split" => {
                let parts: Vec<f64> = v
                    .split(',')
                    .map(|p| num(key, p.trim()))
                    .collect::<Result<_>>()?;
                let [a, b, c] = parts[..] else {
                    return Err(CliError::Config("split: expected train,val,test".into()));
                };
                self.split = (a, b, c);
            }
            "input_side" => self.train.input_side = num(key, v)?,
            "batch_size" => self.train.batch_size = num(key, v)?,
            "epochs" => self.train.epochs = num(key, v)?,
            "learning_rate" => self.train.learning_rate = num(key, v)?,
            "momentum" => self.train.momentum = num(key, v)?,
            "max_grad_norm" => self.train.max_grad_norm = num(key, v)?,
            "objective" => self.objective = v.parse()?,
            "trials_per_dataset" => self.search.trials_per_dataset = num(key, v)?,
            "keep_top_k" => self.search.keep_top_k = num(key, v)?,
            "probe_epochs" => self.search.probe_epochs = num(key, v)?,
            "strict_ensemble" => self.strict_ensemble = num(key, v)?,
            _ => match key.strip_prefix("budget.") {
                Some(name) if !name.is_empty() => {
                    let count = num(key, v)?;
                    match self.budget.iter_mut().find(|(n, _)| n == name) {
                        Some(entry) => entry.1 = count,
                        None => self.budget.push((name.to_string(), count)),
                    }
                }
                _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
            },
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig { seed: self.seed, ..self.search.clone() }
    }

    pub fn ensemble_policy(&self) -> EnsemblePolicy {
        EnsemblePolicy { strict: self.strict_ensemble }
    }
}

/// Reads a budget file of `category=count` lines.
pub fn read_budget(path: &Path) -> Result<Vec<(String, usize)>> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_kv(&text)?
        .into_iter()
        .map(|(k, v)| Ok((k.clone(), num(&k, &v)?)))
        .collect()
}

/// Splits `key=value` command-line overrides.
pub fn parse_override(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}
