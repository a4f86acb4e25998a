use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::HarnessError;
use crate::cnn::{ModelConfig, TrainConfig};
use crate::dataset::{AugmentParams, SplitSpec};
use crate::motion::{IntervalMapping, PipelineConfig, SummaryMode};

/// Environment variable that replaces every seed in the configuration.
pub const SEED_ENV: &str = "MW_SEED";

/// Which classifier to build for a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelKind {
    #[default]
    Alexnet,
    Compact,
}

impl ModelKind {
    pub fn build(self, output_size: (usize, usize), classes: usize) -> ModelConfig {
        match self {
            ModelKind::Alexnet => {
                let mut cfg = ModelConfig::alexnet(classes);
                cfg.input = (1, output_size.1, output_size.0);
                cfg
            }
            ModelKind::Compact => ModelConfig::compact(output_size.1, output_size.0, classes),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Alexnet => "alexnet",
            ModelKind::Compact => "compact",
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "alexnet" => Ok(ModelKind::Alexnet),
            "compact" => Ok(ModelKind::Compact),
            _ => Err(format!("unknown model {s:?} (alexnet, compact)")),
        }
    }
}

/// Values swept by `run_sweep`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxes {
    pub betas: Vec<f64>,
    pub distances: Vec<usize>,
    pub windows: Vec<usize>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        SweepAxes {
            betas: vec![0.7, 0.8, 0.9],
            distances: vec![1, 2, 3],
            windows: vec![9, 15, 21],
        }
    }
}

/// Split and augmentation settings applied when preparing a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DatasetSettings {
    pub split: SplitSpec,
    pub augment: AugmentParams,
}

/// Everything a CLI run can configure.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub pipeline: PipelineConfig,
    pub train: TrainConfig,
    pub model: ModelKind,
    pub dataset: DatasetSettings,
    pub sweep: SweepAxes,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, HarnessError> {
    let inner = value.trim().trim_start_matches('[').trim_end_matches(']');
    let items: Vec<T> = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(HarnessError::Config(format!("{key}: list is empty")));
    }
    Ok(items)
}

fn unquote(v: &str) -> &str {
    v.trim().trim_matches('"')
}

impl ExperimentConfig {
    /// Sets one `section.key` to a textual value, as in the config file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let (section, name) = key
            .split_once('.')
            .ok_or_else(|| HarnessError::Config(format!("{key}: expected section.key")))?;
        let p = &mut self.pipeline;
        let s = &mut p.silhouette;
        let t = &mut self.train;
        let d = &mut self.dataset;
        match (section, name) {
            ("pipeline", "beta") => p.beta = parse(key, value)?,
            ("pipeline", "flow_frame_distance" | "d") => p.flow_frame_distance = parse(key, value)?,
            ("pipeline", "flow_window" | "w") => p.flow_window = parse(key, value)?,
            ("pipeline", "fallback_interval") => p.fallback_interval = parse(key, value)?,
            ("pipeline", "interval_min") => p.interval_min = parse(key, value)?,
            ("pipeline", "interval_max") => p.interval_max = parse(key, value)?,
            ("pipeline", "trim_count") => p.trim_count = parse(key, value)?,
            ("pipeline", "output_width") => p.output_size.0 = parse(key, value)?,
            ("pipeline", "output_height") => p.output_size.1 = parse(key, value)?,
            ("pipeline", "eigen_threshold") => p.eigen_threshold = parse(key, value)?,
            ("pipeline", "flow_iterations") => p.flow_iterations = parse(key, value)?,
            ("pipeline", "summary_mode") => {
                p.summary_mode = match unquote(value) {
                    "cartesian" => SummaryMode::Cartesian,
                    "polar" => SummaryMode::Polar,
                    other => return Err(HarnessError::Config(format!("{key}: unknown mode {other:?}"))),
                }
            }
            ("pipeline", "interval_mapping") => {
                p.interval_mapping = match unquote(value) {
                    "direct" => IntervalMapping::Direct,
                    "inverse" => IntervalMapping::Inverse,
                    other => return Err(HarnessError::Config(format!("{key}: unknown mapping {other:?}"))),
                }
            }
            ("pipeline", "inverse_gain") => p.inverse_gain = parse(key, value)?,
            ("pipeline", "rng_seed") => p.rng_seed = parse(key, value)?,
            ("pipeline", "blur_kernel") => s.blur_kernel = parse(key, value)?,
            ("pipeline", "blur_sigma") => s.blur_sigma = parse(key, value)?,
            ("pipeline", "morph_radius") => s.morph_radius = parse(key, value)?,
            ("pipeline", "knn_samples") => s.knn.samples = parse(key, value)?,
            ("pipeline", "knn_k") => s.knn.k = parse(key, value)?,
            ("pipeline", "knn_radius") => s.knn.radius = parse(key, value)?,
            ("pipeline", "knn_update_probability") => s.knn.update_probability = parse(key, value)?,
            ("pipeline", "shadow_low") => s.knn.shadow_low = parse(key, value)?,
            ("pipeline", "shadow_high") => s.knn.shadow_high = parse(key, value)?,
            ("train", "learning_rate") => t.learning_rate = parse(key, value)?,
            ("train", "momentum") => t.momentum = parse(key, value)?,
            ("train", "batch_size") => t.batch_size = parse(key, value)?,
            ("train", "epochs") => t.epochs = parse(key, value)?,
            ("train", "seed") => t.seed = parse(key, value)?,
            ("train", "early_stop_patience") => t.early_stop_patience = parse(key, value)?,
            ("train", "model") => self.model = unquote(value).parse().map_err(HarnessError::Config)?,
            ("dataset", "train_ratio") => d.split.train = parse(key, value)?,
            ("dataset", "validation_ratio") => d.split.validation = parse(key, value)?,
            ("dataset", "test_ratio") => d.split.test = parse(key, value)?,
            ("dataset", "split_seed") => d.split.seed = parse(key, value)?,
            ("dataset", "n_aug") => d.augment.n_aug = parse(key, value)?,
            ("dataset", "max_shift") => d.augment.max_shift = parse(key, value)?,
            ("dataset", "augment_seed") => d.augment.seed = parse(key, value)?,
            ("sweep", "betas") => self.sweep.betas = parse_list(key, value)?,
            ("sweep", "distances") => self.sweep.distances = parse_list(key, value)?,
            ("sweep", "windows") => self.sweep.windows = parse_list(key, value)?,
            _ => return Err(HarnessError::Config(format!("unknown setting {key}"))),
        }
        Ok(())
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), HarnessError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("{assignment:?}: expected section.key=value")))?;
        self.set(key.trim(), value.trim())
    }

    /// Parses `[pipeline]`, `[train]`, `[dataset]` and `[sweep]` sections of
    /// `key = value` lines over the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        let mut cfg = ExperimentConfig::default();
        for (section, body) in &table {
            let toml::Value::Table(entries) = body else {
                return Err(HarnessError::Config(format!("top-level key {section} must be a section")));
            };
            for (name, value) in entries {
                let text = match value {
                    toml::Value::String(s) => s.clone(),
                    toml::Value::Integer(i) => i.to_string(),
                    toml::Value::Float(f) => f.to_string(),
                    toml::Value::Boolean(b) => b.to_string(),
                    toml::Value::Array(items) => {
                        let parts: Vec<String> = items.iter().map(|v| v.to_string()).collect();
                        format!("[{}]", parts.join(","))
                    }
                    other => {
                        return Err(HarnessError::Config(format!(
                            "{section}.{name}: unsupported value {other}"
                        )))
                    }
                };
                cfg.set(&format!("{section}.{name}"), &text)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Every seed set to `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.pipeline.rng_seed = seed;
        self.train.seed = seed;
        self.dataset.split.seed = seed;
        self.dataset.augment.seed = seed;
    }

    /// Applies `MW_SEED` if it is set.
    pub fn apply_env(&mut self) -> Result<(), HarnessError> {
        match std::env::var(SEED_ENV) {
            Ok(v) => {
                self.reseed(parse(SEED_ENV, &v)?);
                Ok(())
            }
            Err(std::env::VarError::NotPresent) => Ok(()),
            Err(e) => Err(HarnessError::Config(format!("{SEED_ENV}: {e}"))),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.pipeline.validate()?;
        self.train.validate()?;
        self.dataset.split.validate()?;
        self.dataset.augment.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_sections_and_overrides() {
        let text = r#"
[pipeline]
beta = 0.9
flow_window = 21
d = 2
summary_mode = "polar"
knn_radius = 25

[train]
epochs = 3
model = "compact"

[dataset]
n_aug = 4

[sweep]
betas = [0.7, 0.9]
windows = [9]
"#;
        let mut cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.pipeline.beta, 0.9);
        assert_eq!(cfg.pipeline.flow_window, 21);
        assert_eq!(cfg.pipeline.flow_frame_distance, 2);
        assert_eq!(cfg.pipeline.summary_mode, SummaryMode::Polar);
        assert_eq!(cfg.pipeline.silhouette.knn.radius, 25);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.model, ModelKind::Compact);
        assert_eq!(cfg.dataset.augment.n_aug, 4);
        assert_eq!(cfg.sweep.betas, [0.7, 0.9]);
        assert_eq!(cfg.sweep.windows, [9]);
        assert_eq!(cfg.sweep.distances, [1, 2, 3]);
        cfg.apply_override("train.epochs=7").unwrap();
        assert_eq!(cfg.train.epochs, 7);
        cfg.validate().unwrap();
    }

    #[test]
    fn bad_settings() {
        assert!(ExperimentConfig::from_toml_str("[pipeline]\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[pipeline]\nbeta = \"high\"\n").is_err());
        assert!(ExperimentConfig::from_toml_str("beta = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[sweep]\nbetas = []\n").is_err());
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.apply_override("no_equals").is_err());
        assert!(cfg.apply_override("beta=0.5").is_err());
        cfg.apply_override("pipeline.beta=1.5").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn reseed_touches_every_seed() {
        let mut cfg = ExperimentConfig::default();
        cfg.reseed(42);
        assert_eq!(cfg.pipeline.rng_seed, 42);
        assert_eq!(cfg.train.seed, 42);
        assert_eq!(cfg.dataset.split.seed, 42);
        assert_eq!(cfg.dataset.augment.seed, 42);
    }

    #[test]
    fn model_kinds_follow_output_size() {
        let m = ModelKind::Compact.build((160, 120), 2);
        assert_eq!(m.input, (1, 120, 160));
        assert_eq!(ModelKind::Alexnet.build((227, 227), 4), ModelConfig::alexnet(4));
    }
}
