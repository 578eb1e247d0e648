//! Run configuration shared by the pipeline commands: task, streams, fusion
//! method, and training hyperparameters, loadable from a flat key=value
//! file with command-line flags taking precedence.

use std::fs;
use std::path::{Path, PathBuf};

use egoav_core::data::Task;
use egoav_core::fusion::{StreamId, STREAM_ORDER};
use egoav_core::nets::TrainConfig;
use egoav_core::{Error, Result};

/// How stream outputs are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusionMethod {
    None,
    /// Equal-weight score averaging.
    Unweighted,
    /// Score averaging with grid-searched per-stream weights.
    Weighted,
    /// A trained two-layer head over concatenated penultimate features.
    Fc,
}

impl FusionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            FusionMethod::None => "none",
            FusionMethod::Unweighted => "unweighted",
            FusionMethod::Weighted => "weighted",
            FusionMethod::Fc => "fc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FusionMethod::None),
            "unweighted" => Ok(FusionMethod::Unweighted),
            "weighted" => Ok(FusionMethod::Weighted),
            "fc" => Ok(FusionMethod::Fc),
            other => Err(Error::invalid(format!("unknown fusion method {other:?}"))),
        }
    }
}

/// One run's settings. Defaults follow the reference training recipe
/// (momentum 0.9, batch size 6); the learning rate usually needs re-tuning
/// per stream and corpus scale.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub streams: Vec<StreamId>,
    pub fusion: FusionMethod,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub dataset_root: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::Action,
            streams: STREAM_ORDER.to_vec(),
            fusion: FusionMethod::None,
            learning_rate: 1e-4,
            momentum: 0.9,
            batch_size: 6,
            epochs: 30,
            patience: 10,
            seed: 0,
            dataset_root: PathBuf::from("."),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Defaults, then the optional config file, then flag overrides; the
    /// merged result is validated.
    pub fn from_sources(file: Option<&Path>, overrides: &[(&str, String)]) -> Result<Self> {
        let mut config = RunConfig::default();
        if let Some(path) = file {
            config.apply_file(path)?;
        }
        for (key, value) in overrides {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Applies a flat `key = value` file. `#` starts a comment; blank lines
    /// are skipped; unknown keys are errors.
    fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::MalformedRecord {
                line: index + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::MalformedRecord {
                    line: index + 1,
                    message: e.to_string(),
                })?;
        }
        Ok(())
    }

    /// Sets one configuration key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "task" => self.task = Task::parse(value)?,
            "streams" => self.streams = parse_streams(value)?,
            "fusion" => self.fusion = FusionMethod::parse(value)?,
            "lr" => self.learning_rate = parse_number(key, value)?,
            "momentum" => self.momentum = parse_number(key, value)?,
            "batch" => self.batch_size = parse_count(key, value)?,
            "epochs" => self.epochs = parse_count(key, value)?,
            "patience" => self.patience = parse_count(key, value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|e| Error::Parse(format!("{key}: {e}")))?
            }
            "dataset_root" => self.dataset_root = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.streams.is_empty() {
            return Err(Error::invalid("at least one stream must be enabled"));
        }
        for (i, s) in self.streams.iter().enumerate() {
            if self.streams[..i].contains(s) {
                return Err(Error::invalid(format!(
                    "stream {} listed twice",
                    s.as_str()
                )));
            }
        }
        if self.fusion != FusionMethod::None && self.streams.len() < 2 {
            return Err(Error::invalid(format!(
                "fusion {:?} needs at least two streams",
                self.fusion.as_str()
            )));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::invalid("lr must be positive"));
        }
        if !self.momentum.is_finite() || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::invalid("batch and epochs must be positive"));
        }
        Ok(())
    }

    /// The optimizer settings of this run.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            batch_size: self.batch_size,
            epochs: self.epochs,
            patience: self.patience,
            seed: self.seed,
        }
    }
}

/// The shared settings flags; every value funnels through
/// [`RunConfig::set`], so flags and config-file keys behave identically.
#[derive(clap::Args, Debug, Default)]
pub struct ConfigFlags {
    /// Flat key=value settings file, applied before the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Label space to train or score: verb, noun, or action.
    #[arg(long)]
    pub task: Option<String>,
    /// Comma-separated streams: rgb, flow, audio.
    #[arg(long)]
    pub streams: Option<String>,
    /// Fusion method: none, unweighted, weighted, or fc.
    #[arg(long)]
    pub fusion: Option<String>,
    /// Learning rate.
    #[arg(long)]
    pub lr: Option<String>,
    #[arg(long)]
    pub momentum: Option<String>,
    /// Batch size.
    #[arg(long)]
    pub batch: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    /// Epochs without a validation improvement before stopping.
    #[arg(long)]
    pub patience: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Dataset directory.
    #[arg(long)]
    pub dataset_root: Option<String>,
    /// Directory for checkpoints, score tables, and reports.
    #[arg(long)]
    pub out_dir: Option<String>,
}

impl ConfigFlags {
    pub fn resolve(&self) -> Result<RunConfig> {
        let pairs = [
            ("task", &self.task),
            ("streams", &self.streams),
            ("fusion", &self.fusion),
            ("lr", &self.lr),
            ("momentum", &self.momentum),
            ("batch", &self.batch),
            ("epochs", &self.epochs),
            ("patience", &self.patience),
            ("seed", &self.seed),
            ("dataset_root", &self.dataset_root),
            ("out_dir", &self.out_dir),
        ];
        let overrides: Vec<(&str, String)> = pairs
            .into_iter()
            .filter_map(|(key, value)| value.clone().map(|v| (key, v)))
            .collect();
        RunConfig::from_sources(self.config.as_deref(), &overrides)
    }
}

fn parse_streams(value: &str) -> Result<Vec<StreamId>> {
    value
        .split(',')
        .map(|s| StreamId::parse(s.trim()))
        .collect()
}

fn parse_number(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|e| Error::Parse(format!("{key}: {e}")))
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    let n: usize = value
        .parse()
        .map_err(|e| Error::Parse(format!("{key}: {e}")))?;
    if n == 0 {
        return Err(Error::invalid(format!("{key} must be positive")));
    }
    Ok(n)
}
