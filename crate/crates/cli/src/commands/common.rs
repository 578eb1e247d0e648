//! Plumbing shared by the pipeline commands: dataset layout, label spaces,
//! example loading per stream, and the architecture presets the flags name.

use std::path::{Path, PathBuf};

use egoav_core::audio::SpectrogramConfig;
use egoav_core::data::{
    parse_annotations, AnnotationRecord, LabelMap, PartitionSpec, Scheme, Split, Task,
};
use egoav_core::fusion::StreamId;
use egoav_core::nets::{DilatedNetConfig, VisualBackboneConfig};
use egoav_core::tensor::Tensor;
use egoav_core::video::{frame_diff_flow, load_frame_sequence, FrameSequence, Modality};
use egoav_core::{Error, Result};

/// A dataset directory: `annotations.csv` plus `audio/`, `frames/`,
/// `spectrograms/` and `partition.csv` as the pipeline fills them in.
pub struct Dataset {
    pub root: PathBuf,
    pub records: Vec<AnnotationRecord>,
}

impl Dataset {
    pub fn load(root: &Path) -> Result<Self> {
        let records = parse_annotations(&root.join("annotations.csv"))?;
        if records.is_empty() {
            return Err(Error::invalid(format!(
                "{}: annotations list no segments",
                root.display()
            )));
        }
        Ok(Dataset {
            root: root.to_path_buf(),
            records,
        })
    }

    pub fn spectrogram_path(&self, segment_id: &str) -> PathBuf {
        self.root.join("spectrograms").join(format!("{segment_id}.spg1"))
    }

    pub fn frames_dir(&self, segment_id: &str) -> PathBuf {
        self.root.join("frames").join(segment_id)
    }

    pub fn partition_path(&self) -> PathBuf {
        self.root.join("partition.csv")
    }

    /// Reads `partition.csv`. The file stores only assignments, so the
    /// spec's scheme/seed metadata is nominal here; consumers of a loaded
    /// partition use the assignments alone.
    pub fn load_partition(&self) -> Result<PartitionSpec> {
        let path = self.partition_path();
        if !path.exists() {
            return Err(Error::invalid(format!(
                "{}: no partition.csv (run the partition command first)",
                self.root.display()
            )));
        }
        PartitionSpec::read_csv(&path, Scheme::Homemade, 0)
    }

    /// Records of one split, in annotation order. Errors if any annotated
    /// segment is missing from the partition.
    pub fn split_records(&self, spec: &PartitionSpec, split: Split) -> Result<Vec<&AnnotationRecord>> {
        let mut out = Vec::new();
        for record in &self.records {
            let assigned = spec.split_of(&record.segment_id).ok_or_else(|| {
                Error::invalid(format!(
                    "segment {} is annotated but not partitioned",
                    record.segment_id
                ))
            })?;
            if assigned == split {
                out.push(record);
            }
        }
        if out.is_empty() {
            return Err(Error::invalid(format!(
                "partition assigns no segments to {}",
                split.as_str()
            )));
        }
        Ok(out)
    }
}

/// The dense label space of one task, derived from the full annotation set
/// so every split shares the same class indices.
pub struct TaskLabels {
    pub task: Task,
    pub map: LabelMap,
}

impl TaskLabels {
    pub fn derive(records: &[AnnotationRecord], task: Task) -> Result<Self> {
        let map = LabelMap::from_labels(records.iter().map(|r| r.label(task)))?;
        Ok(TaskLabels { task, map })
    }

    pub fn num_classes(&self) -> usize {
        self.map.len()
    }

    pub fn dense_label(&self, record: &AnnotationRecord) -> Result<usize> {
        self.map.dense(record.label(self.task)).ok_or_else(|| {
            Error::invalid(format!(
                "segment {}: {} label {} missing from the label map",
                record.segment_id,
                self.task.as_str(),
                record.label(self.task)
            ))
        })
    }

    /// Dense labels of a record list, e.g. the train split for the
    /// reference baselines.
    pub fn dense_labels(&self, records: &[&AnnotationRecord]) -> Result<Vec<usize>> {
        records.iter().map(|r| self.dense_label(r)).collect()
    }
}

/// Named spectrogram geometries the CLI exposes.
pub fn spectrogram_profile(name: &str) -> Result<SpectrogramConfig> {
    match name {
        "input-shape" => Ok(SpectrogramConfig::input_shape()),
        "stated" => Ok(SpectrogramConfig::stated()),
        "desk" => Ok(SpectrogramConfig::desk()),
        other => Err(Error::invalid(format!(
            "unknown spectrogram profile {other:?} (expected input-shape, stated, or desk)"
        ))),
    }
}

/// Audio network sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AudioArch {
    /// Two small stages; the geometry for corpus-scale experiments.
    Tiny,
    /// Four small-dilation stages for mid-sized spectrograms.
    Compact,
    /// The full 21M-parameter geometry over 331×248 inputs.
    Reference,
}

impl AudioArch {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tiny" => Ok(AudioArch::Tiny),
            "compact" => Ok(AudioArch::Compact),
            "reference" => Ok(AudioArch::Reference),
            other => Err(Error::invalid(format!("unknown audio arch {other:?}"))),
        }
    }

    pub fn config(self, input_shape: (usize, usize), num_classes: usize) -> Result<DilatedNetConfig> {
        let config = match self {
            AudioArch::Tiny => DilatedNetConfig::tiny(input_shape, num_classes),
            AudioArch::Compact => DilatedNetConfig::compact(input_shape, num_classes),
            AudioArch::Reference => {
                let config = DilatedNetConfig::reference(num_classes);
                if config.input_shape != input_shape {
                    return Err(Error::invalid(format!(
                        "reference arch expects {:?} spectrograms, profile produces {:?}",
                        config.input_shape, input_shape
                    )));
                }
                config
            }
        };
        config.validate()?;
        Ok(config)
    }
}

/// Visual backbone sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VisualArch {
    /// 40×40 crops, widths [8, 12, 16], 64 penultimate features.
    Small,
    /// 64×64 crops, widths [16, 24, 32, 32], 256 penultimate features.
    Default,
}

impl VisualArch {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(VisualArch::Small),
            "default" => Ok(VisualArch::Default),
            other => Err(Error::invalid(format!("unknown visual arch {other:?}"))),
        }
    }

    pub fn config(self, modality: Modality, num_classes: usize) -> Result<VisualBackboneConfig> {
        let config = match self {
            VisualArch::Small => VisualBackboneConfig {
                in_channels: modality.channels(),
                input_hw: (40, 40),
                widths: vec![8, 12, 16],
                penultimate_dim: 64,
                num_classes,
            },
            VisualArch::Default => VisualBackboneConfig {
                in_channels: modality.channels(),
                ..VisualBackboneConfig::color_default(num_classes)
            },
        };
        config.validate()?;
        Ok(config)
    }
}

/// The frame modality behind a visual stream; audio has none.
pub fn stream_modality(stream: StreamId) -> Option<Modality> {
    match stream {
        StreamId::Rgb => Some(Modality::Rgb),
        StreamId::Flow => Some(Modality::Flow),
        StreamId::Audio => None,
    }
}

pub fn checkpoint_path(out_dir: &Path, stream: StreamId, task: Task) -> PathBuf {
    out_dir.join(format!("{}_{}.ckpt", stream.as_str(), task.as_str()))
}

pub fn history_path(out_dir: &Path, stream: StreamId, task: Task) -> PathBuf {
    out_dir.join(format!("{}_{}_history.csv", stream.as_str(), task.as_str()))
}

pub fn scores_path(out_dir: &Path, stream: StreamId, task: Task, split: Split) -> PathBuf {
    out_dir.join(format!(
        "{}_{}_{}.csv",
        stream.as_str(),
        task.as_str(),
        split.as_str()
    ))
}

pub fn fused_scores_path(out_dir: &Path, task: Task, split: Split) -> PathBuf {
    out_dir.join(format!("fused_{}_{}.csv", task.as_str(), split.as_str()))
}

/// Loads the cached spectrogram of every record as a labeled tensor.
pub fn load_audio_examples(
    dataset: &Dataset,
    records: &[&AnnotationRecord],
    labels: &TaskLabels,
    profile: &SpectrogramConfig,
) -> Result<Vec<(Tensor<f32>, usize)>> {
    records
        .iter()
        .map(|record| {
            let path = dataset.spectrogram_path(&record.segment_id);
            if !path.exists() {
                return Err(Error::invalid(format!(
                    "{}: no cached spectrogram (run the spectrogram command first)",
                    path.display()
                )));
            }
            let spec = egoav_core::audio::load_spectrogram(&path, profile)?;
            Ok((spec.to_tensor(), labels.dense_label(record)?))
        })
        .collect()
}

/// Loads the frame sequence of every record, derived as a frame-difference
/// flow sequence when the modality asks for it.
pub fn load_visual_examples(
    dataset: &Dataset,
    records: &[&AnnotationRecord],
    labels: &TaskLabels,
    modality: Modality,
) -> Result<Vec<(FrameSequence, usize)>> {
    records
        .iter()
        .map(|record| {
            let dir = dataset.frames_dir(&record.segment_id);
            let rgb = load_frame_sequence(&dir, record.segment_id.clone(), Modality::Rgb)?;
            let seq = match modality {
                Modality::Rgb => rgb,
                Modality::Flow => frame_diff_flow(&rgb)?,
            };
            Ok((seq, labels.dense_label(record)?))
        })
        .collect()
}
