//! Dataset handling: annotation records, split construction, and the
//! synthetic multimodal corpus used for end-to-end pipeline checks.

mod annotations;
mod partition;
mod synth;

pub use annotations::{
    coverage_stats, parse_annotations, write_annotations, AnnotationRecord, LabelMap, Task,
    ANNOTATION_HEADER, NOUN_VOCAB, VERB_VOCAB,
};
pub use partition::{
    homemade_partition, participant_number, unseen_participant_partition, PartitionSpec, Scheme,
    Split,
};
pub use synth::{
    generate, noun_color, synth_audio, synth_frames, verb_tone_frequencies, SegmentPaths,
    SynthConfig,
};
