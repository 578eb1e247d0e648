//! Annotation records for labeled video segments and their CSV form.
//!
//! Each record names a segment, its participant and source video, its time
//! span, and a verb/noun class pair drawn from fixed vocabularies. The CSV
//! layout is `segment_id,participant_id,video_id,start_s,stop_s,verb_class,
//! noun_class` with a mandatory header row.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size of the verb vocabulary; verb classes are 0-indexed below this.
pub const VERB_VOCAB: usize = 125;
/// Size of the noun vocabulary; noun classes are 0-indexed below this.
pub const NOUN_VOCAB: usize = 352;

/// Expected CSV header, in column order.
pub const ANNOTATION_HEADER: [&str; 7] = [
    "segment_id",
    "participant_id",
    "video_id",
    "start_s",
    "stop_s",
    "verb_class",
    "noun_class",
];

/// Which label a task reads from a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Verb,
    Noun,
    /// The (verb, noun) pair, as a single stable id.
    Action,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Verb => "verb",
            Task::Noun => "noun",
            Task::Action => "action",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "verb" => Ok(Task::Verb),
            "noun" => Ok(Task::Noun),
            "action" => Ok(Task::Action),
            other => Err(Error::invalid(format!("unknown task {other:?}"))),
        }
    }
}

/// One labeled video segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub segment_id: String,
    pub participant_id: String,
    pub video_id: String,
    pub start_s: f64,
    pub stop_s: f64,
    pub verb_class: usize,
    pub noun_class: usize,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<()> {
        if self.segment_id.is_empty() {
            return Err(Error::invalid("segment_id must not be empty"));
        }
        if self.verb_class >= VERB_VOCAB {
            return Err(Error::invalid(format!(
                "verb_class {} outside vocabulary of {VERB_VOCAB}",
                self.verb_class
            )));
        }
        if self.noun_class >= NOUN_VOCAB {
            return Err(Error::invalid(format!(
                "noun_class {} outside vocabulary of {NOUN_VOCAB}",
                self.noun_class
            )));
        }
        if !self.start_s.is_finite() || !self.stop_s.is_finite() || self.stop_s <= self.start_s {
            return Err(Error::invalid(format!(
                "segment {} has invalid time span [{}, {}]",
                self.segment_id, self.start_s, self.stop_s
            )));
        }
        Ok(())
    }

    /// Stable id of the (verb, noun) pair: `verb_class · NOUN_VOCAB + noun_class`.
    pub fn action_class(&self) -> usize {
        self.verb_class * NOUN_VOCAB + self.noun_class
    }

    pub fn duration_s(&self) -> f64 {
        self.stop_s - self.start_s
    }

    pub fn label(&self, task: Task) -> usize {
        match task {
            Task::Verb => self.verb_class,
            Task::Noun => self.noun_class,
            Task::Action => self.action_class(),
        }
    }
}

/// Reads and validates an annotation CSV. Malformed rows are reported with
/// their 1-based file line (the header is line 1).
pub fn parse_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if headers.iter().ne(ANNOTATION_HEADER) {
        return Err(Error::MalformedRecord {
            line: 1,
            message: format!(
                "header must be {:?}, found {:?}",
                ANNOTATION_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut records = Vec::new();
    for (index, row) in reader.deserialize::<AnnotationRecord>().enumerate() {
        let line = index + 2;
        let record = row.map_err(|e| Error::MalformedRecord {
            line,
            message: e.to_string(),
        })?;
        record.validate().map_err(|e| Error::MalformedRecord {
            line,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the standard CSV layout.
pub fn write_annotations(path: &Path, records: &[AnnotationRecord]) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    for record in records {
        record.validate()?;
        writer
            .serialize(record)
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// Fraction of segments whose duration is at most `threshold_s`: the share
/// of the dataset a fixed-length clip of that duration covers completely.
pub fn coverage_stats(records: &[AnnotationRecord], threshold_s: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("coverage of an empty record list is undefined"));
    }
    if !threshold_s.is_finite() || threshold_s <= 0.0 {
        return Err(Error::invalid(format!("invalid threshold {threshold_s}")));
    }
    let covered = records
        .iter()
        .filter(|r| r.duration_s() <= threshold_s)
        .count();
    Ok(covered as f64 / records.len() as f64)
}

/// A dense remapping of the class ids that actually occur, for training
/// heads sized to the observed classes rather than the full vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    classes: Vec<usize>,
}

impl LabelMap {
    /// Collects the distinct labels, sorted ascending.
    pub fn from_labels<I: IntoIterator<Item = usize>>(labels: I) -> Result<Self> {
        let mut classes: Vec<usize> = labels.into_iter().collect();
        classes.sort_unstable();
        classes.dedup();
        if classes.is_empty() {
            return Err(Error::invalid("label map needs at least one label"));
        }
        Ok(LabelMap { classes })
    }

    /// Dense index of an original class id, if it occurred.
    pub fn dense(&self, original: usize) -> Option<usize> {
        self.classes.binary_search(&original).ok()
    }

    /// Original class id behind a dense index.
    pub fn original(&self, dense: usize) -> usize {
        self.classes[dense]
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn record(id: &str, verb: usize, noun: usize) -> AnnotationRecord {
        AnnotationRecord {
            segment_id: id.to_string(),
            participant_id: "P01".to_string(),
            video_id: "P01_01".to_string(),
            start_s: 1.0,
            stop_s: 4.5,
            verb_class: verb,
            noun_class: noun,
        }
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn well_formed_file_parses_all_rows() {
        let file = write_csv(
            "segment_id,participant_id,video_id,start_s,stop_s,verb_class,noun_class\n\
             seg_0,P01,P01_01,0.0,2.5,3,10\n\
             seg_1,P02,P02_03,1.5,3.0,0,351\n\
             seg_2,P26,P26_11,10.0,16.0,124,0\n",
        );
        let records = parse_annotations(file.path()).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[1].noun_class, 351);
        assert_eq!(records[2].participant_id, "P26");
    }

    #[test]
    fn verb_class_at_vocabulary_size_is_rejected_with_line_number() {
        let file = write_csv(
            "segment_id,participant_id,video_id,start_s,stop_s,verb_class,noun_class\n\
             seg_0,P01,P01_01,0.0,2.5,3,10\n\
             seg_1,P01,P01_01,0.0,2.5,125,10\n",
        );
        match parse_annotations(file.path()) {
            Err(Error::MalformedRecord { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("verb_class 125"), "{message}");
            }
            other => panic!("expected malformed record, got {other:?}"),
        }
    }

    #[test]
    fn noun_class_at_vocabulary_size_is_rejected() {
        let mut r = record("seg", 0, 352);
        assert!(r.validate().is_err());
        r.noun_class = 351;
        r.validate().unwrap();
    }

    #[test]
    fn stop_not_after_start_is_rejected() {
        let file = write_csv(
            "segment_id,participant_id,video_id,start_s,stop_s,verb_class,noun_class\n\
             seg_0,P01,P01_01,2.5,2.5,3,10\n",
        );
        match parse_annotations(file.path()) {
            Err(Error::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed record, got {other:?}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected_as_line_one() {
        let file = write_csv("segment,participant\nseg_0,P01\n");
        match parse_annotations(file.path()) {
            Err(Error::MalformedRecord { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected malformed record, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_records() {
        let records = vec![record("seg_0", 3, 10), record("seg_1", 124, 351)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotations.csv");
        write_annotations(&path, &records).unwrap();
        assert_eq!(parse_annotations(&path).unwrap(), records);
    }

    #[test]
    fn action_class_is_a_bijection_over_the_vocabularies() {
        let a = record("a", 3, 10).action_class();
        assert_eq!(a, 3 * NOUN_VOCAB + 10);
        // Distinct pairs map to distinct ids at the vocabulary corners.
        let ids = [
            record("a", 0, 0).action_class(),
            record("b", 0, 351).action_class(),
            record("c", 124, 0).action_class(),
            record("d", 124, 351).action_class(),
        ];
        let mut unique = ids.to_vec();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), ids.len());
        assert_eq!(ids[3], VERB_VOCAB * NOUN_VOCAB - 1);
    }

    #[test]
    fn task_selects_the_matching_label() {
        let r = record("a", 3, 10);
        assert_eq!(r.label(Task::Verb), 3);
        assert_eq!(r.label(Task::Noun), 10);
        assert_eq!(r.label(Task::Action), r.action_class());
        assert_eq!(Task::parse("action").unwrap(), Task::Action);
        assert!(Task::parse("verbs").is_err());
    }

    #[test]
    fn coverage_counts_durations_within_threshold() {
        let mut records = vec![record("a", 0, 0), record("b", 0, 0), record("c", 0, 0)];
        records[0].stop_s = records[0].start_s + 3.0;
        records[1].stop_s = records[1].start_s + 3.0;
        records[2].stop_s = records[2].start_s + 5.0;
        let fraction = coverage_stats(&records, 4.0).unwrap();
        assert!((fraction - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(coverage_stats(&records, 10.0).unwrap(), 1.0);
        assert!(coverage_stats(&[], 4.0).is_err());
    }

    #[test]
    fn label_map_densifies_sparse_ids() {
        let map = LabelMap::from_labels([352, 7, 1400, 7]).unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map.dense(7), Some(0));
        assert_eq!(map.dense(352), Some(1));
        assert_eq!(map.dense(1400), Some(2));
        assert_eq!(map.dense(8), None);
        assert_eq!(map.original(2), 1400);
    }
}
