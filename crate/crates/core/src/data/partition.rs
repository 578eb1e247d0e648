//! Train/val/test partitioning of annotation records under two schemes: a
//! category-aware random split and a held-out-participant split.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::annotations::AnnotationRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split {other:?}"))),
        }
    }
}

/// How a partition was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Random split honoring per-action-category guarantees and global
    /// val/test fraction targets.
    Homemade,
    /// Participants 26 and up form the test split; the rest divide into
    /// train and a verb-stratified validation slice.
    UnseenParticipant,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Homemade => "homemade",
            Scheme::UnseenParticipant => "unseen-participant",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "homemade" => Ok(Scheme::Homemade),
            "unseen-participant" => Ok(Scheme::UnseenParticipant),
            other => Err(Error::invalid(format!("unknown scheme {other:?}"))),
        }
    }
}

/// A split assignment for every segment, in the input record order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSpec {
    scheme: Scheme,
    seed: u64,
    assignments: Vec<(String, Split)>,
}

impl PartitionSpec {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignments(&self) -> &[(String, Split)] {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn split_of(&self, segment_id: &str) -> Option<Split> {
        self.assignments
            .iter()
            .find(|(id, _)| id == segment_id)
            .map(|(_, s)| *s)
    }

    /// Segment ids assigned to one split, in input order.
    pub fn ids_in(&self, split: Split) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, s)| *s == split)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignments.iter().filter(|(_, s)| *s == split).count()
    }

    /// Writes the `segment_id,split` CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        writer
            .write_record(["segment_id", "split"])
            .map_err(|e| Error::Parse(e.to_string()))?;
        for (id, split) in &self.assignments {
            writer
                .write_record([id.as_str(), split.as_str()])
                .map_err(|e| Error::Parse(e.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a `segment_id,split` CSV written by [`PartitionSpec::write_csv`].
    /// The scheme and seed are not part of the file; callers supply them.
    pub fn read_csv(path: &Path, scheme: Scheme, seed: u64) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?;
        if headers.iter().ne(["segment_id", "split"]) {
            return Err(Error::MalformedRecord {
                line: 1,
                message: "header must be segment_id,split".to_string(),
            });
        }
        let mut assignments = Vec::new();
        for (index, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::MalformedRecord {
                line: index + 2,
                message: e.to_string(),
            })?;
            let split = Split::parse(&row[1]).map_err(|e| Error::MalformedRecord {
                line: index + 2,
                message: e.to_string(),
            })?;
            assignments.push((row[0].to_string(), split));
        }
        Ok(PartitionSpec {
            scheme,
            seed,
            assignments,
        })
    }
}

fn validated(records: &[AnnotationRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::invalid("cannot partition an empty record list"));
    }
    for record in records {
        record.validate()?;
    }
    Ok(())
}

/// Category-aware random split. Guarantees, per action category: at least
/// one sample in train, and at least one in test whenever the category has
/// two or more samples. The remaining samples are shuffled and allocated to
/// bring test toward 15 % of the records and val toward 10 %; everything
/// left goes to train.
pub fn homemade_partition(records: &[AnnotationRecord], seed: u64) -> Result<PartitionSpec> {
    validated(records)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Group record indices by action category, in a deterministic order.
    let mut by_action: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        by_action.entry(record.action_class()).or_default().push(i);
    }

    let mut split = vec![Split::Train; records.len()];
    let mut residual: Vec<usize> = Vec::new();
    let mut test_count = 0usize;
    for members in by_action.values() {
        let mut members = members.clone();
        members.shuffle(&mut rng);
        // First the guarantees, then the leftovers join the global pool.
        if members.len() >= 2 {
            split[members[1]] = Split::Test;
            test_count += 1;
        }
        residual.extend(members.iter().skip(2).copied());
    }
    residual.shuffle(&mut rng);

    let n = records.len();
    let test_target = (0.15 * n as f64).round() as usize;
    let val_target = (0.10 * n as f64).round() as usize;
    let mut iter = residual.into_iter();
    while test_count < test_target {
        match iter.next() {
            Some(i) => {
                split[i] = Split::Test;
                test_count += 1;
            }
            None => break,
        }
    }
    let mut val_count = 0usize;
    while val_count < val_target {
        match iter.next() {
            Some(i) => {
                split[i] = Split::Val;
                val_count += 1;
            }
            None => break,
        }
    }
    // Whatever remains keeps its Train default.

    Ok(PartitionSpec {
        scheme: Scheme::Homemade,
        seed,
        assignments: records
            .iter()
            .zip(&split)
            .map(|(r, s)| (r.segment_id.clone(), *s))
            .collect(),
    })
}

/// Parses "P07" → 7. Accepts one or more digits after the mandatory `P`.
pub fn participant_number(id: &str) -> Result<u32> {
    let digits = id
        .strip_prefix('P')
        .ok_or_else(|| Error::Parse(format!("participant id {id:?} does not start with P")))?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Parse(format!(
            "participant id {id:?} is not P followed by digits"
        )));
    }
    digits
        .parse()
        .map_err(|e| Error::Parse(format!("participant id {id:?}: {e}")))
}

/// Held-out-participant split: participants numbered 26 and higher form the
/// test set; the rest are divided into train and a validation slice of 10 %
/// per verb class (rounded per class).
pub fn unseen_participant_partition(
    records: &[AnnotationRecord],
    seed: u64,
) -> Result<PartitionSpec> {
    validated(records)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut split = vec![Split::Train; records.len()];
    let mut by_verb: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        if participant_number(&record.participant_id)? >= 26 {
            split[i] = Split::Test;
        } else {
            by_verb.entry(record.verb_class).or_default().push(i);
        }
    }

    for members in by_verb.values() {
        let mut members = members.clone();
        members.shuffle(&mut rng);
        let take = (0.10 * members.len() as f64).round() as usize;
        for &i in members.iter().take(take) {
            split[i] = Split::Val;
        }
    }

    Ok(PartitionSpec {
        scheme: Scheme::UnseenParticipant,
        seed,
        assignments: records
            .iter()
            .zip(&split)
            .map(|(r, s)| (r.segment_id.clone(), *s))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn record(id: usize, participant: u32, verb: usize, noun: usize) -> AnnotationRecord {
        AnnotationRecord {
            segment_id: format!("seg_{id:05}"),
            participant_id: format!("P{participant:02}"),
            video_id: format!("P{participant:02}_01"),
            start_s: 0.0,
            stop_s: 3.0,
            verb_class: verb,
            noun_class: noun,
        }
    }

    fn random_records(n: usize, verbs: usize, nouns: usize, seed: u64) -> Vec<AnnotationRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                record(
                    i,
                    rng.gen_range(1..=31),
                    rng.gen_range(0..verbs),
                    rng.gen_range(0..nouns),
                )
            })
            .collect()
    }

    fn category_splits(
        records: &[AnnotationRecord],
        spec: &PartitionSpec,
    ) -> BTreeMap<usize, Vec<Split>> {
        let mut map: BTreeMap<usize, Vec<Split>> = BTreeMap::new();
        for (record, (id, split)) in records.iter().zip(spec.assignments()) {
            assert_eq!(&record.segment_id, id);
            map.entry(record.action_class()).or_default().push(*split);
        }
        map
    }

    #[test]
    fn single_sample_categories_stay_in_train() {
        let records = vec![record(0, 1, 0, 0), record(1, 2, 1, 1), record(2, 3, 2, 2)];
        let spec = homemade_partition(&records, 7).unwrap();
        assert!(spec.assignments().iter().all(|(_, s)| *s == Split::Train));
    }

    #[test]
    fn two_sample_categories_split_into_train_and_test() {
        let mut records = Vec::new();
        for c in 0..5 {
            records.push(record(2 * c, 1, c, c));
            records.push(record(2 * c + 1, 2, c, c));
        }
        let spec = homemade_partition(&records, 3).unwrap();
        for splits in category_splits(&records, &spec).values() {
            let mut sorted = splits.clone();
            sorted.sort_by_key(|s| s.as_str());
            assert_eq!(sorted, vec![Split::Test, Split::Train]);
        }
    }

    #[test]
    fn category_guarantees_hold_on_randomized_inputs() {
        for seed in 0..30 {
            let records = random_records(200, 8, 6, seed);
            let spec = homemade_partition(&records, seed ^ 0xabcd).unwrap();
            assert_eq!(spec.len(), records.len());
            for (action, splits) in category_splits(&records, &spec) {
                assert!(
                    splits.contains(&Split::Train),
                    "category {action} has no train sample"
                );
                if splits.len() >= 2 {
                    assert!(
                        splits.contains(&Split::Test),
                        "category {action} with {} samples has no test sample",
                        splits.len()
                    );
                }
            }
        }
    }

    #[test]
    fn fractions_approach_the_global_targets_on_a_large_uniform_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let records: Vec<AnnotationRecord> = (0..1000)
            .map(|i| {
                let c = rng.gen_range(0..10);
                record(i, 1 + (i % 20) as u32, c, c)
            })
            .collect();
        let spec = homemade_partition(&records, 11).unwrap();
        let val = spec.count(Split::Val) as f64 / 1000.0;
        let test = spec.count(Split::Test) as f64 / 1000.0;
        assert!((val - 0.10).abs() <= 0.02, "val fraction {val}");
        assert!((test - 0.15).abs() <= 0.02, "test fraction {test}");
    }

    #[test]
    fn homemade_is_deterministic_per_seed_and_varies_across_seeds() {
        let records = random_records(150, 6, 5, 9);
        let a = homemade_partition(&records, 42).unwrap();
        let b = homemade_partition(&records, 42).unwrap();
        let c = homemade_partition(&records, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.assignments(), c.assignments());
    }

    #[test]
    fn high_numbered_participants_form_the_test_split() {
        let records = vec![
            record(0, 26, 0, 0),
            record(1, 31, 1, 1),
            record(2, 5, 0, 0),
            record(3, 25, 1, 1),
        ];
        let spec = unseen_participant_partition(&records, 0).unwrap();
        assert_eq!(spec.split_of("seg_00000"), Some(Split::Test));
        assert_eq!(spec.split_of("seg_00001"), Some(Split::Test));
        assert_ne!(spec.split_of("seg_00002"), Some(Split::Test));
        assert_ne!(spec.split_of("seg_00003"), Some(Split::Test));
    }

    #[test]
    fn no_low_numbered_participant_ever_reaches_test() {
        for seed in 0..20 {
            let records = random_records(120, 5, 5, seed + 100);
            let spec = unseen_participant_partition(&records, seed).unwrap();
            for (record, (_, split)) in records.iter().zip(spec.assignments()) {
                let number: u32 = record.participant_id[1..].parse().unwrap();
                if number >= 26 {
                    assert_eq!(*split, Split::Test);
                } else {
                    assert_ne!(*split, Split::Test);
                }
            }
        }
    }

    #[test]
    fn validation_is_roughly_ten_percent_per_verb() {
        let mut records = Vec::new();
        let mut id = 0;
        for verb in 0..3 {
            for _ in 0..100 {
                records.push(record(id, 1 + (id % 25) as u32, verb, 0));
                id += 1;
            }
        }
        let spec = unseen_participant_partition(&records, 5).unwrap();
        for verb in 0..3 {
            let members: Vec<Split> = records
                .iter()
                .zip(spec.assignments())
                .filter(|(r, _)| r.verb_class == verb)
                .map(|(_, (_, s))| *s)
                .collect();
            let val = members.iter().filter(|s| **s == Split::Val).count() as f64
                / members.len() as f64;
            assert!((val - 0.10).abs() <= 0.03, "verb {verb} val fraction {val}");
        }
    }

    #[test]
    fn malformed_participant_ids_are_rejected() {
        let mut records = vec![record(0, 1, 0, 0)];
        records[0].participant_id = "Q01".to_string();
        assert!(unseen_participant_partition(&records, 0).is_err());
        records[0].participant_id = "P".to_string();
        assert!(unseen_participant_partition(&records, 0).is_err());
        records[0].participant_id = "P1x".to_string();
        assert!(unseen_participant_partition(&records, 0).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_assignments() {
        let records = random_records(40, 4, 4, 3);
        let spec = homemade_partition(&records, 17).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("partition.csv");
        spec.write_csv(&path).unwrap();
        let loaded = PartitionSpec::read_csv(&path, Scheme::Homemade, 17).unwrap();
        assert_eq!(spec, loaded);
    }

    #[test]
    fn splits_cover_every_record_exactly_once() {
        for seed in 0..10 {
            let records = random_records(80, 4, 4, seed + 50);
            for spec in [
                homemade_partition(&records, seed).unwrap(),
                unseen_participant_partition(&records, seed).unwrap(),
            ] {
                assert_eq!(spec.len(), records.len());
                let total = spec.count(Split::Train) + spec.count(Split::Val)
                    + spec.count(Split::Test);
                assert_eq!(total, records.len());
                // Ids appear exactly once, in input order.
                for (record, (id, _)) in records.iter().zip(spec.assignments()) {
                    assert_eq!(&record.segment_id, id);
                }
            }
        }
    }
}
