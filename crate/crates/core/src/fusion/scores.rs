//! Per-stream score containers and penultimate-feature concatenation.

use crate::error::{Error, Result};

/// The three modality streams, in their fixed fusion order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamId {
    Rgb,
    Flow,
    Audio,
}

/// Concatenation and CSV column order for multi-stream features.
pub const STREAM_ORDER: [StreamId; 3] = [StreamId::Rgb, StreamId::Flow, StreamId::Audio];

impl StreamId {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamId::Rgb => "rgb",
            StreamId::Flow => "flow",
            StreamId::Audio => "audio",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rgb" => Ok(StreamId::Rgb),
            "flow" => Ok(StreamId::Flow),
            "audio" => Ok(StreamId::Audio),
            other => Err(Error::invalid(format!("unknown stream id {other:?}"))),
        }
    }
}

/// One stream's output for one segment: a softmax score vector and the
/// penultimate-layer features that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamScores {
    pub stream_id: StreamId,
    pub probs: Vec<f32>,
    pub penultimate: Vec<f32>,
}

impl StreamScores {
    pub fn new(stream_id: StreamId, probs: Vec<f32>, penultimate: Vec<f32>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("stream scores need at least one class"));
        }
        let sum: f32 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-4 || probs.iter().any(|p| *p < 0.0) {
            return Err(Error::invalid(format!(
                "stream probabilities must form a simplex (sum {sum})"
            )));
        }
        Ok(StreamScores {
            stream_id,
            probs,
            penultimate,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }
}

/// Concatenates penultimate features in the fixed (rgb, flow, audio) order,
/// skipping streams that are absent from the provided list but requiring the
/// list to contain no duplicates and at least one stream.
pub fn concat_penultimate(scores: &[StreamScores]) -> Result<Vec<f32>> {
    if scores.is_empty() {
        return Err(Error::invalid("no streams to concatenate"));
    }
    let mut out = Vec::new();
    for wanted in STREAM_ORDER {
        let matches: Vec<&StreamScores> =
            scores.iter().filter(|s| s.stream_id == wanted).collect();
        if matches.len() > 1 {
            return Err(Error::invalid(format!(
                "stream {} appears {} times",
                wanted.as_str(),
                matches.len()
            )));
        }
        if let Some(s) = matches.first() {
            out.extend_from_slice(&s.penultimate);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(id: StreamId, penultimate: Vec<f32>) -> StreamScores {
        StreamScores::new(id, vec![0.5, 0.5], penultimate).unwrap()
    }

    #[test]
    fn full_scale_dims_sum_to_published_feature_length() {
        let concat = concat_penultimate(&[
            scores(StreamId::Rgb, vec![0.0; 2048]),
            scores(StreamId::Flow, vec![0.0; 2048]),
            scores(StreamId::Audio, vec![0.0; 256]),
        ])
        .unwrap();
        assert_eq!(concat.len(), 4352);
    }

    #[test]
    fn desk_scale_dims_concatenate_to_768() {
        let concat = concat_penultimate(&[
            scores(StreamId::Rgb, vec![0.0; 256]),
            scores(StreamId::Flow, vec![0.0; 256]),
            scores(StreamId::Audio, vec![0.0; 256]),
        ])
        .unwrap();
        assert_eq!(concat.len(), 768);
    }

    #[test]
    fn order_is_fixed_regardless_of_input_order() {
        let concat = concat_penultimate(&[
            scores(StreamId::Audio, vec![3.0]),
            scores(StreamId::Rgb, vec![1.0]),
            scores(StreamId::Flow, vec![2.0]),
        ])
        .unwrap();
        assert_eq!(concat, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn sub_ranges_are_preserved_exactly() {
        let rgb = vec![0.25, -0.5, 1.0];
        let audio = vec![9.0, 8.0];
        let concat = concat_penultimate(&[
            scores(StreamId::Rgb, rgb.clone()),
            scores(StreamId::Audio, audio.clone()),
        ])
        .unwrap();
        assert_eq!(&concat[..3], rgb.as_slice());
        assert_eq!(&concat[3..], audio.as_slice());
    }

    #[test]
    fn duplicates_and_empties_are_rejected() {
        assert!(concat_penultimate(&[]).is_err());
        assert!(concat_penultimate(&[
            scores(StreamId::Rgb, vec![1.0]),
            scores(StreamId::Rgb, vec![2.0]),
        ])
        .is_err());
    }

    #[test]
    fn simplex_violations_are_rejected() {
        assert!(StreamScores::new(StreamId::Rgb, vec![0.7, 0.7], vec![]).is_err());
        assert!(StreamScores::new(StreamId::Rgb, vec![], vec![]).is_err());
        assert!(StreamScores::new(StreamId::Rgb, vec![1.2, -0.2], vec![]).is_err());
    }

    #[test]
    fn stream_ids_round_trip_through_strings() {
        for id in STREAM_ORDER {
            assert_eq!(StreamId::parse(id.as_str()).unwrap(), id);
        }
        assert!(StreamId::parse("depth").is_err());
    }
}
