//! Temporal-segment wrapper over the visual backbone: a clip is split into
//! `k` segments, one frame is scored per segment, and the per-frame softmax
//! scores are averaged into a single consensus prediction.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fusion::{StreamId, StreamScores};
use crate::tensor::{Graph, NodeId, ParamSet, Tensor};
use crate::video::{
    center_crop, crop, hflip, sample_test, sample_train, split_segments, FrameSequence, Modality,
};

use super::backbone::{VisualBackbone, VisualBackboneConfig};

/// Number of evenly spaced frames scored per clip at test time.
pub const DEFAULT_TEST_SAMPLES: usize = 25;

/// A visual backbone with segment-level consensus.
#[derive(Clone, Debug)]
pub struct TsnModel {
    backbone: VisualBackbone,
    segments: usize,
}

impl TsnModel {
    pub fn new(backbone: VisualBackbone, segments: usize) -> Result<Self> {
        if segments == 0 {
            return Err(Error::invalid("segment count must be positive"));
        }
        Ok(TsnModel { backbone, segments })
    }

    pub fn backbone(&self) -> &VisualBackbone {
        &self.backbone
    }

    pub fn backbone_mut(&mut self) -> &mut VisualBackbone {
        &mut self.backbone
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    /// Consensus over an explicit frame list: every frame is scored by the
    /// backbone and the softmax rows and penultimate rows are averaged.
    /// Frames must already match the backbone input size.
    pub fn consensus_forward(&self, frames: &[Tensor<f32>]) -> Result<(Vec<f32>, Vec<f32>)> {
        if frames.is_empty() {
            return Err(Error::invalid("consensus needs at least one frame"));
        }
        let stacked = stack_frames(self.backbone.config(), frames)?;
        let mut g = Graph::new();
        let ids = g.params_from(self.backbone.params());
        let x = g.constant(stacked);
        let (logits, penultimate) = self.backbone.config().build_forward(&mut g, &ids, x)?;
        let probs = g.softmax(logits)?;
        let consensus = g.mean_rows(probs, frames.len())?;
        let pooled = g.mean_rows(penultimate, frames.len())?;
        Ok((g.value(consensus).values().to_vec(), g.value(pooled).values().to_vec()))
    }

    /// Test-time scoring of a full sequence: `test_samples` evenly spaced
    /// frames, each center-cropped to the backbone input, fed through the
    /// consensus. The stream id follows the sequence modality.
    pub fn score_sequence(&self, seq: &FrameSequence, test_samples: usize) -> Result<StreamScores> {
        let config = self.backbone.config();
        if seq.modality().channels() != config.in_channels {
            return Err(Error::shape(format!(
                "{} frames have {} channels, backbone expects {}",
                seq.modality().as_str(),
                seq.modality().channels(),
                config.in_channels
            )));
        }
        let indices = sample_test(seq.len(), test_samples);
        let (ch, cw) = config.input_hw;
        let frames: Vec<Tensor<f32>> = indices
            .iter()
            .map(|&i| center_crop(seq.frame(i), ch, cw))
            .collect::<Result<_>>()?;
        let (probs, penultimate) = self.consensus_forward(&frames)?;
        let id = match seq.modality() {
            Modality::Rgb => StreamId::Rgb,
            Modality::Flow => StreamId::Flow,
        };
        StreamScores::new(id, probs, penultimate)
    }
}

/// Stacks same-shaped C×H×W frames into an (N, C, H, W) batch tensor.
fn stack_frames(config: &VisualBackboneConfig, frames: &[Tensor<f32>]) -> Result<Tensor<f32>> {
    let (h, w) = config.input_hw;
    let expected = [config.in_channels, h, w];
    let mut values = Vec::with_capacity(frames.len() * expected.iter().product::<usize>());
    for frame in frames {
        if frame.shape() != expected {
            return Err(Error::shape(format!(
                "frame shape {:?} does not match backbone input {:?}",
                frame.shape(),
                expected
            )));
        }
        values.extend_from_slice(frame.values());
    }
    Tensor::from_vec(vec![frames.len(), expected[0], h, w], values)
}

/// Trains the TSN consensus end to end: each batch item is a clip, one frame
/// is drawn at random per segment, all drawn frames share a random crop and
/// an optional horizontal flip, and the loss is the negative log-likelihood
/// of the consensus probability.
pub struct TsnBatcher<'a> {
    pub config: &'a VisualBackboneConfig,
    pub segments: usize,
    pub examples: &'a [(FrameSequence, usize)],
    /// Random crops and flips when true; deterministic center crops when false.
    pub augment: bool,
}

impl TsnBatcher<'_> {
    fn clip_frames(&self, seq: &FrameSequence, rng: &mut ChaCha8Rng) -> Result<Vec<Tensor<f32>>> {
        let plan = split_segments(seq.len(), self.segments)?;
        let indices = sample_train(&plan, rng);
        let (ch, cw) = self.config.input_hw;
        let (_, h, w) = seq.frame_shape();
        if ch > h || cw > w {
            return Err(Error::invalid(format!(
                "crop {ch}x{cw} exceeds frame {h}x{w}"
            )));
        }
        // One crop position and one flip decision per clip, shared by every
        // sampled frame, so the segments stay spatially aligned.
        let (top, left, flip) = if self.augment {
            (
                if h == ch { 0 } else { rng.gen_range(0..=h - ch) },
                if w == cw { 0 } else { rng.gen_range(0..=w - cw) },
                rng.gen_bool(0.5),
            )
        } else {
            ((h - ch) / 2, (w - cw) / 2, false)
        };
        indices
            .iter()
            .map(|&i| {
                let cropped = crop(seq.frame(i), top, left, ch, cw)?;
                Ok(if flip { hflip(&cropped) } else { cropped })
            })
            .collect()
    }
}

impl super::train::StreamBatcher for TsnBatcher<'_> {
    fn batch_loss(
        &self,
        g: &mut Graph<f32>,
        ids: &[NodeId],
        items: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Result<NodeId> {
        // Every clip contributes exactly `segments` frames, so the whole
        // batch runs as one (B·k, C, H, W) forward pass and the consensus is
        // a grouped row average back down to one row per clip.
        let mut frames = Vec::with_capacity(items.len() * self.segments);
        let mut labels = Vec::with_capacity(items.len());
        for &item in items {
            let (seq, label) = &self.examples[item];
            frames.extend(self.clip_frames(seq, rng)?);
            labels.push(*label);
        }
        let x = g.constant(stack_frames(self.config, &frames)?);
        let (logits, _) = self.config.build_forward(g, ids, x)?;
        let probs = g.softmax(logits)?;
        let consensus = g.mean_rows(probs, self.segments)?;
        g.nll_from_probs(consensus, &labels)
    }

    fn predict(&self, params: &ParamSet<f32>, item: usize) -> Result<Vec<f32>> {
        let (seq, _) = &self.examples[item];
        let model = TsnModel::new(
            VisualBackbone::from_params(self.config.clone(), params.clone())?,
            self.segments,
        )?;
        let (ch, cw) = self.config.input_hw;
        let plan = split_segments(seq.len(), self.segments)?;
        // Deterministic validation view: the middle frame of each segment,
        // center-cropped.
        let frames: Vec<Tensor<f32>> = plan
            .boundaries()
            .iter()
            .map(|r| center_crop(seq.frame(r.start + (r.end - r.start) / 2), ch, cw))
            .collect::<Result<_>>()?;
        Ok(model.consensus_forward(&frames)?.0)
    }

    fn label(&self, item: usize) -> usize {
        self.examples[item].1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::video::consensus_average;
    use rand::SeedableRng;

    fn tiny_backbone(seed: u64) -> VisualBackbone {
        let config = VisualBackboneConfig {
            in_channels: 3,
            input_hw: (12, 12),
            widths: vec![4, 6],
            penultimate_dim: 16,
            num_classes: 4,
        };
        VisualBackbone::new(config, seed).unwrap()
    }

    fn random_frame(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor<f32> {
        Tensor::from_vec(
            vec![c, h, w],
            (0..c * h * w).map(|_| rng.gen_range(-1.0f32..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_frame_consensus_equals_plain_backbone_forward() {
        let net = tiny_backbone(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let frame = random_frame(&mut rng, 3, 12, 12);
        let model = TsnModel::new(net.clone(), 1).unwrap();
        let (consensus, pooled) = model.consensus_forward(std::slice::from_ref(&frame)).unwrap();

        let batch = stack_frames(net.config(), std::slice::from_ref(&frame)).unwrap();
        let (probs, feats) = net.forward_frames(&batch).unwrap();
        for (a, b) in consensus.iter().zip(&probs[0]) {
            assert!((a - b).abs() < 1e-6);
        }
        for (a, b) in pooled.iter().zip(&feats[0]) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_frames_collapse_to_the_single_frame_score() {
        let net = tiny_backbone(5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let frame = random_frame(&mut rng, 3, 12, 12);
        let model = TsnModel::new(net, 3).unwrap();
        let single = model.consensus_forward(std::slice::from_ref(&frame)).unwrap();
        let triple = model
            .consensus_forward(&[frame.clone(), frame.clone(), frame])
            .unwrap();
        for (a, b) in single.0.iter().zip(&triple.0) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn sequence_scoring_matches_hand_composed_sample_forward_average() {
        let net = tiny_backbone(7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let frames: Vec<Tensor<f32>> = (0..9).map(|_| random_frame(&mut rng, 3, 16, 16)).collect();
        let seq = FrameSequence::new("seg_0001", Modality::Rgb, frames.clone()).unwrap();
        let model = TsnModel::new(net.clone(), 3).unwrap();
        let scores = model.score_sequence(&seq, 5).unwrap();
        assert_eq!(scores.stream_id, StreamId::Rgb);

        // Hand-composed pipeline: explicit sampling, cropping, per-frame
        // forward, and host-side averaging.
        let indices = sample_test(9, 5);
        let mut prob_rows = Vec::new();
        let mut feat_rows = Vec::new();
        for &i in &indices {
            let cropped = center_crop(&frames[i], 12, 12).unwrap();
            let batch = stack_frames(net.config(), std::slice::from_ref(&cropped)).unwrap();
            let (p, f) = net.forward_frames(&batch).unwrap();
            prob_rows.push(p[0].clone());
            feat_rows.push(f[0].clone());
        }
        let expected_probs = consensus_average(&prob_rows).unwrap();
        let expected_feats = consensus_average(&feat_rows).unwrap();
        for (a, b) in scores.probs.iter().zip(&expected_probs) {
            assert!((a - b).abs() < 1e-5, "probs diverge: {a} vs {b}");
        }
        for (a, b) in scores.penultimate.iter().zip(&expected_feats) {
            assert!((a - b).abs() < 1e-5, "features diverge: {a} vs {b}");
        }
    }

    #[test]
    fn flow_sequences_score_under_the_flow_stream_id() {
        let config = VisualBackboneConfig {
            in_channels: 2,
            input_hw: (12, 12),
            widths: vec![4],
            penultimate_dim: 8,
            num_classes: 3,
        };
        let net = VisualBackbone::new(config, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let frames: Vec<Tensor<f32>> = (0..4).map(|_| random_frame(&mut rng, 2, 12, 12)).collect();
        let seq = FrameSequence::new("seg_0002", Modality::Flow, frames).unwrap();
        let scores = TsnModel::new(net, 3).unwrap().score_sequence(&seq, 3).unwrap();
        assert_eq!(scores.stream_id, StreamId::Flow);
        assert_eq!(scores.probs.len(), 3);
    }

    #[test]
    fn modality_channel_mismatch_is_rejected() {
        let net = tiny_backbone(0); // expects 3 channels
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frames: Vec<Tensor<f32>> = (0..4).map(|_| random_frame(&mut rng, 2, 12, 12)).collect();
        let seq = FrameSequence::new("seg_0003", Modality::Flow, frames).unwrap();
        assert!(TsnModel::new(net, 3).unwrap().score_sequence(&seq, 3).is_err());
    }

    #[test]
    fn batcher_loss_is_finite_and_prediction_is_a_simplex() {
        let net = tiny_backbone(11);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let examples: Vec<(FrameSequence, usize)> = (0..3)
            .map(|i| {
                let frames: Vec<Tensor<f32>> =
                    (0..6).map(|_| random_frame(&mut rng, 3, 16, 16)).collect();
                (
                    FrameSequence::new(format!("seg_{i}"), Modality::Rgb, frames).unwrap(),
                    i % 4,
                )
            })
            .collect();
        let batcher = TsnBatcher {
            config: net.config(),
            segments: 3,
            examples: &examples,
            augment: true,
        };
        let mut g = Graph::new();
        let ids = g.params_from(net.params());
        let loss = {
            use super::super::train::StreamBatcher as _;
            let node = batcher.batch_loss(&mut g, &ids, &[0, 1, 2], &mut rng).unwrap();
            g.backward(node).unwrap();
            g.value(node).item().unwrap()
        };
        assert!(loss.is_finite() && loss > 0.0);

        use super::super::train::StreamBatcher as _;
        let probs = batcher.predict(net.params(), 1).unwrap();
        let sum: f32 = probs.iter().sum();
        assert_eq!(probs.len(), 4);
        assert!((sum - 1.0).abs() < 1e-5);
    }
}
