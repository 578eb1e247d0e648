//! A compact strided convolutional backbone for the visual streams: a
//! stride-1 stem followed by stride-2 stages, a dense feature layer exposing
//! the penultimate vector, and a linear class head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Conv2dSpec, Graph, NodeId, PaddingMode, ParamSet, Scalar, Tensor};

use super::init_uniform;

/// Geometry of the visual backbone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisualBackboneConfig {
    /// 3 for color frames, 2 for the flow surrogate, 2·L for stacked flow.
    pub in_channels: usize,
    /// Spatial size the network expects (after any cropping).
    pub input_hw: (usize, usize),
    /// Output channels of the stride-2 stages, applied in order.
    pub widths: Vec<usize>,
    /// Length P of the feature vector exposed for fusion.
    pub penultimate_dim: usize,
    pub num_classes: usize,
}

impl VisualBackboneConfig {
    /// Default geometry for 64×64 color frames.
    pub fn color_default(num_classes: usize) -> Self {
        VisualBackboneConfig {
            in_channels: 3,
            input_hw: (64, 64),
            widths: vec![16, 24, 32, 32],
            penultimate_dim: 256,
            num_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.widths.is_empty() {
            return Err(Error::invalid("backbone needs channels and stages"));
        }
        if self.penultimate_dim == 0 || self.num_classes < 2 {
            return Err(Error::invalid(
                "penultimate_dim must be positive and classes at least two",
            ));
        }
        if self.input_hw.0 == 0 || self.input_hw.1 == 0 {
            return Err(Error::invalid("input size must be positive"));
        }
        Ok(())
    }

    fn stem_spec(&self) -> Conv2dSpec {
        Conv2dSpec::new(
            self.in_channels,
            self.widths[0],
            (3, 3),
            (1, 1),
            PaddingMode::SameAsymmetric,
        )
    }

    fn stage_spec(&self, index: usize) -> Conv2dSpec {
        Conv2dSpec::new(
            self.widths[index - 1],
            self.widths[index],
            (3, 3),
            (1, 1),
            PaddingMode::SameAsymmetric,
        )
        .with_stride((2, 2))
    }

    /// Spatial size after all strided stages (each halves with ceil).
    pub fn feature_hw(&self) -> (usize, usize) {
        let (mut h, mut w) = self.input_hw;
        for _ in 1..self.widths.len() {
            h = h.div_ceil(2);
            w = w.div_ceil(2);
        }
        (h, w)
    }

    pub fn flatten_dim(&self) -> usize {
        let (h, w) = self.feature_hw();
        self.widths.last().expect("validated") * h * w
    }

    pub fn init_params(&self, seed: u64) -> Result<ParamSet<f32>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        for i in 0..self.widths.len() {
            let spec = if i == 0 {
                self.stem_spec()
            } else {
                self.stage_spec(i)
            };
            let fan_in = spec.in_channels * 9;
            params.insert(
                format!("stage{}.weight", i + 1),
                init_uniform(
                    vec![spec.out_channels, spec.in_channels, 3, 3],
                    fan_in,
                    &mut rng,
                ),
            )?;
            params.insert(
                format!("stage{}.bias", i + 1),
                Tensor::zeros(vec![spec.out_channels]),
            )?;
        }
        params.insert(
            "feature.weight",
            init_uniform(
                vec![self.penultimate_dim, self.flatten_dim()],
                self.flatten_dim(),
                &mut rng,
            ),
        )?;
        params.insert("feature.bias", Tensor::zeros(vec![self.penultimate_dim]))?;
        params.insert(
            "head.weight",
            init_uniform(
                vec![self.num_classes, self.penultimate_dim],
                self.penultimate_dim,
                &mut rng,
            ),
        )?;
        params.insert("head.bias", Tensor::zeros(vec![self.num_classes]))?;
        Ok(params)
    }

    /// Records the forward pass for (N, C, H, W) input; returns the logits
    /// node (N, classes) and the penultimate node (N, P).
    pub fn build_forward<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        ids: &[NodeId],
        input: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        self.validate()?;
        let expected = 2 * (self.widths.len() + 2);
        if ids.len() != expected {
            return Err(Error::invalid(format!(
                "expected {expected} parameter nodes, got {}",
                ids.len()
            )));
        }
        let mut x = input;
        for i in 0..self.widths.len() {
            let spec = if i == 0 {
                self.stem_spec()
            } else {
                self.stage_spec(i)
            };
            x = g.conv2d(x, ids[2 * i], ids[2 * i + 1], &spec)?;
            x = g.relu(x);
        }
        x = g.flatten_rows(x)?;
        let base = 2 * self.widths.len();
        x = g.dense(x, ids[base], ids[base + 1])?;
        let penultimate = g.relu(x);
        let logits = g.dense(penultimate, ids[base + 2], ids[base + 3])?;
        Ok((logits, penultimate))
    }
}

/// Per-frame output rows: one inner vector per input frame.
pub type FrameRows = Vec<Vec<f32>>;

/// A visual backbone bundled with its parameters.
#[derive(Clone, Debug)]
pub struct VisualBackbone {
    config: VisualBackboneConfig,
    params: ParamSet<f32>,
}

impl VisualBackbone {
    pub fn new(config: VisualBackboneConfig, seed: u64) -> Result<Self> {
        let params = config.init_params(seed)?;
        Ok(VisualBackbone { config, params })
    }

    pub fn from_params(config: VisualBackboneConfig, params: ParamSet<f32>) -> Result<Self> {
        let expected = config.init_params(0)?;
        if expected.len() != params.len() {
            return Err(Error::invalid(format!(
                "checkpoint holds {} parameters, config expects {}",
                params.len(),
                expected.len()
            )));
        }
        for ((en, et), (gn, gt)) in expected.iter().zip(params.iter()) {
            if en != gn || et.shape() != gt.shape() {
                return Err(Error::invalid(format!(
                    "checkpoint parameter {gn} {:?} does not match expected {en} {:?}",
                    gt.shape(),
                    et.shape()
                )));
            }
        }
        Ok(VisualBackbone { config, params })
    }

    pub fn config(&self) -> &VisualBackboneConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet<f32> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<f32> {
        &mut self.params
    }

    /// Softmax scores and penultimate features for a stack of frames,
    /// one row per frame. Input shape (N, C, H, W).
    pub fn forward_frames(&self, frames: &Tensor<f32>) -> Result<(FrameRows, FrameRows)> {
        let n = frames.shape()[0];
        let mut g = Graph::new();
        let ids = g.params_from(&self.params);
        let x = g.constant(frames.clone());
        let (logits, penultimate) = self.config.build_forward(&mut g, &ids, x)?;
        let probs_node = g.softmax(logits)?;
        let c = self.config.num_classes;
        let p = self.config.penultimate_dim;
        let probs = g.value(probs_node).values();
        let feats = g.value(penultimate).values();
        let prob_rows = (0..n).map(|i| probs[i * c..(i + 1) * c].to_vec()).collect();
        let feat_rows = (0..n).map(|i| feats[i * p..(i + 1) * p].to_vec()).collect();
        Ok((prob_rows, feat_rows))
    }
}
