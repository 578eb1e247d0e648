//! The dilated convolutional audio classifier.
//!
//! Architecture family: one dilated conv stage, a 2×2 max-pool, three more
//! dilated conv stages, a second pool, then two dense layers and a linear
//! class head, relu after every hidden layer. The reference geometry runs on
//! 331×248 log-power spectrograms with stages 64@11×7/d9×4 and
//! 64/32/16@6×4/d9×4 and 256-wide dense layers; smaller geometries reuse the
//! same layout for quick experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fusion::{StreamId, StreamScores};
use crate::tensor::{Conv2dSpec, Graph, NodeId, PaddingMode, ParamSet, Scalar, Tensor};

use super::init_uniform;

/// One dilated convolution stage (stride 1, shape-preserving padding).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvStage {
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub dilation: (usize, usize),
}

/// Geometry of the audio network.
#[derive(Clone, Debug, PartialEq)]
pub struct DilatedNetConfig {
    /// Spectrogram (freq_bins, time_frames) the net is built for.
    pub input_shape: (usize, usize),
    /// Conv stages; pooling happens after the first and after the last.
    pub stages: Vec<ConvStage>,
    pub dense_dims: Vec<usize>,
    pub num_classes: usize,
    /// When set, any deviation from the reference geometry is rejected.
    pub strict: bool,
}

impl DilatedNetConfig {
    /// The reference audio architecture over 331×248 inputs.
    pub fn reference(num_classes: usize) -> Self {
        DilatedNetConfig {
            input_shape: (331, 248),
            stages: vec![
                ConvStage {
                    out_channels: 64,
                    kernel: (11, 7),
                    dilation: (9, 4),
                },
                ConvStage {
                    out_channels: 64,
                    kernel: (6, 4),
                    dilation: (9, 4),
                },
                ConvStage {
                    out_channels: 32,
                    kernel: (6, 4),
                    dilation: (9, 4),
                },
                ConvStage {
                    out_channels: 16,
                    kernel: (6, 4),
                    dilation: (9, 4),
                },
            ],
            dense_dims: vec![256, 256],
            num_classes,
            strict: true,
        }
    }

    /// A compact geometry over small spectrograms for fast training runs.
    pub fn compact(input_shape: (usize, usize), num_classes: usize) -> Self {
        DilatedNetConfig {
            input_shape,
            stages: vec![
                ConvStage {
                    out_channels: 12,
                    kernel: (5, 5),
                    dilation: (2, 2),
                },
                ConvStage {
                    out_channels: 16,
                    kernel: (3, 3),
                    dilation: (2, 2),
                },
                ConvStage {
                    out_channels: 16,
                    kernel: (3, 3),
                    dilation: (2, 2),
                },
                ConvStage {
                    out_channels: 12,
                    kernel: (3, 3),
                    dilation: (1, 1),
                },
            ],
            dense_dims: vec![96, 96],
            num_classes,
            strict: false,
        }
    }

    /// The smallest useful geometry: two conv stages and 32-wide dense
    /// layers, for corpus-scale experiments where every training second
    /// counts and the signal (a handful of narrow tones) is easy.
    pub fn tiny(input_shape: (usize, usize), num_classes: usize) -> Self {
        DilatedNetConfig {
            input_shape,
            stages: vec![
                ConvStage {
                    out_channels: 4,
                    kernel: (5, 5),
                    dilation: (2, 2),
                },
                ConvStage {
                    out_channels: 6,
                    kernel: (3, 3),
                    dilation: (2, 2),
                },
            ],
            dense_dims: vec![32, 32],
            num_classes,
            strict: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() || self.dense_dims.is_empty() {
            return Err(Error::invalid("net needs conv stages and dense layers"));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        if self.input_shape.0 == 0 || self.input_shape.1 == 0 {
            return Err(Error::invalid("input shape must be positive"));
        }
        if self.strict {
            let reference = DilatedNetConfig::reference(self.num_classes);
            if self.stages != reference.stages
                || self.dense_dims != reference.dense_dims
                || self.input_shape != reference.input_shape
            {
                return Err(Error::invalid(
                    "strict mode requires the reference geometry (331×248 input, \
                     stages 64@11×7/9×4, 64/32/16@6×4/9×4, dense 256/256)",
                ));
            }
        }
        Ok(())
    }

    fn conv_spec(&self, index: usize) -> Conv2dSpec {
        let stage = &self.stages[index];
        let in_channels = if index == 0 {
            1
        } else {
            self.stages[index - 1].out_channels
        };
        Conv2dSpec::new(
            in_channels,
            stage.out_channels,
            stage.kernel,
            stage.dilation,
            PaddingMode::SameAsymmetric,
        )
    }

    /// Spatial size after the first pool.
    fn mid_hw(&self) -> (usize, usize) {
        (self.input_shape.0.div_ceil(2), self.input_shape.1.div_ceil(2))
    }

    /// Spatial size after the second pool.
    fn final_hw(&self) -> (usize, usize) {
        let (h, w) = self.mid_hw();
        (h.div_ceil(2), w.div_ceil(2))
    }

    /// Length of the flattened conv feature map feeding the first dense layer.
    pub fn flatten_dim(&self) -> usize {
        let (h, w) = self.final_hw();
        self.stages.last().expect("validated non-empty").out_channels * h * w
    }

    /// Labeled output shape of every layer, for a single example.
    pub fn shape_trace(&self) -> Vec<(String, Vec<usize>)> {
        let (h0, w0) = self.input_shape;
        let (h1, w1) = self.mid_hw();
        let (h2, w2) = self.final_hw();
        let mut trace = vec![("input".to_string(), vec![1, h0, w0])];
        for (i, stage) in self.stages.iter().enumerate() {
            let (h, w) = if i == 0 { (h0, w0) } else { (h1, w1) };
            trace.push((format!("conv{}", i + 1), vec![stage.out_channels, h, w]));
            if i == 0 {
                trace.push(("pool1".to_string(), vec![stage.out_channels, h1, w1]));
            }
        }
        let last = self.stages.last().unwrap().out_channels;
        trace.push(("pool2".to_string(), vec![last, h2, w2]));
        trace.push(("flatten".to_string(), vec![self.flatten_dim()]));
        for (i, dim) in self.dense_dims.iter().enumerate() {
            trace.push((format!("dense{}", i + 1), vec![*dim]));
        }
        trace.push(("head".to_string(), vec![self.num_classes]));
        trace
    }

    /// Total trainable parameter count.
    pub fn param_count(&self) -> usize {
        let mut count = 0;
        for i in 0..self.stages.len() {
            let spec = self.conv_spec(i);
            count += spec.out_channels * spec.in_channels * spec.kernel.0 * spec.kernel.1
                + spec.out_channels;
        }
        let mut in_dim = self.flatten_dim();
        for dim in &self.dense_dims {
            count += dim * in_dim + dim;
            in_dim = *dim;
        }
        count + self.num_classes * in_dim + self.num_classes
    }

    /// Fresh seeded parameters in builder order.
    pub fn init_params(&self, seed: u64) -> Result<ParamSet<f32>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        for i in 0..self.stages.len() {
            let spec = self.conv_spec(i);
            let fan_in = spec.in_channels * spec.kernel.0 * spec.kernel.1;
            params.insert(
                format!("conv{}.weight", i + 1),
                init_uniform(
                    vec![spec.out_channels, spec.in_channels, spec.kernel.0, spec.kernel.1],
                    fan_in,
                    &mut rng,
                ),
            )?;
            params.insert(format!("conv{}.bias", i + 1), Tensor::zeros(vec![spec.out_channels]))?;
        }
        let mut in_dim = self.flatten_dim();
        for (i, dim) in self.dense_dims.iter().enumerate() {
            params.insert(
                format!("dense{}.weight", i + 1),
                init_uniform(vec![*dim, in_dim], in_dim, &mut rng),
            )?;
            params.insert(format!("dense{}.bias", i + 1), Tensor::zeros(vec![*dim]))?;
            in_dim = *dim;
        }
        params.insert(
            "head.weight",
            init_uniform(vec![self.num_classes, in_dim], in_dim, &mut rng),
        )?;
        params.insert("head.bias", Tensor::zeros(vec![self.num_classes]))?;
        Ok(params)
    }

    /// Records the forward pass for a (N, 1, F, T) input over parameters
    /// previously inserted in `init_params` order. Returns the logits node
    /// and the penultimate-activation node, shapes (N, C) and (N, P).
    pub fn build_forward<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        ids: &[NodeId],
        input: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        self.validate()?;
        let expected = 2 * (self.stages.len() + self.dense_dims.len() + 1);
        if ids.len() != expected {
            return Err(Error::invalid(format!(
                "expected {expected} parameter nodes, got {}",
                ids.len()
            )));
        }
        let mut next = 0;
        let mut take = || {
            let pair = (ids[next], ids[next + 1]);
            next += 2;
            pair
        };

        let mut x = input;
        for i in 0..self.stages.len() {
            let (w, b) = take();
            x = g.conv2d(x, w, b, &self.conv_spec(i))?;
            x = g.relu(x);
            if i == 0 {
                x = g.maxpool2x2(x)?;
            }
        }
        x = g.maxpool2x2(x)?;
        x = g.flatten_rows(x)?;
        for _ in 0..self.dense_dims.len() {
            let (w, b) = take();
            x = g.dense(x, w, b)?;
            x = g.relu(x);
        }
        let penultimate = x;
        let (w, b) = take();
        let logits = g.dense(x, w, b)?;
        Ok((logits, penultimate))
    }
}

/// A dilated audio network bundled with its parameters.
#[derive(Clone, Debug)]
pub struct DilatedNet {
    config: DilatedNetConfig,
    params: ParamSet<f32>,
}

impl DilatedNet {
    pub fn new(config: DilatedNetConfig, seed: u64) -> Result<Self> {
        let params = config.init_params(seed)?;
        Ok(DilatedNet { config, params })
    }

    /// Rewraps externally loaded parameters, verifying they match the
    /// geometry this config would create.
    pub fn from_params(config: DilatedNetConfig, params: ParamSet<f32>) -> Result<Self> {
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
        Ok(DilatedNet { config, params })
    }

    pub fn config(&self) -> &DilatedNetConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet<f32> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<f32> {
        &mut self.params
    }

    /// Scores one spectrogram (any tensor reshapeable to (1, 1, F, T)).
    pub fn forward_scores(&self, input: &Tensor<f32>) -> Result<StreamScores> {
        let (f, t) = self.config.input_shape;
        if input.numel() != f * t {
            return Err(Error::shape(format!(
                "input holds {} values, expected {}×{}",
                input.numel(),
                f,
                t
            )));
        }
        let input = input.clone().reshape(vec![1, 1, f, t])?;
        let mut g = Graph::new();
        let ids = g.params_from(&self.params);
        let x = g.constant(input);
        let (logits, penultimate) = self.config.build_forward(&mut g, &ids, x)?;
        let probs_node = g.softmax(logits)?;
        let probs = g.value(probs_node).values().to_vec();
        let penultimate = g.value(penultimate).values().to_vec();
        StreamScores::new(StreamId::Audio, probs, penultimate)
    }
}

/// Pairs the audio net with a labeled spectrogram corpus for the training
/// loop. Examples may be stored flat (F·T values each); no augmentation is
/// applied to spectrograms.
pub struct SpectrogramBatcher<'a> {
    pub config: &'a DilatedNetConfig,
    pub examples: &'a [(Tensor<f32>, usize)],
}

impl SpectrogramBatcher<'_> {
    fn stack(&self, items: &[usize]) -> Result<Tensor<f32>> {
        let (f, t) = self.config.input_shape;
        let mut values = Vec::with_capacity(items.len() * f * t);
        for &item in items {
            let example = &self.examples[item].0;
            if example.numel() != f * t {
                return Err(Error::shape(format!(
                    "example {item} holds {} values, expected {f}×{t}",
                    example.numel()
                )));
            }
            values.extend_from_slice(example.values());
        }
        Tensor::from_vec(vec![items.len(), 1, f, t], values)
    }
}

impl super::train::StreamBatcher for SpectrogramBatcher<'_> {
    fn batch_loss(
        &self,
        g: &mut Graph<f32>,
        ids: &[NodeId],
        items: &[usize],
        _rng: &mut ChaCha8Rng,
    ) -> Result<NodeId> {
        let input = g.constant(self.stack(items)?);
        let (logits, _) = self.config.build_forward(g, ids, input)?;
        let labels: Vec<usize> = items.iter().map(|i| self.examples[*i].1).collect();
        g.cross_entropy_logits(logits, &labels)
    }

    fn predict(&self, params: &ParamSet<f32>, item: usize) -> Result<Vec<f32>> {
        let mut g = Graph::new();
        let ids = g.params_from(params);
        let input = g.constant(self.stack(&[item])?);
        let (logits, _) = self.config.build_forward(&mut g, &ids, input)?;
        let probs = g.softmax(logits)?;
        Ok(g.value(probs).values().to_vec())
    }

    fn label(&self, item: usize) -> usize {
        self.examples[item].1
    }
}
