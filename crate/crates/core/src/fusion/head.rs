//! The feature-level fusion head: two dense layers over the concatenated
//! penultimate vectors of the (frozen) streams, trained with the same loop
//! as the streams themselves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nets::{init_uniform, train_stream, StreamBatcher, TrainConfig, TrainOutcome};
use crate::tensor::{Graph, NodeId, ParamSet, Scalar, Tensor};

/// Geometry of the two-layer fusion head.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FcFusionConfig {
    /// Length of the concatenated penultimate features.
    pub input_dim: usize,
    /// Width of the single hidden layer.
    pub hidden_dim: usize,
    pub num_classes: usize,
}

impl FcFusionConfig {
    /// Default hidden width of 512.
    pub fn new(input_dim: usize, num_classes: usize) -> Self {
        FcFusionConfig {
            input_dim,
            hidden_dim: 512,
            num_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::invalid("fusion head dims must be positive"));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("fusion head needs at least two classes"));
        }
        Ok(())
    }

    pub fn init_params(&self, seed: u64) -> Result<ParamSet<f32>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        params.insert(
            "fc1.weight",
            init_uniform(vec![self.hidden_dim, self.input_dim], self.input_dim, &mut rng),
        )?;
        params.insert("fc1.bias", Tensor::zeros(vec![self.hidden_dim]))?;
        params.insert(
            "fc2.weight",
            init_uniform(
                vec![self.num_classes, self.hidden_dim],
                self.hidden_dim,
                &mut rng,
            ),
        )?;
        params.insert("fc2.bias", Tensor::zeros(vec![self.num_classes]))?;
        Ok(params)
    }

    /// Records dense → relu → dense over a (N, input_dim) node.
    pub fn build_forward<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        ids: &[NodeId],
        input: NodeId,
    ) -> Result<NodeId> {
        if ids.len() != 4 {
            return Err(Error::invalid(format!(
                "expected 4 parameter nodes, got {}",
                ids.len()
            )));
        }
        let hidden = g.dense(input, ids[0], ids[1])?;
        let hidden = g.relu(hidden);
        g.dense(hidden, ids[2], ids[3])
    }
}

/// A fusion head bundled with its parameters.
#[derive(Clone, Debug)]
pub struct FcFusionHead {
    config: FcFusionConfig,
    params: ParamSet<f32>,
}

impl FcFusionHead {
    pub fn new(config: FcFusionConfig, seed: u64) -> Result<Self> {
        let params = config.init_params(seed)?;
        Ok(FcFusionHead { config, params })
    }

    pub fn from_params(config: FcFusionConfig, params: ParamSet<f32>) -> Result<Self> {
        let expected = config.init_params(0)?;
        for ((en, et), (gn, gt)) in expected.iter().zip(params.iter()) {
            if en != gn || et.shape() != gt.shape() {
                return Err(Error::invalid(format!(
                    "fusion head parameter {gn} {:?} does not match expected {en} {:?}",
                    gt.shape(),
                    et.shape()
                )));
            }
        }
        if expected.len() != params.len() {
            return Err(Error::invalid("fusion head parameter count mismatch"));
        }
        Ok(FcFusionHead { config, params })
    }

    pub fn config(&self) -> &FcFusionConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet<f32> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<f32> {
        &mut self.params
    }

    /// Softmax class probabilities for one concatenated feature vector.
    pub fn predict(&self, features: &[f32]) -> Result<Vec<f32>> {
        if features.len() != self.config.input_dim {
            return Err(Error::shape(format!(
                "feature vector length {} does not match head input {}",
                features.len(),
                self.config.input_dim
            )));
        }
        let mut g = Graph::new();
        let ids = g.params_from(&self.params);
        let x = g.constant(Tensor::from_vec(
            vec![1, self.config.input_dim],
            features.to_vec(),
        )?);
        let logits = self.config.build_forward(&mut g, &ids, x)?;
        let probs = g.softmax(logits)?;
        Ok(g.value(probs).values().to_vec())
    }
}

/// One fusion training example: concatenated penultimate features plus the
/// target class.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionExample {
    pub features: Vec<f32>,
    pub label: usize,
}

/// Checksums of the stream parameter sets captured before fusion training.
/// Re-verifying after training proves the streams stayed untouched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrozenStreams {
    checksums: Vec<(String, u64)>,
}

impl FrozenStreams {
    pub fn capture(streams: &[(&str, &ParamSet<f32>)]) -> Self {
        FrozenStreams {
            checksums: streams
                .iter()
                .map(|(name, params)| (name.to_string(), params.checksum()))
                .collect(),
        }
    }

    /// Confirms every captured stream still hashes to the same value.
    pub fn verify(&self, streams: &[(&str, &ParamSet<f32>)]) -> Result<()> {
        if streams.len() != self.checksums.len() {
            return Err(Error::StreamNotFrozen(format!(
                "expected {} streams, got {}",
                self.checksums.len(),
                streams.len()
            )));
        }
        for ((name, params), (frozen_name, frozen_sum)) in streams.iter().zip(&self.checksums) {
            if name != frozen_name {
                return Err(Error::StreamNotFrozen(format!(
                    "stream order changed: expected {frozen_name}, got {name}"
                )));
            }
            if params.checksum() != *frozen_sum {
                return Err(Error::StreamNotFrozen(format!(
                    "parameters of stream {name} changed during fusion training"
                )));
            }
        }
        Ok(())
    }
}

/// Adapts precomputed fusion examples to the shared training loop.
pub struct FusionBatcher<'a> {
    pub config: &'a FcFusionConfig,
    pub examples: &'a [FusionExample],
}

impl FusionBatcher<'_> {
    fn stack(&self, items: &[usize]) -> Result<(Tensor<f32>, Vec<usize>)> {
        let d = self.config.input_dim;
        let mut values = Vec::with_capacity(items.len() * d);
        let mut labels = Vec::with_capacity(items.len());
        for &item in items {
            let example = &self.examples[item];
            if example.features.len() != d {
                return Err(Error::shape(format!(
                    "example {item} has {} features, head expects {d}",
                    example.features.len()
                )));
            }
            values.extend_from_slice(&example.features);
            labels.push(example.label);
        }
        Ok((Tensor::from_vec(vec![items.len(), d], values)?, labels))
    }
}

impl StreamBatcher for FusionBatcher<'_> {
    fn batch_loss(
        &self,
        g: &mut Graph<f32>,
        ids: &[NodeId],
        items: &[usize],
        _rng: &mut ChaCha8Rng,
    ) -> Result<NodeId> {
        let (batch, labels) = self.stack(items)?;
        let x = g.constant(batch);
        let logits = self.config.build_forward(g, ids, x)?;
        g.cross_entropy_logits(logits, &labels)
    }

    fn predict(&self, params: &ParamSet<f32>, item: usize) -> Result<Vec<f32>> {
        let head = FcFusionHead::from_params(self.config.clone(), params.clone())?;
        head.predict(&self.examples[item].features)
    }

    fn label(&self, item: usize) -> usize {
        self.examples[item].label
    }
}

/// Trains the fusion head on precomputed features while proving the streams
/// that produced them stayed frozen: their checksums are verified before and
/// after the optimization, and any drift aborts with an error.
pub fn train_fc_fusion(
    head: &mut FcFusionHead,
    frozen: &FrozenStreams,
    streams: &[(&str, &ParamSet<f32>)],
    examples: &[FusionExample],
    train_items: &[usize],
    val_items: &[usize],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    frozen.verify(streams)?;
    let head_config = head.config.clone();
    let batcher = FusionBatcher {
        config: &head_config,
        examples,
    };
    let outcome = train_stream(&mut head.params, &batcher, train_items, val_items, config)?;
    frozen.verify(streams)?;
    Ok(outcome)
}
