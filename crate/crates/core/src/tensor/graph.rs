//! Reverse-mode automatic differentiation over a flat tape of tensor ops.
//!
//! A [`Graph`] is rebuilt for every training step: parameters are inserted as
//! leaves, the forward pass records one node per op, and [`Graph::backward`]
//! walks the tape in reverse creation order. Node ids are indices into the
//! tape, so a node's parents always have smaller indices than the node itself.

use std::collections::HashSet;

use crate::error::{Error, Result};

use super::conv::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, maxpool2x2_backward,
    maxpool2x2_forward, Conv2dSpec,
};
use super::{GradMap, Scalar, Tensor};

/// Probabilities below this floor are clamped before taking the log in
/// [`Graph::nll_from_probs`]; clamped entries receive zero gradient.
const PROB_FLOOR: f64 = 1e-12;

/// Handle to a node in the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

enum Op<T> {
    Leaf,
    Conv2d {
        input: NodeId,
        weights: NodeId,
        bias: NodeId,
        spec: Conv2dSpec,
    },
    MaxPool2x2 {
        input: NodeId,
        argmax: Vec<usize>,
    },
    Dense {
        input: NodeId,
        weights: NodeId,
        bias: NodeId,
    },
    Relu {
        input: NodeId,
    },
    Reshape {
        input: NodeId,
    },
    Softmax {
        input: NodeId,
    },
    MeanRows {
        input: NodeId,
        group: usize,
    },
    /// Mean over rows of (log-sum-exp(row) - row[target]); `probs` caches the
    /// row-wise softmax from the forward pass for the backward formula.
    CrossEntropyLogits {
        logits: NodeId,
        targets: Vec<usize>,
        probs: Vec<T>,
    },
    NllFromProbs {
        probs: NodeId,
        targets: Vec<usize>,
    },
}

struct Node<T> {
    value: Tensor<T>,
    grad: Option<Vec<T>>,
    needs_grad: bool,
    op: Op<T>,
}

/// Tape of recorded operations plus the values flowing through them.
pub struct Graph<T: Scalar> {
    nodes: Vec<Node<T>>,
    params: Vec<(String, NodeId)>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            params: Vec::new(),
        }
    }

    fn push(&mut self, value: Tensor<T>, needs_grad: bool, op: Op<T>) -> NodeId {
        self.nodes.push(Node {
            value,
            grad: None,
            needs_grad,
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Inserts a tensor that will not receive a gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> NodeId {
        self.push(value, false, Op::Leaf)
    }

    /// Inserts a named trainable leaf; its gradient is retrievable through
    /// [`Graph::param_grads`] after the backward pass.
    pub fn param(&mut self, name: &str, value: &Tensor<T>) -> NodeId {
        let id = self.push(value.clone(), true, Op::Leaf);
        self.params.push((name.to_string(), id));
        id
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: NodeId) -> Option<&[T]> {
        self.nodes[id.0].grad.as_deref()
    }

    /// Clones a node's value with its gradient (if any) attached to the
    /// tensor's own grad slot, for inspection outside the graph.
    pub fn value_with_grad(&self, id: NodeId) -> Tensor<T> {
        let node = &self.nodes[id.0];
        let mut out = node.value.clone().with_requires_grad(node.needs_grad);
        if let Some(g) = &node.grad {
            out.set_grad(g.clone());
        }
        out
    }

    fn needs(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].needs_grad)
    }

    pub fn conv2d(
        &mut self,
        input: NodeId,
        weights: NodeId,
        bias: NodeId,
        spec: &Conv2dSpec,
    ) -> Result<NodeId> {
        let out = conv2d_forward(
            self.value(input),
            self.value(weights),
            self.value(bias),
            spec,
        )?;
        let needs = self.needs(&[input, weights, bias]);
        Ok(self.push(
            out,
            needs,
            Op::Conv2d {
                input,
                weights,
                bias,
                spec: spec.clone(),
            },
        ))
    }

    pub fn maxpool2x2(&mut self, input: NodeId) -> Result<NodeId> {
        let (out, argmax) = maxpool2x2_forward(self.value(input))?;
        let needs = self.needs(&[input]);
        Ok(self.push(out, needs, Op::MaxPool2x2 { input, argmax }))
    }

    pub fn dense(&mut self, input: NodeId, weights: NodeId, bias: NodeId) -> Result<NodeId> {
        let out = dense_forward(self.value(input), self.value(weights), self.value(bias))?;
        let needs = self.needs(&[input, weights, bias]);
        Ok(self.push(
            out,
            needs,
            Op::Dense {
                input,
                weights,
                bias,
            },
        ))
    }

    pub fn relu(&mut self, input: NodeId) -> NodeId {
        let src = self.value(input);
        let values = src
            .values()
            .iter()
            .map(|v| v.maximum(T::ZERO))
            .collect::<Vec<_>>();
        let out = Tensor::from_vec(src.shape().to_vec(), values).expect("same shape");
        let needs = self.needs(&[input]);
        self.push(out, needs, Op::Relu { input })
    }

    /// Reinterprets the value under a new shape with the same element count.
    pub fn reshape(&mut self, input: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        let out = self.value(input).clone().reshape(shape)?;
        let needs = self.needs(&[input]);
        Ok(self.push(out, needs, Op::Reshape { input }))
    }

    /// Flattens (N, ...) to (N, rest), the bridge from conv features to the
    /// first dense layer.
    pub fn flatten_rows(&mut self, input: NodeId) -> Result<NodeId> {
        let shape = self.value(input).shape();
        if shape.is_empty() {
            return Err(Error::shape("cannot flatten a scalar into rows"));
        }
        let n = shape[0];
        let rest = shape[1..].iter().product();
        self.reshape(input, vec![n, rest])
    }

    fn rows_of(&self, id: NodeId) -> Result<(usize, usize)> {
        match self.value(id).shape() {
            [c] => Ok((1, *c)),
            [n, c] => Ok((*n, *c)),
            other => Err(Error::shape(format!(
                "expected rank 1 or 2 scores, got {other:?}"
            ))),
        }
    }

    /// Row-wise softmax (a rank-1 input is a single row).
    pub fn softmax(&mut self, input: NodeId) -> Result<NodeId> {
        let (n, c) = self.rows_of(input)?;
        if c == 0 {
            return Err(Error::shape("softmax over zero classes"));
        }
        let x = self.value(input).values();
        let mut out = vec![T::ZERO; x.len()];
        for r in 0..n {
            softmax_row(&x[r * c..(r + 1) * c], &mut out[r * c..(r + 1) * c]);
        }
        let shape = self.value(input).shape().to_vec();
        let value = Tensor::from_vec(shape, out)?;
        let needs = self.needs(&[input]);
        Ok(self.push(value, needs, Op::Softmax { input }))
    }

    /// Averages consecutive groups of `group` rows: (N*group, C) -> (N, C).
    /// With softmax rows this is the consensus over sampled snippets.
    pub fn mean_rows(&mut self, input: NodeId, group: usize) -> Result<NodeId> {
        let (n, c) = self.rows_of(input)?;
        if group == 0 || n % group != 0 {
            return Err(Error::shape(format!(
                "cannot average {n} rows in groups of {group}"
            )));
        }
        let x = self.value(input).values();
        let out_rows = n / group;
        let inv = T::from_f64(1.0 / group as f64);
        let mut out = vec![T::ZERO; out_rows * c];
        for r in 0..n {
            let dst = (r / group) * c;
            for j in 0..c {
                out[dst + j] += x[r * c + j] * inv;
            }
        }
        let value = Tensor::from_vec(vec![out_rows, c], out)?;
        let needs = self.needs(&[input]);
        Ok(self.push(value, needs, Op::MeanRows { input, group }))
    }

    fn check_targets(&self, id: NodeId, targets: &[usize]) -> Result<(usize, usize)> {
        let (n, c) = self.rows_of(id)?;
        if targets.len() != n {
            return Err(Error::shape(format!(
                "{} targets for {n} score rows",
                targets.len()
            )));
        }
        if let Some(t) = targets.iter().find(|t| **t >= c) {
            return Err(Error::invalid(format!(
                "target class {t} out of range for {c} classes"
            )));
        }
        Ok((n, c))
    }

    /// Numerically stable softmax cross-entropy, averaged over rows.
    pub fn cross_entropy_logits(&mut self, logits: NodeId, targets: &[usize]) -> Result<NodeId> {
        let (n, c) = self.check_targets(logits, targets)?;
        let x = self.value(logits).values();
        let mut probs = vec![T::ZERO; x.len()];
        let mut loss = 0.0;
        for r in 0..n {
            let row = &x[r * c..(r + 1) * c];
            softmax_row(row, &mut probs[r * c..(r + 1) * c]);
            let m = row.iter().fold(T::neg_infinity(), |a, v| a.maximum(*v));
            let sum_exp: f64 = row.iter().map(|v| (*v - m).to_f64().exp()).sum();
            loss += m.to_f64() + sum_exp.ln() - row[targets[r]].to_f64();
        }
        let value = Tensor::scalar(T::from_f64(loss / n as f64));
        let needs = self.needs(&[logits]);
        Ok(self.push(
            value,
            needs,
            Op::CrossEntropyLogits {
                logits,
                targets: targets.to_vec(),
                probs,
            },
        ))
    }

    /// Mean negative log of the target-class probability, for score rows that
    /// are already on the simplex (e.g. a snippet consensus).
    pub fn nll_from_probs(&mut self, probs: NodeId, targets: &[usize]) -> Result<NodeId> {
        let (n, c) = self.check_targets(probs, targets)?;
        let x = self.value(probs).values();
        let mut loss = 0.0;
        for (r, t) in targets.iter().enumerate() {
            loss -= x[r * c + t].to_f64().max(PROB_FLOOR).ln();
        }
        let value = Tensor::scalar(T::from_f64(loss / n as f64));
        let needs = self.needs(&[probs]);
        Ok(self.push(
            value,
            needs,
            Op::NllFromProbs {
                probs,
                targets: targets.to_vec(),
            },
        ))
    }

    /// Propagates gradients from a scalar root back to every leaf that needs
    /// them. Gradients accumulate, so a node feeding several consumers
    /// receives the sum of their contributions.
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        if self.value(root).numel() != 1 {
            return Err(Error::shape(format!(
                "backward root must be scalar, got shape {:?}",
                self.value(root).shape()
            )));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[root.0].grad = Some(vec![T::ONE]);

        for i in (0..self.nodes.len()).rev() {
            if self.nodes[i].grad.is_none() || !self.nodes[i].needs_grad {
                continue;
            }
            let (before, rest) = self.nodes.split_at_mut(i);
            let node = &rest[0];
            let grad = node.grad.as_ref().expect("checked above");
            match &node.op {
                Op::Leaf => {}
                Op::Conv2d {
                    input,
                    weights,
                    bias,
                    spec,
                } => {
                    let (gx, gw, gb) = conv2d_backward(
                        &before[input.0].value,
                        &before[weights.0].value,
                        spec,
                        grad,
                    )?;
                    accumulate(&mut before[input.0], gx);
                    accumulate(&mut before[weights.0], gw);
                    accumulate(&mut before[bias.0], gb);
                }
                Op::MaxPool2x2 { input, argmax } => {
                    let gx = maxpool2x2_backward(before[input.0].value.numel(), argmax, grad);
                    accumulate(&mut before[input.0], gx);
                }
                Op::Dense {
                    input,
                    weights,
                    bias,
                } => {
                    let (gx, gw, gb) = dense_backward(
                        &before[input.0].value,
                        &before[weights.0].value,
                        &before[bias.0].value,
                        grad,
                    )?;
                    accumulate(&mut before[input.0], gx);
                    accumulate(&mut before[weights.0], gw);
                    accumulate(&mut before[bias.0], gb);
                }
                Op::Relu { input } => {
                    let gx = before[input.0]
                        .value
                        .values()
                        .iter()
                        .zip(grad)
                        .map(|(x, g)| if *x > T::ZERO { *g } else { T::ZERO })
                        .collect();
                    accumulate(&mut before[input.0], gx);
                }
                Op::Reshape { input } => {
                    accumulate(&mut before[input.0], grad.clone());
                }
                Op::Softmax { input } => {
                    let y = node.value.values();
                    let c = *node.value.shape().last().expect("softmax output rank >= 1");
                    let mut gx = vec![T::ZERO; y.len()];
                    for r in 0..y.len() / c {
                        let y_row = &y[r * c..(r + 1) * c];
                        let g_row = &grad[r * c..(r + 1) * c];
                        let dot = y_row
                            .iter()
                            .zip(g_row)
                            .fold(T::ZERO, |a, (y, g)| a + *y * *g);
                        for j in 0..c {
                            gx[r * c + j] = y_row[j] * (g_row[j] - dot);
                        }
                    }
                    accumulate(&mut before[input.0], gx);
                }
                Op::MeanRows { input, group } => {
                    let c = node.value.shape()[1];
                    let inv = T::from_f64(1.0 / *group as f64);
                    let in_rows = before[input.0].value.numel() / c;
                    let mut gx = vec![T::ZERO; in_rows * c];
                    for r in 0..in_rows {
                        let src = (r / group) * c;
                        for j in 0..c {
                            gx[r * c + j] = grad[src + j] * inv;
                        }
                    }
                    accumulate(&mut before[input.0], gx);
                }
                Op::CrossEntropyLogits {
                    logits,
                    targets,
                    probs,
                } => {
                    let g = grad[0] * T::from_f64(1.0 / targets.len() as f64);
                    let c = probs.len() / targets.len();
                    let mut gx: Vec<T> = probs.iter().map(|p| *p * g).collect();
                    for (r, t) in targets.iter().enumerate() {
                        gx[r * c + t] -= g;
                    }
                    accumulate(&mut before[logits.0], gx);
                }
                Op::NllFromProbs { probs, targets } => {
                    let p = before[probs.0].value.values();
                    let c = p.len() / targets.len();
                    let scale = grad[0].to_f64() / targets.len() as f64;
                    let mut gx = vec![T::ZERO; p.len()];
                    for (r, t) in targets.iter().enumerate() {
                        let pv = p[r * c + t].to_f64();
                        if pv > PROB_FLOOR {
                            gx[r * c + t] = T::from_f64(-scale / pv);
                        }
                    }
                    accumulate(&mut before[probs.0], gx);
                }
            }
        }
        Ok(())
    }

    /// Gradients of every registered parameter after [`Graph::backward`].
    /// Parameters the root does not depend on get a zero gradient.
    pub fn param_grads(&self) -> GradMap<T> {
        let mut grads = GradMap::new();
        for (name, id) in &self.params {
            let node = &self.nodes[id.0];
            match &node.grad {
                Some(g) => grads.insert(name, g.clone()),
                None => grads.insert(name, vec![T::ZERO; node.value.numel()]),
            }
        }
        grads
    }

    /// Inserts every parameter of a set as a leaf, returning ids in set order.
    pub fn params_from(&mut self, set: &super::ParamSet<T>) -> Vec<NodeId> {
        let mut seen: HashSet<&str> = HashSet::new();
        set.iter()
            .map(|(name, tensor)| {
                debug_assert!(seen.insert(name), "duplicate parameter {name}");
                self.param(name, tensor)
            })
            .collect()
    }
}

fn softmax_row<T: Scalar>(row: &[T], out: &mut [T]) {
    let m = row.iter().fold(T::neg_infinity(), |a, v| a.maximum(*v));
    let mut sum = 0.0;
    for (o, v) in out.iter_mut().zip(row) {
        let e = (*v - m).to_f64().exp();
        *o = T::from_f64(e);
        sum += e;
    }
    let inv = T::from_f64(1.0 / sum);
    for o in out.iter_mut() {
        *o *= inv;
    }
}

fn accumulate<T: Scalar>(node: &mut Node<T>, contribution: Vec<T>) {
    if !node.needs_grad {
        return;
    }
    match &mut node.grad {
        Some(g) => {
            for (a, b) in g.iter_mut().zip(&contribution) {
                *a += *b;
            }
        }
        None => node.grad = Some(contribution),
    }
}
