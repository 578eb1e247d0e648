//! Stochastic gradient descent with classical momentum.

use crate::error::{Error, Result};

use super::{GradMap, ParamSet, Scalar};

/// Per-parameter velocity buffers for the momentum update
/// v <- momentum * v + g; w <- w - lr * v.
pub struct SgdState<T> {
    learning_rate: f64,
    momentum: f64,
    velocities: Vec<(String, Vec<T>)>,
}

impl<T: Scalar> SgdState<T> {
    pub fn new(learning_rate: f64, momentum: f64) -> Result<Self> {
        if !learning_rate.is_finite() || learning_rate < 0.0 {
            return Err(Error::invalid(format!(
                "learning rate must be a finite non-negative number, got {learning_rate}"
            )));
        }
        if !momentum.is_finite() || !(0.0..1.0).contains(&momentum) {
            return Err(Error::invalid(format!(
                "momentum must lie in [0, 1), got {momentum}"
            )));
        }
        Ok(SgdState {
            learning_rate,
            momentum,
            velocities: Vec::new(),
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn set_learning_rate(&mut self, learning_rate: f64) {
        self.learning_rate = learning_rate;
    }

    fn velocity_mut(&mut self, name: &str, len: usize) -> &mut Vec<T> {
        if let Some(pos) = self.velocities.iter().position(|(n, _)| n == name) {
            &mut self.velocities[pos].1
        } else {
            self.velocities.push((name.to_string(), vec![T::ZERO; len]));
            &mut self.velocities.last_mut().expect("just pushed").1
        }
    }

    /// Applies one update to every parameter that has a gradient entry.
    pub fn step(&mut self, params: &mut ParamSet<T>, grads: &GradMap<T>) -> Result<()> {
        let mu = T::from_f64(self.momentum);
        let lr = T::from_f64(self.learning_rate);
        for (name, tensor) in params.iter_mut() {
            let Some(grad) = grads.get(name) else {
                continue;
            };
            if grad.len() != tensor.numel() {
                return Err(Error::shape(format!(
                    "gradient for {name} has {} values, parameter has {}",
                    grad.len(),
                    tensor.numel()
                )));
            }
            let velocity = self.velocity_mut(name, grad.len());
            for ((w, v), g) in tensor.values_mut().iter_mut().zip(velocity).zip(grad) {
                *v = mu * *v + *g;
                *w -= lr * *v;
            }
        }
        Ok(())
    }
}
