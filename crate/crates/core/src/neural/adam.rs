use serde::{Deserialize, Serialize};

use super::{Dense, Gradients, Mlp};
use crate::{Error, Result};

/// Adaptive-moment optimizer state for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        let sizes: Vec<usize> = net
            .layers()
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn matches(&self, layers: &[Dense]) -> bool {
        self.first.len() == layers.len()
            && self
                .first
                .iter()
                .zip(&self.second)
                .zip(layers)
                .all(|((m, v), l)| {
                    m.len() == l.weights.len() + l.biases.len() && v.len() == m.len()
                })
    }

    /// One bias-corrected descent step. Gradients are of a loss to minimize.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        if !net.same_shape_grads(grads) || !self.matches(net.layers()) {
            return Err(Error::Usage(
                "gradient or optimizer shape does not match network".into(),
            ));
        }
        if !grads.is_finite() {
            return Err(Error::Training {
                episode: 0,
                step: self.step as usize,
                message: "non-finite gradient".into(),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        for (((layer, g), m), v) in net
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            let params = layer.weights.iter_mut().chain(layer.biases.iter_mut());
            let gs = g.weights.iter().chain(g.biases.iter());
            for (((p, &g), m), v) in params.zip(gs).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

impl Mlp {
    fn same_shape_grads(&self, g: &Gradients) -> bool {
        self.layers().len() == g.layers.len()
            && self
                .layers()
                .iter()
                .zip(&g.layers)
                .all(|(a, b)| a.same_shape(b))
    }
}
