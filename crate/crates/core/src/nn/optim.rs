//! AdamW with decoupled weight decay.

use std::collections::HashMap;

use crate::nn::params::ParamStore;
use crate::nn::tape::Gradients;
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

/// Optimizer over an explicit list of parameter paths; anything outside the
/// list is frozen by construction, which is what the sub-network retraining
/// step relies on.
#[derive(Debug)]
pub struct AdamW {
    cfg: AdamWConfig,
    names: Vec<String>,
    step: u64,
    first: HashMap<String, Tensor>,
    second: HashMap<String, Tensor>,
}

impl AdamW {
    pub fn new(cfg: AdamWConfig, names: Vec<String>) -> Self {
        AdamW { cfg, names, step: 0, first: HashMap::new(), second: HashMap::new() }
    }

    pub fn over_store(cfg: AdamWConfig, store: &ParamStore) -> Self {
        Self::new(cfg, store.names().map(str::to_string).collect())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let c = &self.cfg;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        for name in &self.names {
            let Some(g) = grads.get(name) else { continue };
            let p = match store.get_mut(name) {
                Some(p) => p,
                None => continue,
            };
            let m = self
                .first
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(g.rows(), g.cols()));
            let v = self
                .second
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(g.rows(), g.cols()));
            for i in 0..g.len() {
                let gi = g.data()[i];
                m.data_mut()[i] = c.beta1 * m.data()[i] + (1.0 - c.beta1) * gi;
                v.data_mut()[i] = c.beta2 * v.data()[i] + (1.0 - c.beta2) * gi * gi;
                let m_hat = m.data()[i] / bias1;
                let v_hat = v.data()[i] / bias2;
                let update = m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * p.data()[i];
                p.data_mut()[i] -= c.lr * update;
            }
        }
    }
}
