use serde::{Deserialize, Serialize};

use super::params::{Gradients, ParamStore};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global-norm gradient clipping threshold, applied before the update.
    pub clip_norm: Option<f64>,
}

impl AdamConfig {
    pub fn new(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: None,
        }
    }

    pub fn with_clip(mut self, clip_norm: f64) -> Self {
        self.clip_norm = Some(clip_norm);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    /// Gradient norm before clipping.
    pub grad_norm: f64,
    pub clipped: bool,
}

/// Rescales `grads` so their global norm is at most `max_norm`.
/// Returns the norm before rescaling.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

/// One bias-corrected Adam update from the store's accumulated gradients,
/// which are zeroed afterwards. On a non-finite gradient nothing is changed.
pub fn adam_step(store: &mut ParamStore, cfg: &AdamConfig) -> Result<StepReport> {
    for id in store.ids() {
        if store.grads().get(id).iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient(store.name(id).to_string()));
        }
    }
    let grad_norm = match cfg.clip_norm {
        Some(max) => clip_global_norm(store.grads_mut(), max),
        None => store.grads().global_norm(),
    };
    let clipped = cfg.clip_norm.is_some_and(|max| grad_norm > max);

    store.step += 1;
    let t = store.step as f64;
    let bc1 = 1.0 - cfg.beta1.powf(t);
    let bc2 = 1.0 - cfg.beta2.powf(t);
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        let i = id.index();
        let grad = store.grads().get(id).to_vec();
        let (m, v) = (&mut store.first_moment[i], &mut store.second_moment[i]);
        for ((mi, vi), g) in m.iter_mut().zip(v.iter_mut()).zip(&grad) {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
        }
        let m = store.first_moment[i].clone();
        let v = store.second_moment[i].clone();
        for ((p, mi), vi) in store.value_mut(id).iter_mut().zip(&m).zip(&v) {
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    store.zero_grads();
    Ok(StepReport { grad_norm, clipped })
}
