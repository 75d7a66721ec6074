//! Speaker guesser.
//!
//! Uttered-word embeddings are pooled by attention conditioned on the mean
//! guest print, and every guest is scored against the pooled vector:
//!
//! ```text
//! g_mean = mean_k g_k
//! e_t    = attention_mlp([x_t, g_mean])
//! alpha  = softmax(e)
//! x_pool = sum_t alpha_t x_t
//! p      = softmax_k(score_mlp([g_k, x_pool]))
//! ```

mod evaluate;
mod train;

use std::path::Path;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use evaluate::{evaluate_guesser, play_games, Accuracy, CosineNearest, GameRecord, Scorer};
pub use train::{train_guesser, CurveRow, GuesserCurve, GuesserTrainConfig};

use crate::corpus::mean_vector;
use crate::nn::{
    softmax, softmax_cross_entropy, Checkpoint, Gradients, Mlp, MlpCache, MlpSpec, ParamStore,
};
use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuesserSpec {
    pub dimension: usize,
    pub attention_hidden: usize,
    pub score_hidden: usize,
    pub dropout: f64,
}

impl GuesserSpec {
    pub fn new(dimension: usize) -> Self {
        GuesserSpec {
            dimension,
            attention_hidden: 256,
            score_hidden: 512,
            dropout: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GuesserModel {
    spec: GuesserSpec,
    attention: Mlp,
    score: Mlp,
    store: ParamStore,
}

/// Everything the forward pass computes that callers may inspect.
#[derive(Clone, Debug, PartialEq)]
pub struct GuesserActivations {
    pub mean_guest: Vec<f64>,
    pub attention_logits: Vec<f64>,
    pub attention_weights: Vec<f64>,
    pub pooled: Vec<f64>,
    pub score_logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug)]
pub struct GuesserCache {
    uttered: Vec<Vec<f64>>,
    attention: Vec<MlpCache>,
    score: Vec<MlpCache>,
}

/// Gradients with respect to the forward inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct InputGrads {
    pub guests: Vec<Vec<f64>>,
    pub uttered: Vec<Vec<f64>>,
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

impl GuesserModel {
    pub fn new(spec: GuesserSpec, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new();
        let mut rng = rng::seeded(seed);
        let d = spec.dimension;
        let attention = Mlp::new(
            MlpSpec::new(2 * d, &[spec.attention_hidden], 1).with_dropout(spec.dropout),
            &mut store,
            "attention",
            &mut rng,
        )?;
        let score = Mlp::new(
            MlpSpec::new(2 * d, &[spec.score_hidden], 1).with_dropout(spec.dropout),
            &mut store,
            "score",
            &mut rng,
        )?;
        Ok(GuesserModel {
            spec,
            attention,
            score,
            store,
        })
    }

    pub fn spec(&self) -> &GuesserSpec {
        &self.spec
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Dropout is active only when `dropout_rng` is supplied.
    pub fn forward(
        &self,
        guests: &[&[f64]],
        uttered: &[&[f64]],
        mut dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<(GuesserActivations, GuesserCache)> {
        let d = self.spec.dimension;
        if guests.is_empty() {
            return Err(Error::Shape("guesser needs at least one guest".into()));
        }
        if uttered.is_empty() {
            return Err(Error::Shape(
                "guesser needs at least one uttered word".into(),
            ));
        }
        if let Some(bad) = guests.iter().chain(uttered).find(|v| v.len() != d) {
            return Err(Error::Shape(format!(
                "guesser expects embeddings of width {d}, got {}",
                bad.len()
            )));
        }
        let mean_guest = mean_vector(guests.iter().copied(), d);

        let mut attention_logits = Vec::with_capacity(uttered.len());
        let mut attention = Vec::with_capacity(uttered.len());
        for x in uttered {
            let (e, c) = self.attention.forward(
                &self.store,
                &concat(x, &mean_guest),
                dropout_rng.as_deref_mut(),
            )?;
            attention_logits.push(e[0]);
            attention.push(c);
        }
        let attention_weights = softmax(&attention_logits);
        let mut pooled = vec![0.0; d];
        for (x, a) in uttered.iter().zip(&attention_weights) {
            for (p, xi) in pooled.iter_mut().zip(x.iter()) {
                *p += a * xi;
            }
        }

        let mut score_logits = Vec::with_capacity(guests.len());
        let mut score = Vec::with_capacity(guests.len());
        for g in guests {
            let (s, c) =
                self.score
                    .forward(&self.store, &concat(g, &pooled), dropout_rng.as_deref_mut())?;
            score_logits.push(s[0]);
            score.push(c);
        }
        let probabilities = softmax(&score_logits);
        let act = GuesserActivations {
            mean_guest,
            attention_logits,
            attention_weights,
            pooled,
            score_logits,
            probabilities,
        };
        let cache = GuesserCache {
            uttered: uttered.iter().map(|x| x.to_vec()).collect(),
            attention,
            score,
        };
        Ok((act, cache))
    }

    /// Eval-mode guest probabilities.
    pub fn predict(&self, guests: &[&[f64]], uttered: &[&[f64]]) -> Result<Vec<f64>> {
        Ok(self.forward(guests, uttered, None)?.0.probabilities)
    }

    /// Backpropagates a gradient on the score logits.
    pub fn backward(
        &self,
        act: &GuesserActivations,
        cache: GuesserCache,
        logits_grad: &[f64],
        grads: &mut Gradients,
    ) -> InputGrads {
        let d = self.spec.dimension;
        let k = cache.score.len();
        let mut d_guests = vec![vec![0.0; d]; k];
        let mut d_pooled = vec![0.0; d];
        for ((c, &ds), dg) in cache.score.into_iter().zip(logits_grad).zip(&mut d_guests) {
            let din = self.score.backward(&self.store, c, &[ds], grads);
            for j in 0..d {
                dg[j] += din[j];
                d_pooled[j] += din[d + j];
            }
        }

        let alpha = &act.attention_weights;
        let mut d_uttered: Vec<Vec<f64>> = alpha
            .iter()
            .map(|&a| d_pooled.iter().map(|g| a * g).collect())
            .collect();
        let d_alpha: Vec<f64> = cache
            .uttered
            .iter()
            .map(|x| x.iter().zip(&d_pooled).map(|(a, b)| a * b).sum())
            .collect();
        let weighted: f64 = alpha.iter().zip(&d_alpha).map(|(a, b)| a * b).sum();

        let mut d_mean = vec![0.0; d];
        for (t, c) in cache.attention.into_iter().enumerate() {
            let de = alpha[t] * (d_alpha[t] - weighted);
            let din = self.attention.backward(&self.store, c, &[de], grads);
            for j in 0..d {
                d_uttered[t][j] += din[j];
                d_mean[j] += din[d + j];
            }
        }
        for dg in &mut d_guests {
            for (a, b) in dg.iter_mut().zip(&d_mean) {
                *a += b / k as f64;
            }
        }
        InputGrads {
            guests: d_guests,
            uttered: d_uttered,
        }
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        Checkpoint::capture("guesser", &self.spec, &self.store)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let spec: GuesserSpec = ckpt.spec("guesser")?;
        let mut model = GuesserModel::new(spec, 0)?;
        ckpt.restore(&mut model.store)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint()?.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

/// Cross-entropy of the guest distribution at the target, and its gradient
/// with respect to the score logits.
pub fn guesser_loss(act: &GuesserActivations, target: usize) -> Result<(f64, Vec<f64>)> {
    softmax_cross_entropy(&act.score_logits, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn small() -> GuesserModel {
        GuesserModel::new(
            GuesserSpec {
                dimension: 4,
                attention_hidden: 6,
                score_hidden: 5,
                dropout: 0.0,
            },
            1,
        )
        .unwrap()
    }

    fn vecs(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn single_guest_is_certain() {
        let m = small();
        let mut r = seeded(3);
        let g = vecs(&mut r, 1, 4);
        let x = vecs(&mut r, 3, 4);
        assert_eq!(m.predict(&refs(&g), &refs(&x)).unwrap(), vec![1.0]);
    }

    #[test]
    fn identical_prints_give_uniform_distribution() {
        let m = small();
        let mut r = seeded(3);
        let g = vecs(&mut r, 1, 4);
        let guests = vec![g[0].clone(); 5];
        let x = vecs(&mut r, 2, 4);
        let p = m.predict(&refs(&guests), &refs(&x)).unwrap();
        for pk in p {
            assert!((pk - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn single_word_gets_full_attention() {
        let m = small();
        let mut r = seeded(5);
        let g = vecs(&mut r, 3, 4);
        let x = vecs(&mut r, 1, 4);
        let (act, _) = m.forward(&refs(&g), &refs(&x), None).unwrap();
        assert_eq!(act.attention_weights, vec![1.0]);
        assert_eq!(act.pooled, x[0]);
    }

    #[test]
    fn uniform_over_five_costs_ln5() {
        let act = GuesserActivations {
            mean_guest: vec![],
            attention_logits: vec![],
            attention_weights: vec![],
            pooled: vec![],
            score_logits: vec![0.3; 5],
            probabilities: vec![0.2; 5],
        };
        let (loss, _) = guesser_loss(&act, 4).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-12);
        assert!(guesser_loss(&act, 5).is_err());
    }

    #[test]
    fn confident_logits_cost_nothing() {
        let act = GuesserActivations {
            mean_guest: vec![],
            attention_logits: vec![],
            attention_weights: vec![],
            pooled: vec![],
            score_logits: vec![-50.0, 50.0],
            probabilities: vec![0.0, 1.0],
        };
        assert!(guesser_loss(&act, 1).unwrap().0 < 1e-40);
    }

    #[test]
    fn rejects_empty_or_misshapen_inputs() {
        let m = small();
        let g = vec![vec![0.0; 4]; 2];
        assert!(m.predict(&refs(&g), &[]).is_err());
        assert!(m.predict(&[], &refs(&g)).is_err());
        let bad = vec![vec![0.0; 3]];
        assert!(m.predict(&refs(&g), &refs(&bad)).is_err());
    }

    #[test]
    fn permuting_guests_permutes_probabilities() {
        let m = small();
        let mut r = seeded(8);
        for _ in 0..20 {
            let g = vecs(&mut r, 5, 4);
            let x = vecs(&mut r, 3, 4);
            let p = m.predict(&refs(&g), &refs(&x)).unwrap();
            let perm = [3, 0, 4, 1, 2];
            let gp: Vec<Vec<f64>> = perm.iter().map(|&i| g[i].clone()).collect();
            let pp = m.predict(&refs(&gp), &refs(&x)).unwrap();
            for (j, &i) in perm.iter().enumerate() {
                assert!((pp[j] - p[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pooled_vector_is_convex_combination() {
        let m = small();
        let mut r = seeded(9);
        for _ in 0..20 {
            let g = vecs(&mut r, 4, 4);
            let x = vecs(&mut r, 4, 4);
            let (act, _) = m.forward(&refs(&g), &refs(&x), None).unwrap();
            let s: f64 = act.attention_weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
            assert!(act
                .attention_weights
                .iter()
                .all(|&a| (0.0..=1.0).contains(&a)));
            for j in 0..4 {
                let lo = x.iter().map(|v| v[j]).fold(f64::INFINITY, f64::min);
                let hi = x.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max);
                assert!(act.pooled[j] >= lo - 1e-12 && act.pooled[j] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = small();
        let back = GuesserModel::from_checkpoint(&m.to_checkpoint().unwrap()).unwrap();
        for id in m.store().ids() {
            assert_eq!(m.store().value(id), back.store().value(id));
        }
    }
}
