use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::corpus::{mean_vector, Corpus, WordId};
use crate::game::{argmax, GameState, WordPolicy};
use crate::nn::{
    log_softmax, softmax, BiLstm, BiLstmCache, BiLstmSpec, Checkpoint, Gradients, Init, Mlp,
    MlpCache, MlpSpec, ParamId, ParamStore,
};
use crate::rng;
use crate::{Error, Result};

type NoDropout = rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnquirerSpec {
    pub dimension: usize,
    pub vocab: usize,
    /// Per-direction LSTM width.
    pub lstm_hidden: usize,
    pub mlp_hidden: usize,
}

impl EnquirerSpec {
    pub fn new(dimension: usize, vocab: usize) -> Self {
        EnquirerSpec {
            dimension,
            vocab,
            lstm_hidden: 128,
            mlp_hidden: 256,
        }
    }

    fn feature_width(&self) -> usize {
        2 * self.lstm_hidden + self.dimension
    }
}

#[derive(Clone, Debug)]
pub struct EnquirerModel {
    spec: EnquirerSpec,
    start: ParamId,
    lstm: BiLstm,
    policy: Mlp,
    value: Mlp,
    store: ParamStore,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutput {
    /// Raw head output; masked words hold `-inf`.
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub log_probabilities: Vec<f64>,
    pub value: f64,
}

#[derive(Debug)]
pub struct EnquirerCache {
    lstm: BiLstmCache,
    positions: usize,
    policy: MlpCache,
    value: MlpCache,
}

impl EnquirerModel {
    pub fn new(spec: EnquirerSpec, seed: u64) -> Result<Self> {
        if spec.vocab < 2 {
            return Err(Error::Config(
                "enquirer needs a vocabulary of >= 2 words".into(),
            ));
        }
        let mut store = ParamStore::new();
        let mut r = rng::seeded(seed);
        let d = spec.dimension;
        let start = store.add("start_token", &[d], Init::FanIn(d), &mut r);
        let lstm = BiLstm::new(
            BiLstmSpec {
                input: d,
                hidden: spec.lstm_hidden,
            },
            &mut store,
            "lstm",
            &mut r,
        )?;
        let f = spec.feature_width();
        let policy = Mlp::new(
            MlpSpec::new(f, &[spec.mlp_hidden], spec.vocab),
            &mut store,
            "policy",
            &mut r,
        )?;
        let value = Mlp::new(
            MlpSpec::new(f, &[spec.mlp_hidden], 1),
            &mut store,
            "value",
            &mut r,
        )?;
        Ok(EnquirerModel {
            spec,
            start,
            lstm,
            policy,
            value,
            store,
        })
    }

    pub fn spec(&self) -> &EnquirerSpec {
        &self.spec
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// `mask[w]` is `true` for words that may not be requested.
    pub fn forward(
        &self,
        guest_mean: &[f64],
        uttered: &[&[f64]],
        mask: &[bool],
    ) -> Result<(PolicyOutput, EnquirerCache)> {
        if mask.len() != self.spec.vocab {
            return Err(Error::Shape(format!(
                "mask covers {} words, vocabulary has {}",
                mask.len(),
                self.spec.vocab
            )));
        }
        if mask.iter().all(|&m| m) {
            return Err(Error::AllMasked);
        }
        if guest_mean.len() != self.spec.dimension {
            return Err(Error::Shape(format!(
                "guest context has width {}, expected {}",
                guest_mean.len(),
                self.spec.dimension
            )));
        }
        let (states, lstm) =
            self.lstm
                .forward_with_start(&self.store, self.store.value(self.start), uttered)?;
        let positions = states.len();
        let mut features = states.into_iter().next_back().expect("start token present");
        features.extend_from_slice(guest_mean);

        let (mut logits, policy) =
            self.policy
                .forward::<NoDropout>(&self.store, &features, None)?;
        let (value, value_cache) = self
            .value
            .forward::<NoDropout>(&self.store, &features, None)?;
        for (l, &m) in logits.iter_mut().zip(mask) {
            if m {
                *l = f64::NEG_INFINITY;
            }
        }
        let out = PolicyOutput {
            probabilities: softmax(&logits),
            log_probabilities: log_softmax(&logits),
            logits,
            value: value[0],
        };
        let cache = EnquirerCache {
            lstm,
            positions,
            policy,
            value: value_cache,
        };
        Ok((out, cache))
    }

    pub fn forward_state(
        &self,
        state: &GameState,
        corpus: &Corpus,
    ) -> Result<(PolicyOutput, EnquirerCache)> {
        let guest_mean = mean_vector(state.guest_prints(corpus), corpus.dimension());
        self.forward(
            &guest_mean,
            &state.uttered_refs(),
            &state.mask(corpus.vocab_size()),
        )
    }

    /// Backpropagates gradients on the (unmasked) logits and on the value.
    pub fn backward(
        &self,
        cache: EnquirerCache,
        logits_grad: &[f64],
        value_grad: f64,
        grads: &mut Gradients,
    ) {
        let h2 = 2 * self.spec.lstm_hidden;
        let mut d_feat = self
            .policy
            .backward(&self.store, cache.policy, logits_grad, grads);
        let dv = self
            .value
            .backward(&self.store, cache.value, &[value_grad], grads);
        for (a, b) in d_feat.iter_mut().zip(&dv) {
            *a += b;
        }
        let mut out_grads = vec![vec![0.0; h2]; cache.positions];
        out_grads[cache.positions - 1].copy_from_slice(&d_feat[..h2]);
        let dx = self
            .lstm
            .backward(&self.store, cache.lstm, &out_grads, grads);
        for (g, d) in grads.get_mut(self.start).iter_mut().zip(&dx[0]) {
            *g += d;
        }
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        Checkpoint::capture("enquirer", &self.spec, &self.store)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let spec: EnquirerSpec = ckpt.spec("enquirer")?;
        let mut model = EnquirerModel::new(spec, 0)?;
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

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    /// Categorical sample (training rollouts).
    Explore,
    /// Most probable word, lowest index on ties (evaluation).
    Greedy,
}

pub fn sample_action<R: Rng + ?Sized>(
    probabilities: &[f64],
    mode: SampleMode,
    rng: &mut R,
) -> Result<WordId> {
    let last_open = probabilities.iter().rposition(|&p| p > 0.0);
    let Some(last_open) = last_open else {
        return Err(Error::AllMasked);
    };
    match mode {
        SampleMode::Greedy => Ok(WordId(argmax(probabilities))),
        SampleMode::Explore => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, &p) in probabilities.iter().enumerate() {
                if p > 0.0 {
                    acc += p;
                    if u < acc {
                        return Ok(WordId(i));
                    }
                }
            }
            Ok(WordId(last_open))
        }
    }
}

/// Adapter that lets a trained enquirer play games.
#[derive(Clone, Copy, Debug)]
pub struct EnquirerPolicy<'a> {
    pub model: &'a EnquirerModel,
    pub mode: SampleMode,
}

impl WordPolicy for EnquirerPolicy<'_> {
    fn name(&self) -> String {
        "enquirer".into()
    }

    fn choose(&self, state: &GameState, corpus: &Corpus, rng: &mut dyn RngCore) -> Result<WordId> {
        let (out, _) = self.model.forward_state(state, corpus)?;
        sample_action(&out.probabilities, self.mode, rng)
    }
}
