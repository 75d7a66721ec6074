use std::io::Write;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_guesser, guesser_loss, GuesserModel, GuesserSpec};
use crate::corpus::Corpus;
use crate::game::{new_game, play_words, GameConfig, GameState, UniformRandom};
use crate::nn::{adam_step, AdamConfig, Gradients};
use crate::rng;
use crate::{Error, Result};

/// Games per gradient chunk. Chunks are reduced in a fixed order so the
/// summed gradient does not depend on how many threads computed them.
const CHUNK: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuesserTrainConfig {
    pub game: GameConfig,
    pub spec: Option<GuesserSpec>,
    /// Fresh random-word games drawn per epoch.
    pub games_per_epoch: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: Option<f64>,
    /// Held-out games scored after every epoch (fixed seed, no dropout).
    pub validation_games: usize,
    pub seed: u64,
}

impl Default for GuesserTrainConfig {
    fn default() -> Self {
        GuesserTrainConfig {
            game: GameConfig::new(5, 3),
            spec: None,
            games_per_epoch: 45_000,
            epochs: 1,
            batch_size: 1024,
            learning_rate: 3e-4,
            clip_norm: None,
            validation_games: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub epoch: usize,
    pub games_seen: usize,
    pub train_loss: f64,
    pub valid_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GuesserCurve {
    pub rows: Vec<CurveRow>,
    /// Mean training loss of every minibatch, in order.
    pub batch_losses: Vec<f64>,
}

impl GuesserCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Sample {
    state: GameState,
    dropout_seed: u64,
}

fn chunk_gradient(
    model: &GuesserModel,
    corpus: &Corpus,
    samples: &[Sample],
) -> Result<(Gradients, f64)> {
    let mut grads = model.store().zero_gradients();
    let mut loss_sum = 0.0;
    for s in samples {
        let mut drop_rng = rng::seeded(s.dropout_seed);
        let (act, cache) = model.forward(
            &s.state.guest_prints(corpus),
            &s.state.uttered_refs(),
            Some(&mut drop_rng),
        )?;
        let (loss, dlogits) = guesser_loss(&act, s.state.target())?;
        loss_sum += loss;
        model.backward(&act, cache, &dlogits, &mut grads);
    }
    Ok((grads, loss_sum))
}

/// Supervised training on games whose words are drawn uniformly at random.
pub fn train_guesser(
    train: &Corpus,
    valid: &Corpus,
    config: &GuesserTrainConfig,
) -> Result<(GuesserModel, GuesserCurve)> {
    if train.dimension() != valid.dimension() || train.vocab_size() != valid.vocab_size() {
        return Err(Error::Config(
            "train and validation corpora differ in dimension or vocabulary".into(),
        ));
    }
    if config.batch_size == 0 || config.epochs == 0 || config.games_per_epoch == 0 {
        return Err(Error::Config(
            "batch size, epochs and games must be >= 1".into(),
        ));
    }
    config.game.validate(train)?;
    config.game.validate(valid)?;

    let spec = config
        .spec
        .clone()
        .unwrap_or_else(|| GuesserSpec::new(train.dimension()));
    if spec.dimension != train.dimension() {
        return Err(Error::Config(format!(
            "guesser width {} does not match corpus dimension {}",
            spec.dimension,
            train.dimension()
        )));
    }
    let mut model = GuesserModel::new(spec, config.seed)?;
    let adam = AdamConfig {
        clip_norm: config.clip_norm,
        ..AdamConfig::new(config.learning_rate)
    };
    let mut rng = rng::seeded(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let valid_seed = config.seed.wrapping_add(1);
    let mut curve = GuesserCurve::default();
    let mut games_seen = 0;

    for epoch in 1..=config.epochs {
        let mut epoch_loss = 0.0;
        let mut remaining = config.games_per_epoch;
        while remaining > 0 {
            let n = remaining.min(config.batch_size);
            remaining -= n;
            let mut batch = Vec::with_capacity(n);
            for _ in 0..n {
                let state = new_game(train, &config.game, &mut rng)?;
                let state = play_words(state, train, &UniformRandom, &mut rng)?;
                batch.push(Sample {
                    state,
                    dropout_seed: rng.next_u64(),
                });
            }
            let parts: Vec<(Gradients, f64)> = batch
                .par_chunks(CHUNK)
                .map(|c| chunk_gradient(&model, train, c))
                .collect::<Result<_>>()?;
            let mut grads = model.store().zero_gradients();
            let mut loss = 0.0;
            for (g, l) in &parts {
                grads.add(g);
                loss += l;
            }
            let mean_loss = loss / n as f64;
            if !mean_loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "epoch {epoch}, batch {}: loss {mean_loss}",
                    curve.batch_losses.len()
                )));
            }
            grads.scale(1.0 / n as f64);
            model.store_mut().accumulate(&grads);
            adam_step(model.store_mut(), &adam)?;
            curve.batch_losses.push(mean_loss);
            epoch_loss += loss;
            games_seen += n;
        }
        let acc = evaluate_guesser(
            &model,
            valid,
            config.game,
            &UniformRandom,
            config.validation_games,
            valid_seed,
        )?;
        curve.rows.push(CurveRow {
            epoch,
            games_seen,
            train_loss: epoch_loss / config.games_per_epoch as f64,
            valid_accuracy: acc.mean,
        });
    }
    Ok((model, curve))
}
