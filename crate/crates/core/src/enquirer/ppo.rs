use std::collections::VecDeque;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{
    sample_action, EnquirerCache, EnquirerModel, EnquirerPolicy, EnquirerSpec, PolicyOutput,
    SampleMode,
};
use crate::corpus::{mean_vector, Corpus, WordId};
use crate::game::{new_game, terminal_reward, GameConfig, GameState};
use crate::guesser::{play_games, Accuracy, GameRecord, Scorer};
use crate::nn::ops::entropy;
use crate::nn::{adam_step, AdamConfig, Gradients};
use crate::rng;
use crate::{Error, Result};

const CHUNK: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub game: GameConfig,
    pub spec: Option<EnquirerSpec>,
    pub episodes: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    pub grad_clip: f64,
    /// Transitions collected before each round of updates.
    pub rollout_transitions: usize,
    pub minibatch_size: usize,
    /// Gradient steps taken per rollout.
    pub minibatches: usize,
    /// Abort when this many consecutive episodes all earn zero reward.
    pub collapse_window: usize,
    /// Episodes averaged into each curve point.
    pub curve_window: usize,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            game: GameConfig::new(5, 3),
            spec: None,
            episodes: 80_000,
            gamma: 0.9,
            gae_lambda: 0.95,
            clip: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            learning_rate: 5e-3,
            grad_clip: 1.0,
            rollout_transitions: 1024,
            minibatch_size: 512,
            minibatches: 4,
            collapse_window: 5_000,
            curve_window: 1_000,
            seed: 0,
        }
    }
}

impl PpoConfig {
    fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.gamma) || !unit(self.gae_lambda) {
            return Err(Error::Config("gamma and lambda must lie in [0, 1]".into()));
        }
        if [self.clip, self.learning_rate, self.grad_clip]
            .iter()
            .any(|v| v.is_nan() || *v <= 0.0)
        {
            return Err(Error::Config(
                "clip, learning rate and gradient clip must be positive".into(),
            ));
        }
        if self.episodes == 0
            || self.rollout_transitions == 0
            || self.minibatch_size == 0
            || self.minibatches == 0
            || self.curve_window == 0
        {
            return Err(Error::Config(
                "episodes, rollout, minibatch sizes and curve window must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Terminal reward of a finished game.
pub trait EpisodeReward: Sync {
    fn reward(&self, state: &GameState, corpus: &Corpus) -> Result<f64>;
}

/// 1 when the scorer's argmax is the target, else 0.
pub struct GuesserReward<'a>(pub &'a dyn Scorer);

impl EpisodeReward for GuesserReward<'_> {
    fn reward(&self, state: &GameState, corpus: &Corpus) -> Result<f64> {
        let probs = self
            .0
            .probabilities(&state.guest_prints(corpus), &state.uttered_refs())?;
        terminal_reward(state, &probs)
    }
}

/// 1 when the given word was requested, else 0.
#[derive(Clone, Copy, Debug)]
pub struct TargetWordReward(pub WordId);

impl EpisodeReward for TargetWordReward {
    fn reward(&self, state: &GameState, _corpus: &Corpus) -> Result<f64> {
        Ok(if state.requested().contains(&self.0) {
            1.0
        } else {
            0.0
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub guest_mean: Vec<f64>,
    pub uttered: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    pub action: WordId,
    /// Log-probability of `action` under the behaviour policy.
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub advantage: f64,
    pub ret: f64,
}

/// Generalized advantage estimation over one episode that ends after the
/// last reward. Returns `(advantages, returns)`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(rewards.len(), values.len(), "one value per reward");
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let next = if t + 1 < n { values[t + 1] } else { 0.0 };
        let delta = rewards[t] + gamma * next - values[t];
        running = delta + gamma * lambda * running;
        adv[t] = running;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

fn ratio_of(
    model: &EnquirerModel,
    t: &Transition,
    index: usize,
) -> Result<(f64, PolicyOutput, EnquirerCache)> {
    let uttered: Vec<&[f64]> = t.uttered.iter().map(Vec::as_slice).collect();
    let (out, cache) = model.forward(&t.guest_mean, &uttered, &t.mask)?;
    let ratio = (out.log_probabilities[t.action.0] - t.log_prob).exp();
    if !ratio.is_finite() {
        return Err(Error::NonFiniteRatio {
            index,
            detail: format!(
                "new log-prob {}, old log-prob {}",
                out.log_probabilities[t.action.0], t.log_prob
            ),
        });
    }
    Ok((ratio, out, cache))
}

/// Probability ratios of the current policy against the behaviour policy.
pub fn ppo_ratios(model: &EnquirerModel, batch: &[&Transition]) -> Result<Vec<f64>> {
    batch
        .par_iter()
        .enumerate()
        .map(|(i, t)| ratio_of(model, t, i).map(|r| r.0))
        .collect()
}

/// Per-transition PPO loss and its gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionLoss {
    /// `-min(ρA, clip(ρ)A) - c_e·H + c_v·(V - R)²`
    pub loss: f64,
    pub surrogate: f64,
    pub entropy: f64,
    pub value_error: f64,
    pub clipped: bool,
    pub logits_grad: Vec<f64>,
    pub value_grad: f64,
}

/// Evaluates the clipped objective for one transition given the current
/// policy output. `advantage` is the (already normalized) advantage.
pub fn transition_loss(
    out: &PolicyOutput,
    transition: &Transition,
    advantage: f64,
    config: &PpoConfig,
) -> TransitionLoss {
    let a = transition.action.0;
    let ratio = (out.log_probabilities[a] - transition.log_prob).exp();
    let clipped = ratio.clamp(1.0 - config.clip, 1.0 + config.clip);
    let unclipped_active = ratio * advantage <= clipped * advantage;
    let surrogate = (ratio * advantage).min(clipped * advantage);
    let h = entropy(&out.probabilities);
    let verr = out.value - transition.ret;

    let p = &out.probabilities;
    let mut logits_grad = vec![0.0; p.len()];
    for (i, d) in logits_grad.iter_mut().enumerate() {
        if transition.mask[i] {
            continue;
        }
        let onehot = if i == a { 1.0 } else { 0.0 };
        if unclipped_active {
            *d -= advantage * ratio * (onehot - p[i]);
        }
        if p[i] > 0.0 {
            *d += config.entropy_coef * p[i] * (out.log_probabilities[i] + h);
        }
    }
    TransitionLoss {
        loss: -surrogate - config.entropy_coef * h + config.value_coef * verr * verr,
        surrogate,
        entropy: h,
        value_error: verr,
        clipped: !unclipped_active,
        logits_grad,
        value_grad: 2.0 * config.value_coef * verr,
    }
}

#[derive(Default)]
struct Partial {
    policy: f64,
    value: f64,
    entropy: f64,
    clipped: usize,
}

fn chunk_update(
    model: &EnquirerModel,
    batch: &[&Transition],
    advantages: &[f64],
    offset: usize,
    config: &PpoConfig,
    scale: f64,
) -> Result<(Gradients, Partial)> {
    let mut grads = model.store().zero_gradients();
    let mut part = Partial::default();
    for (j, (t, &adv)) in batch.iter().zip(advantages).enumerate() {
        let (_, out, cache) = ratio_of(model, t, offset + j)?;
        let tl = transition_loss(&out, t, adv, config);
        part.policy -= tl.surrogate;
        part.entropy += tl.entropy;
        part.value += tl.value_error * tl.value_error;
        part.clipped += usize::from(tl.clipped);
        let dlogits: Vec<f64> = tl.logits_grad.iter().map(|g| g * scale).collect();
        model.backward(cache, &dlogits, tl.value_grad * scale, &mut grads);
    }
    Ok((grads, part))
}

/// One clipped-surrogate gradient step on `batch`. Advantages are
/// normalized within the batch.
pub fn ppo_update(
    model: &mut EnquirerModel,
    batch: &[&Transition],
    config: &PpoConfig,
) -> Result<LossComponents> {
    if batch.is_empty() {
        return Err(Error::Config("empty PPO batch".into()));
    }
    let n = batch.len() as f64;
    let mean = batch.iter().map(|t| t.advantage).sum::<f64>() / n;
    let var = batch
        .iter()
        .map(|t| (t.advantage - mean).powi(2))
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    let advantages: Vec<f64> = batch
        .iter()
        .map(|t| (t.advantage - mean) / (std + 1e-8))
        .collect();

    let shared: &EnquirerModel = model;
    let parts: Vec<(Gradients, Partial)> = batch
        .par_chunks(CHUNK)
        .zip(advantages.par_chunks(CHUNK))
        .enumerate()
        .map(|(c, (b, a))| chunk_update(shared, b, a, c * CHUNK, config, 1.0 / n))
        .collect::<Result<_>>()?;
    let mut grads = model.store().zero_gradients();
    let mut total = Partial::default();
    for (g, p) in &parts {
        grads.add(g);
        total.policy += p.policy;
        total.value += p.value;
        total.entropy += p.entropy;
        total.clipped += p.clipped;
    }
    model.store_mut().accumulate(&grads);
    let adam = AdamConfig::new(config.learning_rate).with_clip(config.grad_clip);
    let report = adam_step(model.store_mut(), &adam)?;
    Ok(LossComponents {
        policy_loss: total.policy / n,
        value_loss: total.value / n,
        entropy: total.entropy / n,
        clip_fraction: total.clipped as f64 / n,
        grad_norm: report.grad_norm,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnquirerCurveRow {
    pub episode: usize,
    pub moving_avg_reward: f64,
    pub entropy: f64,
    pub value_loss: f64,
    pub policy_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnquirerCurve {
    pub rows: Vec<EnquirerCurveRow>,
    /// Terminal reward of every training episode, in order.
    pub episode_rewards: Vec<f64>,
}

impl EnquirerCurve {
    /// Mean reward over episodes `[start, start + len)`.
    pub fn mean_reward(&self, start: usize, len: usize) -> f64 {
        let end = (start + len).min(self.episode_rewards.len());
        let slice = &self.episode_rewards[start.min(end)..end];
        if slice.is_empty() {
            return 0.0;
        }
        slice.iter().sum::<f64>() / slice.len() as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Episode {
    transitions: Vec<Transition>,
    reward: f64,
}

fn play_episode(
    model: &EnquirerModel,
    corpus: &Corpus,
    config: &PpoConfig,
    reward: &dyn EpisodeReward,
    rng: &mut rng::Rng,
) -> Result<Episode> {
    let mut state = new_game(corpus, &config.game, rng)?;
    let guest_mean = mean_vector(state.guest_prints(corpus), corpus.dimension());
    let mut transitions = Vec::with_capacity(config.game.words);
    while !state.is_terminal() {
        let mask = state.mask(corpus.vocab_size());
        let uttered: Vec<Vec<f64>> = state.uttered().to_vec();
        let refs: Vec<&[f64]> = uttered.iter().map(Vec::as_slice).collect();
        let (out, _) = model.forward(&guest_mean, &refs, &mask)?;
        let action = sample_action(&out.probabilities, SampleMode::Explore, rng)?;
        transitions.push(Transition {
            guest_mean: guest_mean.clone(),
            uttered,
            mask,
            action,
            log_prob: out.log_probabilities[action.0],
            value: out.value,
            reward: 0.0,
            advantage: 0.0,
            ret: 0.0,
        });
        state = state.step(action, corpus)?.state;
    }
    let r = reward.reward(&state, corpus)?;
    transitions.last_mut().expect("budget >= 1").reward = r;
    let rewards: Vec<f64> = transitions.iter().map(|t| t.reward).collect();
    let values: Vec<f64> = transitions.iter().map(|t| t.value).collect();
    let (adv, ret) = compute_gae(&rewards, &values, config.gamma, config.gae_lambda);
    for (t, (a, r)) in transitions.iter_mut().zip(adv.into_iter().zip(ret)) {
        t.advantage = a;
        t.ret = r;
    }
    Ok(Episode {
        transitions,
        reward: r,
    })
}

/// Trains an enquirer against a frozen scorer.
pub fn train_enquirer(
    corpus: &Corpus,
    guesser: &dyn Scorer,
    config: &PpoConfig,
) -> Result<(EnquirerModel, EnquirerCurve)> {
    train_enquirer_with_reward(corpus, &GuesserReward(guesser), config)
}

/// PPO with rollouts of whole episodes. Each rollout plays enough episodes
/// to collect `rollout_transitions` transitions (episode `e` uses stream `e`
/// of the rollout seed), then takes `minibatches` gradient steps on
/// minibatches drawn without replacement from a shuffled rollout.
pub fn train_enquirer_with_reward(
    corpus: &Corpus,
    reward: &dyn EpisodeReward,
    config: &PpoConfig,
) -> Result<(EnquirerModel, EnquirerCurve)> {
    config.validate()?;
    config.game.validate(corpus)?;
    let spec = config
        .spec
        .clone()
        .unwrap_or_else(|| EnquirerSpec::new(corpus.dimension(), corpus.vocab_size()));
    if spec.dimension != corpus.dimension() || spec.vocab != corpus.vocab_size() {
        return Err(Error::Config(format!(
            "enquirer spec ({}, {}) does not match corpus ({}, {})",
            spec.dimension,
            spec.vocab,
            corpus.dimension(),
            corpus.vocab_size()
        )));
    }
    let mut model = EnquirerModel::new(spec, config.seed)?;
    let mut rng = rng::seeded(config.seed ^ 0x5851_f42d_4c95_7f2d);
    let per_rollout = config.rollout_transitions.div_ceil(config.game.words);
    let mut curve = EnquirerCurve::default();
    let mut window: VecDeque<f64> = VecDeque::with_capacity(config.curve_window);
    let mut window_sum = 0.0;
    let mut zero_run = 0usize;
    let mut next_row = config.curve_window;
    let mut last = LossComponents::default();

    while curve.episode_rewards.len() < config.episodes {
        let n = per_rollout.min(config.episodes - curve.episode_rewards.len());
        let rollout_seed = rng.next_u64();
        let shared = &model;
        let episodes: Vec<Episode> = (0..n)
            .into_par_iter()
            .map(|e| {
                let mut r = rng::stream(rollout_seed, e as u64);
                play_episode(shared, corpus, config, reward, &mut r)
            })
            .collect::<Result<_>>()?;

        let mut transitions = Vec::with_capacity(n * config.game.words);
        for ep in episodes {
            zero_run = if ep.reward == 0.0 { zero_run + 1 } else { 0 };
            if zero_run >= config.collapse_window {
                return Err(Error::Divergence(format!(
                    "reward collapsed: {zero_run} consecutive zero-reward episodes by episode {}",
                    curve.episode_rewards.len() + 1
                )));
            }
            curve.episode_rewards.push(ep.reward);
            window.push_back(ep.reward);
            window_sum += ep.reward;
            if window.len() > config.curve_window {
                window_sum -= window.pop_front().expect("non-empty");
            }
            transitions.extend(ep.transitions);
        }

        let mut order: Vec<usize> = (0..transitions.len()).collect();
        let mut cursor = order.len();
        for _ in 0..config.minibatches {
            let mut batch = Vec::with_capacity(config.minibatch_size);
            while batch.len() < config.minibatch_size.min(transitions.len()) {
                if cursor == order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                batch.push(&transitions[order[cursor]]);
                cursor += 1;
            }
            last = ppo_update(&mut model, &batch, config)?;
            if !last.value_loss.is_finite() || !last.policy_loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite PPO loss after {} episodes",
                    curve.episode_rewards.len()
                )));
            }
        }

        let done = curve.episode_rewards.len();
        if done >= next_row || done == config.episodes {
            curve.rows.push(EnquirerCurveRow {
                episode: done,
                moving_avg_reward: window_sum / window.len() as f64,
                entropy: last.entropy,
                value_loss: last.value_loss,
                policy_loss: last.policy_loss,
            });
            while next_row <= done {
                next_row += config.curve_window;
            }
        }
    }
    Ok((model, curve))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnquirerEval {
    pub accuracy: Accuracy,
    pub records: Vec<GameRecord>,
}

/// Greedy word choice, scored by `guesser`.
pub fn evaluate_enquirer(
    enquirer: &EnquirerModel,
    guesser: &dyn Scorer,
    corpus: &Corpus,
    game: GameConfig,
    n_games: usize,
    seed: u64,
) -> Result<EnquirerEval> {
    let policy = EnquirerPolicy {
        model: enquirer,
        mode: SampleMode::Greedy,
    };
    let records = play_games(guesser, corpus, game, &policy, n_games, seed)?;
    Ok(EnquirerEval {
        accuracy: Accuracy::from_records(&records),
        records,
    })
}

#[derive(Serialize)]
struct WordLogLine<'a> {
    game: usize,
    target: usize,
    words: Vec<&'a str>,
    success: bool,
}

/// One JSON line per game with the requested words spelled out.
pub fn write_word_log<W: Write>(records: &[GameRecord], corpus: &Corpus, mut out: W) -> Result<()> {
    for (i, r) in records.iter().enumerate() {
        let words = r
            .words
            .iter()
            .map(|w| {
                corpus
                    .vocab()
                    .get(w.0)
                    .map(String::as_str)
                    .ok_or(Error::OutOfRange {
                        what: "word",
                        index: w.0,
                        len: corpus.vocab_size(),
                    })
            })
            .collect::<Result<_>>()?;
        let line = WordLogLine {
            game: i,
            target: r.target,
            words,
            success: r.success,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthConfig};

    #[test]
    fn gae_three_step_hand_recursion() {
        let (g, l) = (0.9, 0.95);
        let r = [0.0, 0.0, 1.0];
        let v = [0.2, 0.4, 0.5];
        let d2 = 1.0 - 0.5;
        let d1 = 0.0 + g * 0.5 - 0.4;
        let d0 = 0.0 + g * 0.4 - 0.2;
        let a2 = d2;
        let a1 = d1 + g * l * a2;
        let a0 = d0 + g * l * a1;
        let (adv, ret) = compute_gae(&r, &v, g, l);
        for (x, y) in adv.iter().zip([a0, a1, a2]) {
            assert!((x - y).abs() < 1e-12);
        }
        for ((x, a), v) in ret.iter().zip([a0, a1, a2]).zip(v) {
            assert!((x - (a + v)).abs() < 1e-12);
        }
    }

    #[test]
    fn gae_with_unit_discount_is_return_minus_value() {
        let r = [0.3, -0.1, 1.0, 0.5];
        let v = [0.1, 0.7, -0.2, 0.4];
        let (adv, ret) = compute_gae(&r, &v, 1.0, 1.0);
        for t in 0..4 {
            let g: f64 = r[t..].iter().sum();
            assert!((adv[t] - (g - v[t])).abs() < 1e-12);
            assert!((ret[t] - g).abs() < 1e-12);
        }
    }

    #[test]
    fn gae_with_zero_lambda_is_one_step_td() {
        let r = [0.0, 0.0, 1.0];
        let v = [0.3, 0.6, 0.9];
        let (adv, _) = compute_gae(&r, &v, 0.9, 0.0);
        assert!((adv[0] - (0.9 * 0.6 - 0.3)).abs() < 1e-12);
        assert!((adv[1] - (0.9 * 0.9 - 0.6)).abs() < 1e-12);
        assert!((adv[2] - (1.0 - 0.9)).abs() < 1e-12);
    }

    fn small() -> (Corpus, PpoConfig) {
        let corpus = generate_synthetic(&SynthConfig {
            dimension: 4,
            vocab: 6,
            train_speakers: 10,
            test_speakers: 0,
            enrollment: 2,
            ..SynthConfig::default()
        })
        .unwrap();
        let config = PpoConfig {
            game: GameConfig::new(3, 2),
            spec: Some(EnquirerSpec {
                dimension: 4,
                vocab: 6,
                lstm_hidden: 4,
                mlp_hidden: 8,
            }),
            episodes: 64,
            rollout_transitions: 64,
            minibatch_size: 32,
            minibatches: 2,
            curve_window: 16,
            ..PpoConfig::default()
        };
        (corpus, config)
    }

    fn rollout(model: &EnquirerModel, corpus: &Corpus, config: &PpoConfig) -> Vec<Transition> {
        let mut r = rng::seeded(3);
        (0..20)
            .flat_map(|_| {
                play_episode(model, corpus, config, &TargetWordReward(WordId(2)), &mut r)
                    .unwrap()
                    .transitions
            })
            .collect()
    }

    #[test]
    fn ratio_is_exactly_one_before_the_first_update() {
        let (corpus, config) = small();
        let model = EnquirerModel::new(config.spec.clone().unwrap(), 1).unwrap();
        let ts = rollout(&model, &corpus, &config);
        let batch: Vec<&Transition> = ts.iter().collect();
        assert!(ppo_ratios(&model, &batch)
            .unwrap()
            .iter()
            .all(|&r| r == 1.0));
    }

    #[test]
    fn on_policy_surrogate_is_zero_mean() {
        let (corpus, config) = small();
        let mut model = EnquirerModel::new(config.spec.clone().unwrap(), 1).unwrap();
        let ts = rollout(&model, &corpus, &config);
        let batch: Vec<&Transition> = ts.iter().collect();
        let loss = ppo_update(&mut model, &batch, &config).unwrap();
        assert!(loss.policy_loss.abs() < 1e-12, "{}", loss.policy_loss);
        assert_eq!(loss.clip_fraction, 0.0);
    }

    #[test]
    fn corrupted_log_prob_is_reported() {
        let (corpus, config) = small();
        let mut model = EnquirerModel::new(config.spec.clone().unwrap(), 1).unwrap();
        let mut ts = rollout(&model, &corpus, &config);
        ts[5].log_prob = f64::NEG_INFINITY;
        let batch: Vec<&Transition> = ts.iter().collect();
        assert!(matches!(
            ppo_update(&mut model, &batch, &config),
            Err(Error::NonFiniteRatio { index: 5, .. })
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let (corpus, config) = small();
        let run = || {
            let (m, c) =
                train_enquirer_with_reward(&corpus, &TargetWordReward(WordId(1)), &config).unwrap();
            (m.to_checkpoint().unwrap(), c)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn collapse_aborts() {
        let (corpus, mut config) = small();
        config.collapse_window = 10;
        struct Never;
        impl EpisodeReward for Never {
            fn reward(&self, _: &GameState, _: &Corpus) -> Result<f64> {
                Ok(0.0)
            }
        }
        assert!(matches!(
            train_enquirer_with_reward(&corpus, &Never, &config),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn word_log_spells_words() {
        let (corpus, _) = small();
        let records = vec![GameRecord {
            words: vec![WordId(0), WordId(3)],
            target: 4,
            success: true,
        }];
        let mut buf = Vec::new();
        write_word_log(&records, &corpus, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"game\":0,\"target\":4,\"words\":[\"w00\",\"w03\"],\"success\":true}\n"
        );
    }
}
