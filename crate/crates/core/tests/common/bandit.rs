#![allow(dead_code)]
//! PPO on a one-step bandit: exactly one word pays off.

use isr_core::corpus::{generate_synthetic, Corpus, SynthConfig, WordId};
use isr_core::enquirer::{
    sample_action, train_enquirer_with_reward, PpoConfig, SampleMode, TargetWordReward,
};
use isr_core::game::{new_game, GameConfig};
use isr_core::rng::seeded;

pub const EPISODES: usize = 5_000;
pub const GREEDY_PROBES: usize = 500;

pub struct BanditOutcome {
    pub best: WordId,
    /// Mean reward over the last 1k training episodes.
    pub tail_reward: f64,
    pub greedy_hits: usize,
}

pub fn corpus() -> Corpus {
    generate_synthetic(&SynthConfig {
        train_speakers: 50,
        test_speakers: 0,
        ..SynthConfig::default()
    })
    .unwrap()
}

pub fn run(corpus: &Corpus, seed: u64) -> BanditOutcome {
    let best = WordId((7 * seed as usize + 3) % corpus.vocab_size());
    let config = PpoConfig {
        game: GameConfig::new(5, 1),
        episodes: EPISODES,
        seed,
        ..PpoConfig::default()
    };
    let (model, curve) =
        train_enquirer_with_reward(corpus, &TargetWordReward(best), &config).unwrap();
    let tail_reward = curve.mean_reward(EPISODES - 1_000, 1_000);
    let mut r = seeded(1000 + seed);
    let greedy_hits = (0..GREEDY_PROBES)
        .filter(|_| {
            let state = new_game(corpus, &config.game, &mut r).unwrap();
            let (out, _) = model.forward_state(&state, corpus).unwrap();
            sample_action(&out.probabilities, SampleMode::Greedy, &mut r).unwrap() == best
        })
        .count();
    BanditOutcome {
        best,
        tail_reward,
        greedy_hits,
    }
}
