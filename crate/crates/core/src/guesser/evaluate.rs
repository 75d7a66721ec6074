use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GuesserModel;
use crate::corpus::{mean_vector, Corpus, WordId};
use crate::game::{argmax, new_game, play_words, terminal_reward, GameConfig, WordPolicy};
use crate::nn::ops::dot;
use crate::rng;
use crate::Result;

/// Anything that turns (guest prints, uttered words) into guest probabilities.
pub trait Scorer: Sync {
    fn probabilities(&self, guests: &[&[f64]], uttered: &[&[f64]]) -> Result<Vec<f64>>;
}

impl Scorer for GuesserModel {
    fn probabilities(&self, guests: &[&[f64]], uttered: &[&[f64]]) -> Result<Vec<f64>> {
        self.predict(guests, uttered)
    }
}

/// Parameter-free reference: the guest whose print has the highest cosine
/// similarity with the mean uttered embedding gets probability 1.
#[derive(Clone, Copy, Debug, Default)]
pub struct CosineNearest;

impl Scorer for CosineNearest {
    fn probabilities(&self, guests: &[&[f64]], uttered: &[&[f64]]) -> Result<Vec<f64>> {
        let d = guests.first().map_or(0, |g| g.len());
        let pooled = mean_vector(uttered.iter().copied(), d);
        let pn = dot(&pooled, &pooled).sqrt();
        let cos: Vec<f64> = guests
            .iter()
            .map(|g| dot(g, &pooled) / (dot(g, g).sqrt() * pn).max(f64::MIN_POSITIVE))
            .collect();
        let mut p = vec![0.0; guests.len()];
        p[argmax(&cos)] = 1.0;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub words: Vec<WordId>,
    /// External id of the target speaker.
    pub target: usize,
    pub success: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub successes: usize,
    pub games: usize,
    pub mean: f64,
    /// Binomial standard error of the mean.
    pub stderr: f64,
}

impl Accuracy {
    pub fn from_records(records: &[GameRecord]) -> Self {
        let games = records.len();
        let successes = records.iter().filter(|r| r.success).count();
        let mean = if games == 0 {
            0.0
        } else {
            successes as f64 / games as f64
        };
        let stderr = if games == 0 {
            0.0
        } else {
            (mean * (1.0 - mean) / games as f64).sqrt()
        };
        Accuracy {
            successes,
            games,
            mean,
            stderr,
        }
    }
}

/// Plays `n_games` seeded games. Game `i` draws everything (guests, target,
/// policy randomness) from stream `i` of `seed`, so results do not depend on
/// the thread count.
pub fn play_games(
    scorer: &dyn Scorer,
    corpus: &Corpus,
    game: GameConfig,
    policy: &dyn WordPolicy,
    n_games: usize,
    seed: u64,
) -> Result<Vec<GameRecord>> {
    game.validate(corpus)?;
    (0..n_games)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let state = new_game(corpus, &game, &mut rng)?;
            let state = play_words(state, corpus, policy, &mut rng)?;
            let probs = scorer.probabilities(&state.guest_prints(corpus), &state.uttered_refs())?;
            Ok(GameRecord {
                words: state.requested().to_vec(),
                target: corpus.speaker(state.target_position()).0,
                success: terminal_reward(&state, &probs)? == 1.0,
            })
        })
        .collect()
}

pub fn evaluate_guesser(
    scorer: &dyn Scorer,
    corpus: &Corpus,
    game: GameConfig,
    policy: &dyn WordPolicy,
    n_games: usize,
    seed: u64,
) -> Result<Accuracy> {
    let records = play_games(scorer, corpus, game, policy, n_games, seed)?;
    Ok(Accuracy::from_records(&records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthConfig};
    use crate::game::UniformRandom;
    use crate::guesser::GuesserSpec;

    fn corpus() -> Corpus {
        generate_synthetic(&SynthConfig {
            train_speakers: 40,
            test_speakers: 0,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn untrained_guesser_is_at_chance() {
        let c = corpus();
        let m = GuesserModel::new(GuesserSpec::new(32), 0).unwrap();
        let n = 10_000;
        let acc = evaluate_guesser(&m, &c, GameConfig::new(5, 3), &UniformRandom, n, 1).unwrap();
        let sigma = (0.2 * 0.8 / n as f64).sqrt();
        assert!((acc.mean - 0.2).abs() < 4.0 * sigma, "{acc:?}");
    }

    #[test]
    fn one_guest_always_wins() {
        let c = corpus();
        let m = GuesserModel::new(GuesserSpec::new(32), 0).unwrap();
        let acc = evaluate_guesser(&m, &c, GameConfig::new(1, 3), &UniformRandom, 200, 1).unwrap();
        assert_eq!(acc.mean, 1.0);
    }

    #[test]
    fn evaluation_is_seed_deterministic() {
        let c = corpus();
        let m = GuesserModel::new(GuesserSpec::new(32), 4).unwrap();
        let cfg = GameConfig::new(5, 3);
        let a = play_games(&m, &c, cfg, &UniformRandom, 500, 9).unwrap();
        let b = play_games(&m, &c, cfg, &UniformRandom, 500, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cosine_reference_beats_chance() {
        let c = corpus();
        let acc = evaluate_guesser(
            &CosineNearest,
            &c,
            GameConfig::new(5, 3),
            &UniformRandom,
            2000,
            2,
        )
        .unwrap();
        assert!(acc.mean > 0.5, "{acc:?}");
    }
}
