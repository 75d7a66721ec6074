use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, WordId};
use crate::game::{CuratedRandom, GameConfig, GameState, UniformRandom, WordPolicy};
use crate::guesser::{evaluate_guesser, Accuracy, Scorer};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    /// Games per word score.
    pub eta: usize,
    /// Curated list size.
    pub curated: usize,
    /// Games used to score the resulting policy.
    pub eval_games: usize,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            eta: 20_000,
            curated: 6,
            eval_games: 10_000,
        }
    }
}

/// Requests a fixed word first, then uniformly random unrequested words.
#[derive(Clone, Copy, Debug)]
pub struct ForcedWord(pub WordId);

impl WordPolicy for ForcedWord {
    fn name(&self) -> String {
        format!("forced-{}", self.0 .0)
    }

    fn choose(&self, state: &GameState, corpus: &Corpus, rng: &mut dyn RngCore) -> Result<WordId> {
        if state.turn() == 0 {
            Ok(self.0)
        } else {
            UniformRandom.choose(state, corpus, rng)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordScore {
    pub word: WordId,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicBaseline {
    /// One score per vocabulary word, in vocabulary order.
    pub scores: Vec<WordScore>,
    /// Words by decreasing score (lower id first on ties).
    pub ranking: Vec<WordId>,
    pub curated: Vec<WordId>,
    pub accuracy: Accuracy,
}

impl HeuristicBaseline {
    pub fn policy(&self) -> CuratedRandom {
        CuratedRandom(self.curated.clone())
    }
}

fn word_seed(seed: u64, word: usize) -> u64 {
    seed.wrapping_add(1 + word as u64)
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Scores every word by the accuracy of games that force it into an
/// otherwise random word set, keeps the best `curated` words and evaluates
/// the policy that samples among them. The evaluation games use `seed`
/// directly, so other policies evaluated with the same seed see the same
/// guests and targets.
pub fn heuristic_baseline(
    scorer: &dyn Scorer,
    corpus: &Corpus,
    game: GameConfig,
    config: &HeuristicConfig,
    seed: u64,
) -> Result<HeuristicBaseline> {
    game.validate(corpus)?;
    let v = corpus.vocab_size();
    if config.eta == 0 || config.eval_games == 0 {
        return Err(Error::Config(
            "heuristic needs eta >= 1 and eval games >= 1".into(),
        ));
    }
    if !(game.words <= config.curated && config.curated <= v) {
        return Err(Error::Config(format!(
            "curated list size {} must lie between T={} and V={v}",
            config.curated, game.words
        )));
    }
    let scores = (0..v)
        .map(|w| {
            let acc = evaluate_guesser(
                scorer,
                corpus,
                game,
                &ForcedWord(WordId(w)),
                config.eta,
                word_seed(seed, w),
            )?;
            Ok(WordScore {
                word: WordId(w),
                accuracy: acc.mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ranking: Vec<WordId> = (0..v).map(WordId).collect();
    ranking.sort_by(|a, b| {
        scores[b.0]
            .accuracy
            .total_cmp(&scores[a.0].accuracy)
            .then(a.cmp(b))
    });
    let curated = ranking[..config.curated].to_vec();
    let accuracy = evaluate_guesser(
        scorer,
        corpus,
        game,
        &CuratedRandom(curated.clone()),
        config.eval_games,
        seed,
    )?;
    Ok(HeuristicBaseline {
        scores,
        ranking,
        curated,
        accuracy,
    })
}
