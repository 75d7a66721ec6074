use rand::seq::IndexedRandom;
use rand::RngCore;

use super::GameState;
use crate::corpus::{Corpus, WordId};
use crate::{Error, Result};

/// Chooses the next word to request. Implementations never return a word
/// the state has already requested.
pub trait WordPolicy: Sync {
    fn name(&self) -> String;

    fn choose(&self, state: &GameState, corpus: &Corpus, rng: &mut dyn RngCore) -> Result<WordId>;
}

fn pick_unrequested(
    candidates: impl Iterator<Item = WordId>,
    state: &GameState,
    rng: &mut dyn RngCore,
) -> Result<WordId> {
    let open: Vec<WordId> = candidates
        .filter(|w| !state.requested().contains(w))
        .collect();
    open.choose(rng).copied().ok_or(Error::AllMasked)
}

/// Uniform over the words not yet requested.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformRandom;

impl WordPolicy for UniformRandom {
    fn name(&self) -> String {
        "random".into()
    }

    fn choose(&self, state: &GameState, corpus: &Corpus, rng: &mut dyn RngCore) -> Result<WordId> {
        pick_unrequested((0..corpus.vocab_size()).map(WordId), state, rng)
    }
}

/// Requests the listed words in order.
#[derive(Clone, Debug)]
pub struct FixedWords(pub Vec<WordId>);

impl WordPolicy for FixedWords {
    fn name(&self) -> String {
        "fixed".into()
    }

    fn choose(&self, state: &GameState, _: &Corpus, _: &mut dyn RngCore) -> Result<WordId> {
        self.0.get(state.turn()).copied().ok_or_else(|| {
            Error::Config(format!(
                "fixed word list has {} entries, game needs {}",
                self.0.len(),
                state.budget()
            ))
        })
    }
}

/// Uniform over a curated subset, without replacement (candidates are
/// visited in vocabulary order, so the full vocabulary reproduces
/// [`UniformRandom`] draw for draw). Once the subset is
/// exhausted the remaining words are drawn uniformly from the rest of the
/// vocabulary.
#[derive(Clone, Debug)]
pub struct CuratedRandom(pub Vec<WordId>);

impl WordPolicy for CuratedRandom {
    fn name(&self) -> String {
        "heuristic".into()
    }

    fn choose(&self, state: &GameState, corpus: &Corpus, rng: &mut dyn RngCore) -> Result<WordId> {
        let curated = (0..corpus.vocab_size())
            .map(WordId)
            .filter(|w| self.0.contains(w));
        match pick_unrequested(curated, state, rng) {
            Err(Error::AllMasked) => UniformRandom.choose(state, corpus, rng),
            other => other,
        }
    }
}
