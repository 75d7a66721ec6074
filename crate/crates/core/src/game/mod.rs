//! The ISR game as an episodic MDP.
//!
//! A game draws `K` distinct guests and marks one of them as the target
//! speaker. Each turn the recognizer requests a word it has not requested
//! before and receives the target's utterance embedding for it. After `T`
//! turns the episode ends; the reward is 1 when the guesser's argmax is the
//! target and 0 otherwise.

mod policy;

use std::io::Write;

use rand::seq::{index, SliceRandom};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

pub use policy::{CuratedRandom, FixedWords, UniformRandom, WordPolicy};

use crate::corpus::{Corpus, Embedding, WordId};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Guests per game (`K`).
    pub guests: usize,
    /// Word budget (`T`).
    pub words: usize,
}

impl GameConfig {
    pub fn new(guests: usize, words: usize) -> Self {
        GameConfig { guests, words }
    }

    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        if self.guests == 0 {
            return Err(Error::Config("a game needs at least one guest".into()));
        }
        if self.guests > corpus.speaker_count() {
            return Err(Error::Config(format!(
                "{} guests per game requested but the corpus only has {} speakers",
                self.guests,
                corpus.speaker_count()
            )));
        }
        if self.words == 0 || self.words > corpus.vocab_size() {
            return Err(Error::Config(format!(
                "word budget must lie in 1..={}, got {}",
                corpus.vocab_size(),
                self.words
            )));
        }
        Ok(())
    }
}

/// MDP state: guests, hidden target, and the words collected so far.
#[derive(Clone, Debug, PartialEq)]
pub struct GameState {
    guests: Vec<usize>,
    target: usize,
    requested: Vec<WordId>,
    uttered: Vec<Embedding>,
    budget: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: GameState,
    /// Always 0 here; the terminal reward needs the guesser, see
    /// [`terminal_reward`].
    pub reward: f64,
    pub terminal: bool,
}

/// Samples `K` guests uniformly without replacement and a uniform target.
///
/// `K = 1` is accepted so that degenerate evaluations can be expressed.
pub fn new_game<R: Rng + ?Sized>(
    corpus: &Corpus,
    config: &GameConfig,
    rng: &mut R,
) -> Result<GameState> {
    config.validate(corpus)?;
    let mut guests = index::sample(rng, corpus.speaker_count(), config.guests).into_vec();
    guests.shuffle(rng);
    let target = rng.random_range(0..config.guests);
    Ok(GameState {
        guests,
        target,
        requested: Vec::with_capacity(config.words),
        uttered: Vec::with_capacity(config.words),
        budget: config.words,
    })
}

impl GameState {
    /// A fresh game with explicitly chosen guests (corpus positions).
    pub fn with_guests(
        corpus: &Corpus,
        guests: Vec<usize>,
        target: usize,
        budget: usize,
    ) -> Result<Self> {
        GameConfig::new(guests.len(), budget).validate(corpus)?;
        if target >= guests.len() {
            return Err(Error::OutOfRange {
                what: "target",
                index: target,
                len: guests.len(),
            });
        }
        if let Some(&bad) = guests.iter().find(|&&g| g >= corpus.speaker_count()) {
            return Err(Error::OutOfRange {
                what: "guest position",
                index: bad,
                len: corpus.speaker_count(),
            });
        }
        Ok(GameState {
            guests,
            target,
            requested: Vec::new(),
            uttered: Vec::new(),
            budget,
        })
    }

    /// Corpus positions of the guests, in game order.
    pub fn guests(&self) -> &[usize] {
        &self.guests
    }

    /// Index of the target within [`guests`](Self::guests).
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn target_position(&self) -> usize {
        self.guests[self.target]
    }

    pub fn requested(&self) -> &[WordId] {
        &self.requested
    }

    pub fn uttered(&self) -> &[Embedding] {
        &self.uttered
    }

    pub fn uttered_refs(&self) -> Vec<&[f64]> {
        self.uttered.iter().map(Vec::as_slice).collect()
    }

    pub fn guest_prints<'c>(&self, corpus: &'c Corpus) -> Vec<&'c [f64]> {
        self.guests.iter().map(|&g| corpus.voice_print(g)).collect()
    }

    pub fn turn(&self) -> usize {
        self.requested.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn is_terminal(&self) -> bool {
        self.turn() == self.budget
    }

    /// `true` for every word already requested.
    pub fn mask(&self, vocab: usize) -> Vec<bool> {
        let mut m = vec![false; vocab];
        for w in &self.requested {
            m[w.0] = true;
        }
        m
    }

    /// The target pronounces `word`. The receiver is left untouched.
    pub fn step(&self, word: WordId, corpus: &Corpus) -> Result<StepOutcome> {
        if self.is_terminal() {
            return Err(Error::BudgetExhausted(self.budget));
        }
        if word.0 >= corpus.vocab_size() {
            return Err(Error::OutOfRange {
                what: "word",
                index: word.0,
                len: corpus.vocab_size(),
            });
        }
        if self.requested.contains(&word) {
            return Err(Error::RepeatedWord(word.0));
        }
        let mut next = self.clone();
        next.requested.push(word);
        next.uttered
            .push(corpus.utterance(self.target_position(), word).to_vec());
        let terminal = next.is_terminal();
        Ok(StepOutcome {
            state: next,
            reward: 0.0,
            terminal,
        })
    }

    /// One record per turn for debugging dumps.
    pub fn trace(&self, corpus: &Corpus, game: usize) -> Vec<TurnRecord> {
        self.requested
            .iter()
            .enumerate()
            .map(|(t, w)| TurnRecord {
                game,
                turn: t,
                word: w.0,
                target: corpus.speaker(self.target_position()).0,
                guests: self.guests.iter().map(|&g| corpus.speaker(g).0).collect(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub game: usize,
    pub turn: usize,
    pub word: usize,
    pub target: usize,
    pub guests: Vec<usize>,
}

pub fn write_trace<W: Write>(records: &[TurnRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// 1 when the guesser's argmax (lowest index on ties) is the target.
pub fn terminal_reward(state: &GameState, probabilities: &[f64]) -> Result<f64> {
    if !state.is_terminal() {
        return Err(Error::NotTerminal {
            turn: state.turn(),
            budget: state.budget(),
        });
    }
    if probabilities.len() != state.guests.len() {
        return Err(Error::Shape(format!(
            "{} probabilities for {} guests",
            probabilities.len(),
            state.guests.len()
        )));
    }
    Ok(if argmax(probabilities) == state.target {
        1.0
    } else {
        0.0
    })
}

/// Plays every turn with `policy` and returns the terminal state.
pub fn play_words(
    mut state: GameState,
    corpus: &Corpus,
    policy: &dyn WordPolicy,
    rng: &mut dyn RngCore,
) -> Result<GameState> {
    while !state.is_terminal() {
        let word = policy.choose(&state, corpus, rng)?;
        state = state.step(word, corpus)?.state;
    }
    Ok(state)
}
