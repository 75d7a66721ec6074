use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, WordId};
use crate::game::{play_words, GameConfig, GameState, WordPolicy};
use crate::rng;
use crate::{Error, Result};

/// `|A ∩ B| / |A ∪ B|` over word sets; duplicates are ignored.
pub fn jaccard(a: &[WordId], b: &[WordId]) -> Result<f64> {
    let a: BTreeSet<WordId> = a.iter().copied().collect();
    let b: BTreeSet<WordId> = b.iter().copied().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return Err(Error::Config("Jaccard index of two empty sets".into()));
    }
    Ok(a.intersection(&b).count() as f64 / union as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub games: usize,
    pub tuples: Vec<Vec<WordId>>,
    /// `J(w^i, w^j)` for `i < j`, in row-major order.
    pub pairwise: Vec<f64>,
    pub omega: f64,
}

/// Mean Jaccard index over the `N(N-1)/2` distinct pairs.
pub fn diversity_index(tuples: &[Vec<WordId>]) -> Result<DiversityReport> {
    let n = tuples.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "diversity needs at least 2 tuples, got {n}"
        )));
    }
    let width = tuples[0].len();
    if let Some(bad) = tuples.iter().find(|t| t.len() != width) {
        return Err(Error::Shape(format!(
            "word tuples differ in size: {} vs {width}",
            bad.len()
        )));
    }
    let pairwise: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| jaccard(&tuples[i], &tuples[j]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let omega = pairwise.iter().sum::<f64>() / pairwise.len() as f64;
    Ok(DiversityReport {
        games: n,
        tuples: tuples.to_vec(),
        pairwise,
        omega,
    })
}

/// One game per speaker of `corpus` with that speaker as the target and
/// `K - 1` other guests drawn at random. Returns the requested words.
pub fn diversity_games(
    corpus: &Corpus,
    game: GameConfig,
    policy: &dyn WordPolicy,
    seed: u64,
) -> Result<Vec<Vec<WordId>>> {
    game.validate(corpus)?;
    let g = corpus.speaker_count();
    (0..g)
        .into_par_iter()
        .map(|target| {
            let mut r = rng::stream(seed, target as u64);
            let mut guests: Vec<usize> = index::sample(&mut r, g - 1, game.guests - 1)
                .into_iter()
                .map(|p| if p >= target { p + 1 } else { p })
                .collect();
            guests.push(target);
            guests.shuffle(&mut r);
            let at = guests
                .iter()
                .position(|&p| p == target)
                .expect("target inserted");
            let state = GameState::with_guests(corpus, guests, at, game.words)?;
            Ok(play_words(state, corpus, policy, &mut r)?
                .requested()
                .to_vec())
        })
        .collect()
}
