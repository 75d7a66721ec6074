//! The embedding world a game is played in: per-speaker voice prints and
//! one utterance embedding per (speaker, word) pair.

mod io;
mod synth;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use io::{load_corpus, read_corpus, write_corpus, CorpusRecord};
pub use synth::{
    generate_synthetic, generate_with_informativeness, mix_utterance, synthetic_split, SynthConfig,
    SynthLatents,
};

use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpeakerId(pub usize);

pub type Embedding = Vec<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Full,
    Train,
    Test,
}

/// Borrowed view of one utterance.
#[derive(Clone, Copy, Debug)]
pub struct Utterance<'a> {
    pub speaker: SpeakerId,
    pub word: WordId,
    pub vector: &'a [f64],
}

/// Immutable speaker/word embedding table.
///
/// Speakers are addressed by *position* (`0..speaker_count()`) inside the
/// game machinery; [`SpeakerId`]s are the stable external labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    dimension: usize,
    vocab: Vec<String>,
    speakers: Vec<SpeakerId>,
    voice_prints: Vec<Embedding>,
    /// `[position][word][dimension]`, flattened.
    utterances: Vec<f64>,
    /// Sentence-level enrollment vectors; may be empty for ingested corpora
    /// that only ship voice prints.
    enrollments: Vec<Vec<Embedding>>,
    split: Split,
}

impl Corpus {
    pub fn from_parts(
        dimension: usize,
        vocab: Vec<String>,
        speakers: Vec<SpeakerId>,
        voice_prints: Vec<Embedding>,
        utterances: Vec<f64>,
        enrollments: Vec<Vec<Embedding>>,
        split: Split,
    ) -> Result<Self> {
        let g = speakers.len();
        let v = vocab.len();
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be >= 1".into()));
        }
        if v < 2 {
            return Err(Error::Config(format!(
                "vocabulary needs >= 2 words, got {v}"
            )));
        }
        let mut sorted = speakers.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != g {
            return Err(Error::Format("duplicate speaker ids".into()));
        }
        if voice_prints.len() != g || enrollments.len() != g {
            return Err(Error::Shape("per-speaker tables disagree in length".into()));
        }
        if utterances.len() != g * v * dimension {
            return Err(Error::Shape(format!(
                "utterance table holds {} values, expected {g} x {v} x {dimension}",
                utterances.len()
            )));
        }
        let all_vectors = voice_prints.iter().chain(enrollments.iter().flatten());
        for e in all_vectors {
            if e.len() != dimension {
                return Err(Error::Shape(format!(
                    "embedding of width {} in a corpus of dimension {dimension}",
                    e.len()
                )));
            }
            if e.iter().any(|x| !x.is_finite()) {
                return Err(Error::Format("non-finite embedding entry".into()));
            }
        }
        if utterances.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format("non-finite utterance entry".into()));
        }
        Ok(Corpus {
            dimension,
            vocab,
            speakers,
            voice_prints,
            utterances,
            enrollments,
            split,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn speaker_count(&self) -> usize {
        self.speakers.len()
    }

    pub fn speakers(&self) -> &[SpeakerId] {
        &self.speakers
    }

    pub fn speaker(&self, position: usize) -> SpeakerId {
        self.speakers[position]
    }

    pub fn position_of(&self, speaker: SpeakerId) -> Option<usize> {
        self.speakers.iter().position(|&s| s == speaker)
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn voice_print(&self, position: usize) -> &[f64] {
        &self.voice_prints[position]
    }

    pub fn enrollments(&self, position: usize) -> &[Embedding] {
        &self.enrollments[position]
    }

    pub fn utterance(&self, position: usize, word: WordId) -> &[f64] {
        let start = (position * self.vocab.len() + word.0) * self.dimension;
        &self.utterances[start..start + self.dimension]
    }

    pub fn utterances(&self) -> impl Iterator<Item = Utterance<'_>> {
        (0..self.speaker_count()).flat_map(move |p| {
            (0..self.vocab_size()).map(move |w| Utterance {
                speaker: self.speakers[p],
                word: WordId(w),
                vector: self.utterance(p, WordId(w)),
            })
        })
    }

    /// Corpus restricted to the given positions, in that order.
    pub fn subset(&self, positions: &[usize], split: Split) -> Result<Self> {
        let mut utterances =
            Vec::with_capacity(positions.len() * self.vocab_size() * self.dimension);
        for &p in positions {
            if p >= self.speaker_count() {
                return Err(Error::OutOfRange {
                    what: "speaker position",
                    index: p,
                    len: self.speaker_count(),
                });
            }
            let row = self.vocab_size() * self.dimension;
            utterances.extend_from_slice(&self.utterances[p * row..(p + 1) * row]);
        }
        Corpus::from_parts(
            self.dimension,
            self.vocab.clone(),
            positions.iter().map(|&p| self.speakers[p]).collect(),
            positions
                .iter()
                .map(|&p| self.voice_prints[p].clone())
                .collect(),
            utterances,
            positions
                .iter()
                .map(|&p| self.enrollments[p].clone())
                .collect(),
            split,
        )
    }

    /// SHA-256 of the interchange serialization.
    pub fn content_hash(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_corpus(self, &mut buf)?;
        Ok(hex::encode(Sha256::digest(&buf)))
    }
}

/// Element-wise mean of equally sized vectors.
pub fn mean_vector<'a, I>(vectors: I, dimension: usize) -> Embedding
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut sum = vec![0.0; dimension];
    let mut n = 0usize;
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    if n > 0 {
        for s in &mut sum {
            *s /= n as f64;
        }
    }
    sum
}

/// Random disjoint train/test partition. The train side receives
/// `max(1, floor(fraction * G))` speakers and the test side the rest.
pub fn split_speakers(corpus: &Corpus, fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let g = corpus.speaker_count();
    let n_train = ((fraction * g as f64).floor() as usize).max(1);
    if n_train >= g {
        return Err(Error::Config(format!(
            "splitting {g} speakers at {fraction} leaves the test side empty"
        )));
    }
    let mut order: Vec<usize> = (0..g).collect();
    order.shuffle(&mut rng::seeded(seed));
    let (train, test) = order.split_at(n_train);
    let mut train = train.to_vec();
    let mut test = test.to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((
        corpus.subset(&train, Split::Train)?,
        corpus.subset(&test, Split::Test)?,
    ))
}
