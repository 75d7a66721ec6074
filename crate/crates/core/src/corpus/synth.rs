//! Synthetic speaker/word embedding generator.
//!
//! Every speaker `s` has a prototype `z_s`; every word `w` has an anchor
//! `u_w` and a query direction `q_w`. How much of the speaker leaks into an
//! utterance depends on the pair:
//!
//! ```text
//! d[s][w] = sigmoid(sharpness * <q_w, z_s> / sqrt(D))
//! x[s][w] = d * z_s + (1 - d) * u_w + sigma_u * eps
//! print_s = mean_m (z_s + sigma_g * eps'_m)
//! ```
//!
//! Draw order from `ChaCha8(seed)`, all standard normals, row-major:
//! prototypes (G x D), anchors (V x D), queries (V x D), utterance noise
//! (G x V x D), enrollment noise (G x M x D). The order does not depend on
//! the noise scales.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{mean_vector, Corpus, Embedding, SpeakerId, Split};
use crate::nn::ops::{dot, sigmoid};
use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub dimension: usize,
    pub vocab: usize,
    pub train_speakers: usize,
    pub test_speakers: usize,
    /// Enrollment sentences averaged into each voice print.
    pub enrollment: usize,
    pub sharpness: f64,
    pub utterance_noise: f64,
    pub enrollment_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dimension: 32,
            vocab: 20,
            train_speakers: 2000,
            test_speakers: 60,
            enrollment: 8,
            sharpness: 3.0,
            utterance_noise: 1.5,
            enrollment_noise: 0.2,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn speakers(&self) -> usize {
        self.train_speakers + self.test_speakers
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.dimension == 0 {
            return bad("dimension must be >= 1");
        }
        if self.vocab < 2 {
            return bad("vocabulary needs at least 2 words");
        }
        if self.speakers() == 0 {
            return bad("corpus needs at least one speaker");
        }
        if self.enrollment == 0 {
            return bad("enrollment count must be >= 1");
        }
        if !(self.utterance_noise >= 0.0 && self.enrollment_noise >= 0.0) {
            return bad("noise scales must be >= 0");
        }
        if self.sharpness.is_nan() {
            return bad("sharpness must be a number");
        }
        Ok(())
    }
}

/// Hidden variables behind a synthetic corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthLatents {
    pub prototypes: Vec<Embedding>,
    pub anchors: Vec<Embedding>,
    pub queries: Vec<Embedding>,
    /// `informativeness[s][w]`, the mixing weight actually used.
    pub informativeness: Vec<Vec<f64>>,
}

/// `d * prototype + (1 - d) * anchor`
pub fn mix_utterance(d: f64, prototype: &[f64], anchor: &[f64]) -> Embedding {
    prototype
        .iter()
        .zip(anchor)
        .map(|(z, u)| d * z + (1.0 - d) * u)
        .collect()
}

fn draw<R: Rng>(rng: &mut R, rows: usize, dim: usize) -> Vec<Embedding> {
    (0..rows)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

fn informativeness(sharpness: f64, query: &[f64], prototype: &[f64]) -> f64 {
    let a = sharpness * dot(query, prototype) / (query.len() as f64).sqrt();
    if a.is_nan() {
        0.5
    } else {
        sigmoid(a)
    }
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<Corpus> {
    generate_with_informativeness(config, |_, _, d| d).map(|(c, _)| c)
}

/// Like [`generate_synthetic`], with `adjust(speaker, word, d)` overriding
/// the mixing weight of each pair. The random draws are unchanged.
pub fn generate_with_informativeness<F>(
    config: &SynthConfig,
    adjust: F,
) -> Result<(Corpus, SynthLatents)>
where
    F: Fn(usize, usize, f64) -> f64,
{
    config.validate()?;
    let (g, v, dim) = (config.speakers(), config.vocab, config.dimension);
    let mut rng = rng::seeded(config.seed);
    let prototypes = draw(&mut rng, g, dim);
    let anchors = draw(&mut rng, v, dim);
    let queries = draw(&mut rng, v, dim);

    let mut mixing = vec![vec![0.0; v]; g];
    let mut utterances = Vec::with_capacity(g * v * dim);
    for s in 0..g {
        for w in 0..v {
            let d = adjust(
                s,
                w,
                informativeness(config.sharpness, &queries[w], &prototypes[s]),
            );
            mixing[s][w] = d;
            let mut x = mix_utterance(d, &prototypes[s], &anchors[w]);
            for xi in &mut x {
                let e: f64 = rng.sample(StandardNormal);
                *xi += config.utterance_noise * e;
            }
            utterances.extend(x);
        }
    }

    let mut enrollments = Vec::with_capacity(g);
    for z in &prototypes {
        let sentences: Vec<Embedding> = (0..config.enrollment)
            .map(|_| {
                z.iter()
                    .map(|zi| {
                        let e: f64 = rng.sample(StandardNormal);
                        zi + config.enrollment_noise * e
                    })
                    .collect()
            })
            .collect();
        enrollments.push(sentences);
    }
    let voice_prints = enrollments
        .iter()
        .map(|e: &Vec<Embedding>| mean_vector(e.iter().map(Vec::as_slice), dim))
        .collect();

    let corpus = Corpus::from_parts(
        dim,
        (0..v).map(|w| format!("w{w:02}")).collect(),
        (0..g).map(SpeakerId).collect(),
        voice_prints,
        utterances,
        enrollments,
        Split::Full,
    )?;
    let latents = SynthLatents {
        prototypes,
        anchors,
        queries,
        informativeness: mixing,
    };
    Ok((corpus, latents))
}

/// Generates the full corpus and splits it by id: the first
/// `train_speakers` ids train, the remaining `test_speakers` test.
pub fn synthetic_split(config: &SynthConfig) -> Result<(Corpus, Corpus)> {
    if config.train_speakers == 0 || config.test_speakers == 0 {
        return Err(Error::Config(
            "a train/test split needs speakers on both sides".into(),
        ));
    }
    let full = generate_synthetic(config)?;
    let train: Vec<usize> = (0..config.train_speakers).collect();
    let test: Vec<usize> = (config.train_speakers..config.speakers()).collect();
    Ok((
        full.subset(&train, Split::Train)?,
        full.subset(&test, Split::Test)?,
    ))
}
