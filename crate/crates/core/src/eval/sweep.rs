use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, WordId};
use crate::enquirer::{EnquirerModel, EnquirerPolicy, SampleMode};
use crate::game::{CuratedRandom, GameConfig, UniformRandom, WordPolicy};
use crate::guesser::{evaluate_guesser, Scorer};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Words,
    Guests,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep: SweepKind,
    pub value: usize,
    pub seed: u64,
    pub policy: String,
    pub accuracy: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub sweep: SweepKind,
    pub value: usize,
    pub policy: String,
    pub seeds: usize,
    pub mean: f64,
    /// Sample standard deviation across seeds (0 for a single seed).
    pub std: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> Vec<SweepSummary> {
        summarize(&self.rows)
    }

    /// Rows for one policy at one grid value.
    pub fn cell(&self, policy: &str, value: usize) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.policy == policy && r.value == value)
            .collect()
    }
}

/// Mean and spread per (sweep, value, policy), in first-appearance order.
pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut keys: Vec<(SweepKind, usize, &str)> = Vec::new();
    for r in rows {
        let k = (r.sweep, r.value, r.policy.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(sweep, value, policy)| {
            let acc: Vec<f64> = rows
                .iter()
                .filter(|r| r.sweep == sweep && r.value == value && r.policy == policy)
                .map(|r| r.accuracy)
                .collect();
            let n = acc.len() as f64;
            let mean = acc.iter().sum::<f64>() / n;
            let std = if acc.len() > 1 {
                (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            SweepSummary {
                sweep,
                value,
                policy: policy.to_string(),
                seeds: acc.len(),
                mean,
                std,
            }
        })
        .collect()
}

/// Word policies compared in a word sweep.
#[derive(Clone, Debug, Default)]
pub struct SweepPolicies<'a> {
    pub random: bool,
    pub heuristic: Option<Vec<WordId>>,
    pub enquirer: Option<&'a EnquirerModel>,
}

impl SweepPolicies<'_> {
    fn list(&self) -> Vec<Box<dyn WordPolicy + '_>> {
        let mut out: Vec<Box<dyn WordPolicy + '_>> = Vec::new();
        if self.random {
            out.push(Box::new(UniformRandom));
        }
        if let Some(c) = &self.heuristic {
            out.push(Box::new(CuratedRandom(c.clone())));
        }
        if let Some(model) = self.enquirer {
            out.push(Box::new(EnquirerPolicy {
                model,
                mode: SampleMode::Greedy,
            }));
        }
        out
    }
}

fn sweep(
    kind: SweepKind,
    scorer: &dyn Scorer,
    policies: &[Box<dyn WordPolicy + '_>],
    corpus: &Corpus,
    configs: &[(usize, GameConfig)],
    seeds: &[u64],
    games: usize,
) -> Result<SweepResult> {
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    for (_, g) in configs {
        g.validate(corpus)?;
    }
    let mut rows = Vec::new();
    for &(value, game) in configs {
        for policy in policies {
            for &seed in seeds {
                let acc = evaluate_guesser(scorer, corpus, game, policy.as_ref(), games, seed)?;
                rows.push(SweepRow {
                    sweep: kind,
                    value,
                    seed,
                    policy: policy.name(),
                    accuracy: acc.mean,
                    stderr: acc.stderr,
                });
            }
        }
    }
    Ok(SweepResult { rows })
}

/// Accuracy per word budget `T` at fixed `K`, for every selected policy.
pub fn word_sweep(
    scorer: &dyn Scorer,
    policies: &SweepPolicies<'_>,
    corpus: &Corpus,
    grid: &[usize],
    guests: usize,
    seeds: &[u64],
    games: usize,
) -> Result<SweepResult> {
    let configs: Vec<_> = grid
        .iter()
        .map(|&t| (t, GameConfig::new(guests, t)))
        .collect();
    sweep(
        SweepKind::Words,
        scorer,
        &policies.list(),
        corpus,
        &configs,
        seeds,
        games,
    )
}

/// Accuracy per guest count `K` at fixed `T` with uniformly random words.
pub fn guest_sweep(
    scorer: &dyn Scorer,
    corpus: &Corpus,
    grid: &[usize],
    words: usize,
    seeds: &[u64],
    games: usize,
) -> Result<SweepResult> {
    let configs: Vec<_> = grid
        .iter()
        .map(|&k| (k, GameConfig::new(k, words)))
        .collect();
    let policies: Vec<Box<dyn WordPolicy>> = vec![Box::new(UniformRandom)];
    sweep(
        SweepKind::Guests,
        scorer,
        &policies,
        corpus,
        &configs,
        seeds,
        games,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthConfig};
    use crate::guesser::{CosineNearest, GuesserModel, GuesserSpec};

    fn corpus() -> Corpus {
        generate_synthetic(&SynthConfig {
            dimension: 8,
            vocab: 6,
            train_speakers: 20,
            test_speakers: 0,
            enrollment: 3,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn word_sweep_shape() {
        let c = corpus();
        let p = SweepPolicies {
            random: true,
            heuristic: Some(vec![WordId(0), WordId(1), WordId(2)]),
            enquirer: None,
        };
        let r = word_sweep(&CosineNearest, &p, &c, &[1, 3, 6], 5, &[0, 1], 50).unwrap();
        assert_eq!(r.rows.len(), 3 * 2 * 2);
        let s = r.summary();
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|x| x.seeds == 2));
    }

    #[test]
    fn full_vocabulary_makes_policies_agree() {
        let c = corpus();
        let p = SweepPolicies {
            random: true,
            heuristic: Some(vec![WordId(4), WordId(5)]),
            enquirer: None,
        };
        let r = word_sweep(&CosineNearest, &p, &c, &[6], 5, &[2], 300).unwrap();
        assert_eq!(r.rows[0].accuracy, r.rows[1].accuracy);
    }

    #[test]
    fn single_guest_is_always_right() {
        let c = corpus();
        let r = guest_sweep(&CosineNearest, &c, &[1], 3, &[0], 100).unwrap();
        assert_eq!(r.rows[0].accuracy, 1.0);
    }

    #[test]
    fn untrained_model_sits_at_one_over_k() {
        let c = generate_synthetic(&SynthConfig {
            dimension: 8,
            train_speakers: 400,
            test_speakers: 0,
            enrollment: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let g = GuesserModel::new(GuesserSpec::new(8), 0).unwrap();
        let r = guest_sweep(&g, &c, &[2, 5, 10], 3, &[0], 4000).unwrap();
        for row in &r.rows {
            let p = 1.0 / row.value as f64;
            let sigma = (p * (1.0 - p) / 4000.0).sqrt();
            assert!((row.accuracy - p).abs() < 4.0 * sigma, "{row:?}");
        }
    }

    #[test]
    fn oversized_grid_is_rejected() {
        let c = corpus();
        assert!(guest_sweep(&CosineNearest, &c, &[5, 21], 3, &[0], 10).is_err());
        assert!(guest_sweep(&CosineNearest, &c, &[5], 3, &[], 10).is_err());
    }

    #[test]
    fn rows_are_reproducible() {
        let c = corpus();
        let run = || guest_sweep(&CosineNearest, &c, &[3, 5], 2, &[7], 200).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn summary_statistics() {
        let row = |seed, accuracy| SweepRow {
            sweep: SweepKind::Words,
            value: 3,
            seed,
            policy: "random".into(),
            accuracy,
            stderr: 0.0,
        };
        let s = summarize(&[row(0, 0.5), row(1, 0.7)]);
        assert!((s[0].mean - 0.6).abs() < 1e-12);
        assert!((s[0].std - 0.02f64.sqrt()).abs() < 1e-12);
    }
}
