use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use isr_core::corpus::{
    generate_synthetic, load_corpus, split_speakers, write_corpus, Corpus, Split, SynthConfig,
    WordId,
};
use isr_core::enquirer::{
    self, evaluate_enquirer, write_word_log, EnquirerModel, EnquirerPolicy, PpoConfig, SampleMode,
};
use isr_core::eval::{
    diversity_games, diversity_index, guest_sweep, heuristic_baseline, word_sweep, HeuristicConfig,
    SweepPolicies, SweepResult,
};
use isr_core::game::{CuratedRandom, FixedWords, GameConfig, UniformRandom, WordPolicy};
use isr_core::guesser::{
    self, evaluate_guesser, Accuracy, CosineNearest, GameRecord, GuesserModel, GuesserSpec,
    GuesserTrainConfig, Scorer,
};

use crate::{
    CorpusArgs, EvalArgs, GameArgs, GenCorpusArgs, HeuristicArgs, PolicyKind, SplitArg, SweepArg,
    TrainEnquirerArgs, TrainGuesserArgs,
};

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn out_dir(dir: &Path) -> Result<&Path> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn finish(w: BufWriter<File>) -> Result<()> {
    w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    Ok(())
}

fn game(a: &GameArgs) -> GameConfig {
    GameConfig::new(a.guests, a.words)
}

pub fn gen_corpus(a: &GenCorpusArgs) -> Result<()> {
    let s = &a.synth;
    let cfg = SynthConfig {
        dimension: s.dimension,
        vocab: s.vocab,
        train_speakers: s.train_speakers,
        test_speakers: s.test_speakers,
        enrollment: s.enrollment,
        sharpness: s.sharpness,
        utterance_noise: s.utterance_noise,
        enrollment_noise: s.enrollment_noise,
        seed: a.seed,
    };
    let corpus = generate_synthetic(&cfg)?;
    let mut w = create(&a.out)?;
    write_corpus(&corpus, &mut w)?;
    finish(w)?;
    write_json(&sidecar(&a.out), &cfg)?;
    println!(
        "wrote {} ({} speakers, V={}, D={})",
        a.out.display(),
        corpus.speaker_count(),
        corpus.vocab_size(),
        corpus.dimension()
    );
    Ok(())
}

#[derive(Serialize)]
struct CorpusInfo {
    source: String,
    content_hash: String,
    train_speakers: usize,
    test_speakers: usize,
}

struct Corpora {
    train: Corpus,
    test: Corpus,
    info: CorpusInfo,
}

impl Corpora {
    fn split(&self, s: SplitArg) -> &Corpus {
        match s {
            SplitArg::Train => &self.train,
            SplitArg::Test => &self.test,
        }
    }
}

fn split_by_id(full: &Corpus, train_speakers: usize) -> Result<(Corpus, Corpus)> {
    let (train, test): (Vec<usize>, Vec<usize>) =
        (0..full.speaker_count()).partition(|&p| full.speaker(p).0 < train_speakers);
    if train.is_empty() || test.is_empty() {
        bail!("the recorded split leaves one side without speakers");
    }
    Ok((
        full.subset(&train, Split::Train)?,
        full.subset(&test, Split::Test)?,
    ))
}

fn load_corpora(a: &CorpusArgs) -> Result<Corpora> {
    let (full, source, recorded) = match &a.corpus {
        None => {
            let cfg = SynthConfig {
                seed: a.corpus_seed,
                ..SynthConfig::default()
            };
            let full = generate_synthetic(&cfg)?;
            (
                full,
                format!("synthetic(seed={})", a.corpus_seed),
                Some(cfg.train_speakers),
            )
        }
        Some(path) => {
            let full =
                load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))?;
            let side = sidecar(path);
            let recorded = if side.exists() {
                let cfg: SynthConfig = serde_json::from_reader(File::open(&side)?)
                    .with_context(|| format!("reading {}", side.display()))?;
                Some(cfg.train_speakers)
            } else {
                None
            };
            (full, path.display().to_string(), recorded)
        }
    };
    let (train, test) = match (a.train_fraction, recorded) {
        (None, Some(n)) => split_by_id(&full, n)?,
        (fraction, _) => split_speakers(&full, fraction.unwrap_or(0.8), a.split_seed)?,
    };
    let info = CorpusInfo {
        source,
        content_hash: full.content_hash()?,
        train_speakers: train.speaker_count(),
        test_speakers: test.speaker_count(),
    };
    Ok(Corpora { train, test, info })
}

fn check_guesser(model: &GuesserModel, corpus: &Corpus, path: &Path) -> Result<()> {
    if model.spec().dimension != corpus.dimension() {
        bail!(
            "incompatible checkpoint {}: guesser width {} but corpus dimension {}",
            path.display(),
            model.spec().dimension,
            corpus.dimension()
        );
    }
    Ok(())
}

fn load_guesser(path: &Path, corpus: &Corpus) -> Result<GuesserModel> {
    let model = GuesserModel::load(path)
        .with_context(|| format!("loading guesser checkpoint {}", path.display()))?;
    check_guesser(&model, corpus, path)?;
    Ok(model)
}

fn load_enquirer(path: &Path, corpus: &Corpus) -> Result<EnquirerModel> {
    let model = EnquirerModel::load(path)
        .with_context(|| format!("loading enquirer checkpoint {}", path.display()))?;
    let s = model.spec();
    if s.dimension != corpus.dimension() || s.vocab != corpus.vocab_size() {
        bail!(
            "incompatible checkpoint {}: enquirer (D={}, V={}) but corpus (D={}, V={})",
            path.display(),
            s.dimension,
            s.vocab,
            corpus.dimension(),
            corpus.vocab_size()
        );
    }
    Ok(model)
}

enum AnyScorer {
    Model(Box<GuesserModel>),
    Cosine,
}

impl AnyScorer {
    fn load(spec: &str, corpus: &Corpus) -> Result<Self> {
        Ok(match spec {
            "cosine" => AnyScorer::Cosine,
            "untrained" => AnyScorer::Model(Box::new(GuesserModel::new(
                GuesserSpec::new(corpus.dimension()),
                0,
            )?)),
            path => AnyScorer::Model(Box::new(load_guesser(Path::new(path), corpus)?)),
        })
    }

    fn scorer(&self) -> &dyn Scorer {
        match self {
            AnyScorer::Model(m) => m.as_ref(),
            AnyScorer::Cosine => &CosineNearest,
        }
    }
}

#[derive(Serialize)]
struct TrainGuesserSummary<'a> {
    command: &'static str,
    args: &'a TrainGuesserArgs,
    corpus: &'a CorpusInfo,
    games_seen: usize,
    final_train_loss: f64,
    final_valid_accuracy: f64,
    wall_time_secs: f64,
}

pub fn train_guesser(a: &TrainGuesserArgs) -> Result<()> {
    let start = Instant::now();
    let corpora = load_corpora(&a.corpus)?;
    let cfg = GuesserTrainConfig {
        game: game(&a.game),
        spec: None,
        games_per_epoch: a.games,
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        clip_norm: a.clip_norm,
        validation_games: a.validation_games,
        seed: a.seed,
    };
    let (model, curve) = guesser::train_guesser(&corpora.train, &corpora.test, &cfg)?;
    let dir = out_dir(&a.out.out_dir)?;
    let ckpt = dir.join("guesser.ckpt.json");
    model
        .save(&ckpt)
        .with_context(|| format!("writing {}", ckpt.display()))?;
    let mut w = create(&dir.join("guesser_curve.csv"))?;
    curve.write_csv(&mut w)?;
    finish(w)?;
    let last = curve.rows.last().context("training produced no epochs")?;
    write_json(
        &dir.join("guesser_summary.json"),
        &TrainGuesserSummary {
            command: "train-guesser",
            args: a,
            corpus: &corpora.info,
            games_seen: last.games_seen,
            final_train_loss: last.train_loss,
            final_valid_accuracy: last.valid_accuracy,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    )?;
    println!(
        "guesser: held-out accuracy {:.4} after {} games -> {}",
        last.valid_accuracy,
        last.games_seen,
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainEnquirerSummary<'a> {
    command: &'static str,
    args: &'a TrainEnquirerArgs,
    corpus: &'a CorpusInfo,
    episodes: usize,
    first_1k_reward: f64,
    last_1k_reward: f64,
    test_accuracy: Option<Accuracy>,
    test_random_accuracy: Option<Accuracy>,
    wall_time_secs: f64,
}

pub fn train_enquirer(a: &TrainEnquirerArgs) -> Result<()> {
    let start = Instant::now();
    let corpora = load_corpora(&a.corpus)?;
    let guesser = load_guesser(&a.guesser, &corpora.train)?;
    let cfg = PpoConfig {
        game: game(&a.game),
        spec: None,
        episodes: a.episodes,
        gamma: a.gamma,
        gae_lambda: a.gae_lambda,
        clip: a.clip,
        entropy_coef: a.entropy_coef,
        value_coef: a.value_coef,
        learning_rate: a.lr,
        grad_clip: a.grad_clip,
        rollout_transitions: a.rollout,
        minibatch_size: a.minibatch,
        minibatches: a.minibatches,
        seed: a.seed,
        ..PpoConfig::default()
    };
    let (model, curve) = enquirer::train_enquirer(&corpora.train, &guesser, &cfg)?;
    let dir = out_dir(&a.out.out_dir)?;
    let ckpt = dir.join("enquirer.ckpt.json");
    model
        .save(&ckpt)
        .with_context(|| format!("writing {}", ckpt.display()))?;
    let mut w = create(&dir.join("enquirer_curve.csv"))?;
    curve.write_csv(&mut w)?;
    finish(w)?;

    let (mut test_accuracy, mut test_random) = (None, None);
    if a.eval_games > 0 {
        let g = game(&a.game);
        let eval = evaluate_enquirer(&model, &guesser, &corpora.test, g, a.eval_games, a.seed)?;
        let mut w = create(&dir.join("enquirer_words.jsonl"))?;
        write_word_log(&eval.records, &corpora.test, &mut w)?;
        finish(w)?;
        test_accuracy = Some(eval.accuracy);
        test_random = Some(evaluate_guesser(
            &guesser,
            &corpora.test,
            g,
            &UniformRandom,
            a.eval_games,
            a.seed,
        )?);
    }
    let n = curve.episode_rewards.len();
    let summary = TrainEnquirerSummary {
        command: "train-enquirer",
        args: a,
        corpus: &corpora.info,
        episodes: n,
        first_1k_reward: curve.mean_reward(0, 1000),
        last_1k_reward: curve.mean_reward(n.saturating_sub(1000), 1000),
        test_accuracy,
        test_random_accuracy: test_random,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("enquirer_summary.json"), &summary)?;
    println!(
        "enquirer: last-1k training reward {:.4}{} -> {}",
        summary.last_1k_reward,
        test_accuracy
            .map(|t| format!(", held-out accuracy {:.4}", t.mean))
            .unwrap_or_default(),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct WordScoreOut {
    word: WordId,
    name: String,
    accuracy: f64,
}

#[derive(Serialize, Deserialize)]
struct HeuristicFile {
    curated: Vec<WordId>,
    curated_words: Vec<String>,
    ranking: Vec<String>,
    scores: Vec<WordScoreOut>,
    train_accuracy: Accuracy,
    test_accuracy: Accuracy,
    test_random_accuracy: Accuracy,
}

#[derive(Serialize)]
struct HeuristicSummary<'a> {
    command: &'static str,
    args: &'a HeuristicArgs,
    corpus: &'a CorpusInfo,
    #[serde(flatten)]
    result: &'a HeuristicFile,
}

fn names(corpus: &Corpus, words: &[WordId]) -> Vec<String> {
    words.iter().map(|w| corpus.vocab()[w.0].clone()).collect()
}

pub fn baseline_heuristic(a: &HeuristicArgs) -> Result<()> {
    let corpora = load_corpora(&a.corpus)?;
    let scorer = AnyScorer::load(&a.guesser, &corpora.train)?;
    let g = game(&a.game);
    let cfg = HeuristicConfig {
        eta: a.eta,
        curated: a.curated,
        eval_games: a.eval_games,
    };
    let h = heuristic_baseline(scorer.scorer(), &corpora.train, g, &cfg, a.seed)?;
    let test_accuracy = evaluate_guesser(
        scorer.scorer(),
        &corpora.test,
        g,
        &h.policy(),
        a.eval_games,
        a.seed,
    )?;
    let test_random = evaluate_guesser(
        scorer.scorer(),
        &corpora.test,
        g,
        &UniformRandom,
        a.eval_games,
        a.seed,
    )?;
    let train = &corpora.train;
    let result = HeuristicFile {
        curated_words: names(train, &h.curated),
        curated: h.curated.clone(),
        ranking: names(train, &h.ranking),
        scores: h
            .scores
            .iter()
            .map(|s| WordScoreOut {
                word: s.word,
                name: train.vocab()[s.word.0].clone(),
                accuracy: s.accuracy,
            })
            .collect(),
        train_accuracy: h.accuracy,
        test_accuracy,
        test_random_accuracy: test_random,
    };
    let path = a.out.out_dir.join("heuristic.json");
    write_json(
        &path,
        &HeuristicSummary {
            command: "baseline-heuristic",
            args: a,
            corpus: &corpora.info,
            result: &result,
        },
    )?;
    println!(
        "heuristic: curated {:?}, held-out accuracy {:.4} (random {:.4}) -> {}",
        result.curated_words,
        test_accuracy.mean,
        test_random.mean,
        path.display()
    );
    Ok(())
}

fn parse_words(corpus: &Corpus, items: &[String]) -> Result<Vec<WordId>> {
    items
        .iter()
        .map(|s| {
            let s = s.trim();
            if let Some(i) = corpus.vocab().iter().position(|w| w == s) {
                return Ok(WordId(i));
            }
            match s.parse::<usize>() {
                Ok(i) if i < corpus.vocab_size() => Ok(WordId(i)),
                _ => bail!("unknown word {s:?}"),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct EvalRow {
    policy: String,
    guests: usize,
    words: usize,
    seed: u64,
    accuracy: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct EvalSummary<'a> {
    command: &'static str,
    args: &'a EvalArgs,
    corpus: &'a CorpusInfo,
    policy: String,
    seeds: &'a [u64],
    mean: f64,
    std: f64,
}

#[derive(Serialize)]
struct SweepSummaryFile<'a> {
    command: &'static str,
    args: &'a EvalArgs,
    corpus: &'a CorpusInfo,
    seeds: &'a [u64],
    summary: Vec<isr_core::eval::SweepSummary>,
}

#[derive(Serialize)]
struct DiversityFile<'a> {
    command: &'static str,
    args: &'a EvalArgs,
    corpus: &'a CorpusInfo,
    policy: String,
    seed: u64,
    games: usize,
    pairs: usize,
    omega: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    if a.seeds.is_empty() {
        bail!("--seeds must list at least one seed");
    }
    let corpora = load_corpora(&a.corpus)?;
    let corpus = corpora.split(a.split);
    let scorer = AnyScorer::load(&a.guesser, corpus)?;
    let g = game(&a.game);
    let enquirer = a
        .enquirer
        .as_deref()
        .map(|p| load_enquirer(p, corpus))
        .transpose()?;

    let wants_heuristic = a.policy == PolicyKind::Heuristic;
    let curated: Option<Vec<WordId>> = match &a.heuristic {
        Some(path) => {
            let f: HeuristicFile = serde_json::from_reader(
                File::open(path).with_context(|| format!("opening {}", path.display()))?,
            )
            .with_context(|| format!("reading heuristic file {}", path.display()))?;
            Some(f.curated)
        }
        None if wants_heuristic => {
            let cfg = HeuristicConfig {
                eta: a.eta,
                curated: a.curated,
                eval_games: a.games,
            };
            let train_scorer = AnyScorer::load(&a.guesser, &corpora.train)?;
            let h = heuristic_baseline(train_scorer.scorer(), &corpora.train, g, &cfg, a.seeds[0])?;
            Some(h.curated)
        }
        None => None,
    };

    let policy: Box<dyn WordPolicy + '_> = match a.policy {
        PolicyKind::Random => Box::new(UniformRandom),
        PolicyKind::Heuristic => Box::new(CuratedRandom(curated.clone().expect("built above"))),
        PolicyKind::Enquirer => Box::new(EnquirerPolicy {
            model: enquirer
                .as_ref()
                .context("--policy enquirer needs --enquirer")?,
            mode: SampleMode::Greedy,
        }),
        PolicyKind::Fixed => {
            let words = parse_words(corpus, &a.fixed_words)?;
            if words.len() < g.words {
                bail!(
                    "--fixed-words lists {} words but games request {}",
                    words.len(),
                    g.words
                );
            }
            Box::new(FixedWords(words))
        }
    };
    let dir = out_dir(&a.out.out_dir)?;

    match a.sweep {
        None => {
            let mut w = csv::Writer::from_writer(create(&dir.join("eval.csv"))?);
            let mut acc = Vec::new();
            for &seed in &a.seeds {
                let r =
                    evaluate_guesser(scorer.scorer(), corpus, g, policy.as_ref(), a.games, seed)?;
                w.serialize(EvalRow {
                    policy: policy.name(),
                    guests: g.guests,
                    words: g.words,
                    seed,
                    accuracy: r.mean,
                    stderr: r.stderr,
                })?;
                acc.push(r.mean);
            }
            w.flush()?;
            let (mean, std) = mean_std(&acc);
            write_json(
                &dir.join("eval_summary.json"),
                &EvalSummary {
                    command: "eval",
                    args: a,
                    corpus: &corpora.info,
                    policy: policy.name(),
                    seeds: &a.seeds,
                    mean,
                    std,
                },
            )?;
            println!(
                "{}: accuracy {mean:.4} ± {std:.4} over {} seeds",
                policy.name(),
                a.seeds.len()
            );
        }
        Some(kind) => {
            if a.grid.is_empty() {
                bail!("--sweep needs --grid");
            }
            let (result, stem): (SweepResult, &str) = match kind {
                SweepArg::Words => {
                    let policies = SweepPolicies {
                        random: true,
                        heuristic: curated.clone(),
                        enquirer: enquirer.as_ref(),
                    };
                    let r = word_sweep(
                        scorer.scorer(),
                        &policies,
                        corpus,
                        &a.grid,
                        g.guests,
                        &a.seeds,
                        a.games,
                    )?;
                    (r, "sweep_words")
                }
                SweepArg::Guests => {
                    let r =
                        guest_sweep(scorer.scorer(), corpus, &a.grid, g.words, &a.seeds, a.games)?;
                    (r, "sweep_guests")
                }
            };
            let mut w = create(&dir.join(format!("{stem}.csv")))?;
            result.write_csv(&mut w)?;
            finish(w)?;
            let summary = result.summary();
            for s in &summary {
                println!(
                    "{:?} {:>3} {:<10} {:.4} ± {:.4}",
                    s.sweep, s.value, s.policy, s.mean, s.std
                );
            }
            write_json(
                &dir.join(format!("{stem}_summary.json")),
                &SweepSummaryFile {
                    command: "eval",
                    args: a,
                    corpus: &corpora.info,
                    seeds: &a.seeds,
                    summary,
                },
            )?;
        }
    }

    if a.diversity {
        let seed = a.seeds[0];
        let tuples = diversity_games(corpus, g, policy.as_ref(), seed)?;
        let report = diversity_index(&tuples)?;
        let records: Vec<GameRecord> = tuples
            .iter()
            .enumerate()
            .map(|(i, t)| GameRecord {
                words: t.clone(),
                target: corpus.speaker(i).0,
                success: false,
            })
            .collect();
        let mut w = create(&dir.join("diversity_words.jsonl"))?;
        write_diversity_log(&records, corpus, &mut w)?;
        finish(w)?;
        write_json(
            &dir.join("diversity.json"),
            &DiversityFile {
                command: "eval",
                args: a,
                corpus: &corpora.info,
                policy: policy.name(),
                seed,
                games: report.games,
                pairs: report.pairwise.len(),
                omega: report.omega,
            },
        )?;
        println!(
            "{}: diversity {:.4} over {} games",
            policy.name(),
            report.omega,
            report.games
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct DiversityLine<'a> {
    game: usize,
    target: usize,
    words: Vec<&'a str>,
}

fn write_diversity_log<W: Write>(
    records: &[GameRecord],
    corpus: &Corpus,
    mut out: W,
) -> Result<()> {
    for (i, r) in records.iter().enumerate() {
        let line = DiversityLine {
            game: i,
            target: r.target,
            words: r
                .words
                .iter()
                .map(|w| corpus.vocab()[w.0].as_str())
                .collect(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
