//! JSON Lines interchange format.
//!
//! ```text
//! {"type":"header","dimension":D,"vocab":["w00",...]}
//! {"type":"utterance","speaker":S,"word":W,"embedding":[...]}
//! {"type":"enrollment","speaker":S,"embedding":[...]}
//! {"type":"voiceprint","speaker":S,"embedding":[...]}
//! ```
//!
//! The header comes first; other records may appear in any order. A speaker
//! without a `voiceprint` record gets the mean of its enrollment records.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{mean_vector, Corpus, Embedding, SpeakerId, Split, WordId};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CorpusRecord {
    Header {
        dimension: usize,
        vocab: Vec<String>,
    },
    Utterance {
        speaker: usize,
        word: usize,
        embedding: Embedding,
    },
    Enrollment {
        speaker: usize,
        embedding: Embedding,
    },
    Voiceprint {
        speaker: usize,
        embedding: Embedding,
    },
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    let mut line = |rec: &CorpusRecord| -> Result<()> {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
        Ok(())
    };
    line(&CorpusRecord::Header {
        dimension: corpus.dimension(),
        vocab: corpus.vocab().to_vec(),
    })?;
    for p in 0..corpus.speaker_count() {
        let speaker = corpus.speaker(p).0;
        for e in corpus.enrollments(p) {
            line(&CorpusRecord::Enrollment {
                speaker,
                embedding: e.clone(),
            })?;
        }
        line(&CorpusRecord::Voiceprint {
            speaker,
            embedding: corpus.voice_print(p).to_vec(),
        })?;
        for w in 0..corpus.vocab_size() {
            line(&CorpusRecord::Utterance {
                speaker,
                word: w,
                embedding: corpus.utterance(p, WordId(w)).to_vec(),
            })?;
        }
    }
    Ok(())
}

#[derive(Default)]
struct SpeakerRows {
    utterances: BTreeMap<usize, Embedding>,
    enrollments: Vec<Embedding>,
    voice_print: Option<Embedding>,
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Corpus> {
    let mut header: Option<(usize, Vec<String>)> = None;
    let mut rows: BTreeMap<usize, SpeakerRows> = BTreeMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("line {lineno}: {e}")))?;
        let Some((dim, vocab)) = &header else {
            match rec {
                CorpusRecord::Header { dimension, vocab } => {
                    header = Some((dimension, vocab));
                    continue;
                }
                _ => return Err(Error::Format("first record must be the header".into())),
            }
        };
        let check = |e: &Embedding| -> Result<()> {
            if e.len() != *dim {
                return Err(Error::Shape(format!(
                    "line {lineno}: embedding has {} entries, header declares {dim}",
                    e.len()
                )));
            }
            Ok(())
        };
        match rec {
            CorpusRecord::Header { .. } => {
                return Err(Error::Format(format!("line {lineno}: second header")))
            }
            CorpusRecord::Utterance {
                speaker,
                word,
                embedding,
            } => {
                check(&embedding)?;
                if word >= vocab.len() {
                    return Err(Error::OutOfRange {
                        what: "word",
                        index: word,
                        len: vocab.len(),
                    });
                }
                let slot = rows.entry(speaker).or_default();
                if slot.utterances.insert(word, embedding).is_some() {
                    return Err(Error::Format(format!(
                        "line {lineno}: duplicate utterance for ({speaker}, {word})"
                    )));
                }
            }
            CorpusRecord::Enrollment { speaker, embedding } => {
                check(&embedding)?;
                rows.entry(speaker).or_default().enrollments.push(embedding);
            }
            CorpusRecord::Voiceprint { speaker, embedding } => {
                check(&embedding)?;
                let slot = rows.entry(speaker).or_default();
                if slot.voice_print.replace(embedding).is_some() {
                    return Err(Error::Format(format!(
                        "line {lineno}: duplicate voice print for speaker {speaker}"
                    )));
                }
            }
        }
    }
    let (dim, vocab) = header.ok_or_else(|| Error::Format("empty corpus file".into()))?;
    let v = vocab.len();

    let missing: Vec<(usize, usize)> = rows
        .iter()
        .flat_map(|(&s, r)| {
            let have: BTreeSet<usize> = r.utterances.keys().copied().collect();
            (0..v)
                .filter(move |w| !have.contains(w))
                .map(move |w| (s, w))
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing));
    }

    let mut speakers = Vec::with_capacity(rows.len());
    let mut prints = Vec::with_capacity(rows.len());
    let mut enrollments = Vec::with_capacity(rows.len());
    let mut utterances = Vec::with_capacity(rows.len() * v * dim);
    for (s, r) in rows {
        let print = match r.voice_print {
            Some(p) => p,
            None if !r.enrollments.is_empty() => {
                mean_vector(r.enrollments.iter().map(Vec::as_slice), dim)
            }
            None => {
                return Err(Error::Format(format!(
                    "speaker {s} has neither a voice print nor enrollment records"
                )))
            }
        };
        speakers.push(SpeakerId(s));
        prints.push(print);
        enrollments.push(r.enrollments);
        for (_, e) in r.utterances {
            utterances.extend(e);
        }
    }
    Corpus::from_parts(
        dim,
        vocab,
        speakers,
        prints,
        utterances,
        enrollments,
        Split::Full,
    )
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = std::fs::File::open(path)?;
    read_corpus(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SynthConfig};

    fn parse(text: &str) -> Result<Corpus> {
        read_corpus(text.as_bytes())
    }

    #[test]
    fn explicit_voice_prints_load_verbatim() {
        let text = r#"{"type":"header","dimension":3,"vocab":["a","b"]}
{"type":"voiceprint","speaker":0,"embedding":[0.1,0.2,0.3]}
{"type":"voiceprint","speaker":1,"embedding":[-1.0,0.0,2.5]}
{"type":"utterance","speaker":0,"word":0,"embedding":[1,2,3]}
{"type":"utterance","speaker":0,"word":1,"embedding":[4,5,6]}
{"type":"utterance","speaker":1,"word":0,"embedding":[7,8,9]}
{"type":"utterance","speaker":1,"word":1,"embedding":[10,11,12]}
"#;
        let c = parse(text).unwrap();
        assert_eq!(c.speaker_count(), 2);
        assert_eq!(c.voice_print(0), &[0.1, 0.2, 0.3]);
        assert_eq!(c.voice_print(1), &[-1.0, 0.0, 2.5]);
        assert_eq!(c.utterance(1, WordId(0)), &[7.0, 8.0, 9.0]);
    }

    #[test]
    fn voice_print_defaults_to_enrollment_mean() {
        let text = r#"{"type":"header","dimension":2,"vocab":["a","b"]}
{"type":"enrollment","speaker":4,"embedding":[1,0]}
{"type":"enrollment","speaker":4,"embedding":[0,1]}
{"type":"utterance","speaker":4,"word":1,"embedding":[0,0]}
{"type":"utterance","speaker":4,"word":0,"embedding":[1,1]}
"#;
        let c = parse(text).unwrap();
        assert_eq!(c.voice_print(0), &[0.5, 0.5]);
        assert_eq!(c.speaker(0), SpeakerId(4));
        assert_eq!(c.utterance(0, WordId(0)), &[1.0, 1.0]);
    }

    #[test]
    fn missing_cell_is_named() {
        let mut text = String::from(r#"{"type":"header","dimension":1,"vocab":["a","b","c","d"]}"#);
        text.push('\n');
        for s in 0..2 {
            text.push_str(&format!(
                "{{\"type\":\"voiceprint\",\"speaker\":{s},\"embedding\":[0]}}\n"
            ));
            for w in 0..4 {
                if (s, w) != (1, 3) {
                    text.push_str(&format!(
                        "{{\"type\":\"utterance\",\"speaker\":{s},\"word\":{w},\"embedding\":[1]}}\n"
                    ));
                }
            }
        }
        match parse(&text) {
            Err(Error::MissingCells(m)) => assert_eq!(m, vec![(1, 3)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let text = r#"{"type":"header","dimension":2,"vocab":["a","b"]}
{"type":"utterance","speaker":0,"word":0,"embedding":[1,2,3]}
"#;
        assert!(matches!(parse(text), Err(Error::Shape(_))));
    }

    #[test]
    fn header_must_come_first() {
        let text = r#"{"type":"enrollment","speaker":0,"embedding":[1]}"#;
        assert!(matches!(parse(text), Err(Error::Format(_))));
    }

    #[test]
    fn write_then_read_is_identity() {
        let cfg = SynthConfig {
            train_speakers: 6,
            test_speakers: 0,
            dimension: 5,
            vocab: 4,
            ..SynthConfig::default()
        };
        let c = generate_synthetic(&cfg).unwrap();
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf).unwrap();
        let back = read_corpus(buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }
}
