//! Ensemble diagnostics: cross word error rate, WER spread across systems,
//! synthetic ensembles for testing, and receptive-field arithmetic for
//! spliced and recurrent layer stacks.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::align::{edit_distance, score_wer, AlignError, Transcript, WordSequence};
use crate::nbest::{Hypothesis, NBestList, SystemOutput};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiversityError {
    #[error("need at least {needed} systems, got {got}")]
    TooFewSystems { needed: usize, got: usize },
    #[error("system {system} covers different utterances than system 0")]
    UtteranceMismatch { system: usize },
    #[error("system {0} has zero total hypothesis length")]
    ZeroLength(usize),
    #[error("target WER {0} outside [0, 50]")]
    TargetWer(f64),
    #[error("reference set is empty")]
    EmptyReferences,
    #[error("no layers")]
    NoLayers,
    #[error("layer {0}: spliced offsets must include 0")]
    MissingZeroOffset(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Align(#[from] AlignError),
}

/// Cross word error rate in percent.
///
/// Averages, over all ordered pairs `(m, n)` with `m != n`, the summed
/// distance between the systems' outputs normalized by the total length of
/// system `n`'s outputs.
pub fn cross_wer(systems: &[Transcript]) -> Result<f64, DiversityError> {
    if systems.len() < 2 {
        return Err(DiversityError::TooFewSystems {
            needed: 2,
            got: systems.len(),
        });
    }
    for (i, s) in systems.iter().enumerate().skip(1) {
        if !s.keys().eq(systems[0].keys()) {
            return Err(DiversityError::UtteranceMismatch { system: i });
        }
    }
    let lengths: Vec<usize> = systems
        .iter()
        .map(|s| s.values().map(WordSequence::len).sum())
        .collect();
    if let Some(n) = lengths.iter().position(|&l| l == 0) {
        return Err(DiversityError::ZeroLength(n));
    }

    let m = systems.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|a| (0..m).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let terms: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let dist: usize = systems[a]
                .values()
                .zip(systems[b].values())
                .map(|(x, y)| edit_distance(x.words(), y.words()))
                .sum();
            dist as f64 / lengths[b] as f64
        })
        .collect();
    let total: f64 = terms.iter().sum();
    Ok(100.0 * total / (m * (m - 1)) as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Deviation {
    #[default]
    Population,
    Sample,
}

impl FromStr for Deviation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "population" => Ok(Deviation::Population),
            "sample" => Ok(Deviation::Sample),
            _ => Err(format!("unknown deviation {s:?} (expected population or sample)")),
        }
    }
}

pub fn mean_and_deviation(values: &[f64], kind: Deviation) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let denom = match kind {
        Deviation::Population => n,
        Deviation::Sample => n - 1.0,
    };
    (mean, (ss / denom).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub wers: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
    pub cwer: f64,
}

impl fmt::Display for EnsembleStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.wers.iter().enumerate() {
            writeln!(f, "system{}\t{:.2}", i + 1, w)?;
        }
        writeln!(f, "mean\t{:.2}", self.mean)?;
        writeln!(f, "std\t{:.2}", self.std_dev)?;
        writeln!(f, "cwer\t{:.2}", self.cwer)
    }
}

pub fn ensemble_stats(
    systems: &[Transcript],
    refs: &Transcript,
    deviation: Deviation,
) -> Result<EnsembleStats, DiversityError> {
    if systems.len() < 2 {
        return Err(DiversityError::TooFewSystems {
            needed: 2,
            got: systems.len(),
        });
    }
    let wers = systems
        .iter()
        .map(|s| score_wer(s, refs, false).map(|r| r.wer()))
        .collect::<Result<Vec<_>, _>>()?;
    let (mean, std_dev) = mean_and_deviation(&wers, deviation);
    let cwer = cross_wer(systems)?;
    Ok(EnsembleStats {
        wers,
        mean,
        std_dev,
        cwer,
    })
}

fn stream_seed(seed: u64, system: usize, utterance: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((system as u64).to_le_bytes());
    h.update(utterance.as_bytes());
    h.finalize().into()
}

/// Simulates `num_systems` independent recognizers by corrupting references.
///
/// Each reference word is corrupted with probability `target_wer / 100`:
/// substituted (60%), deleted (20%) or followed by an inserted word (20%),
/// replacement words drawn from the reference vocabulary. Every
/// `(seed, system, utterance)` triple has its own random stream.
pub fn synth_ensemble(
    refs: &Transcript,
    num_systems: usize,
    target_wer: f64,
    seed: u64,
) -> Result<Vec<SystemOutput>, DiversityError> {
    if !(0.0..=50.0).contains(&target_wer) {
        return Err(DiversityError::TargetWer(target_wer));
    }
    if num_systems == 0 {
        return Err(DiversityError::TooFewSystems { needed: 1, got: 0 });
    }
    if refs.is_empty() {
        return Err(DiversityError::EmptyReferences);
    }
    let vocab: Vec<&String> = refs
        .values()
        .flat_map(|w| w.words())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let p = target_wer / 100.0;

    let systems = (0..num_systems)
        .map(|sys| {
            let lists = refs
                .iter()
                .map(|(id, reference)| {
                    let mut rng = ChaCha8Rng::from_seed(stream_seed(seed, sys, id));
                    let words = corrupt(reference, &vocab, p, &mut rng);
                    let list = NBestList {
                        utterance_id: id.clone(),
                        hypotheses: vec![Hypothesis {
                            words,
                            acoustic_score: 0.0,
                            lm_score: 0.0,
                        }],
                    };
                    (id.clone(), list)
                })
                .collect();
            SystemOutput {
                system_id: format!("sys{}", sys + 1),
                lists,
            }
        })
        .collect();
    Ok(systems)
}

fn corrupt(reference: &WordSequence, vocab: &[&String], p: f64, rng: &mut impl Rng) -> WordSequence {
    let mut out: Vec<String> = Vec::with_capacity(reference.len() + 2);
    for word in reference.words() {
        if p == 0.0 || !rng.gen_bool(p) {
            out.push(word.clone());
            continue;
        }
        let kind: f64 = rng.gen();
        if kind < 0.6 {
            let others: Vec<&&String> = vocab.iter().filter(|v| **v != word).collect();
            if let Some(&&w) = others.get(rng.gen_range(0..others.len().max(1))) {
                out.push(w.clone());
            }
        } else if kind < 0.8 {
            // deletion
        } else {
            out.push(word.clone());
            out.push(vocab[rng.gen_range(0..vocab.len())].clone());
        }
    }
    WordSequence::new(out).expect("vocabulary tokens are valid")
}

/// Temporal context of one layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LayerContext {
    /// Frame offsets spliced together at the layer input; must contain 0.
    Spliced(Vec<i64>),
    /// Recurrent layer with configured look-back and look-ahead.
    Recurrent { past: u64, future: u64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReceptiveField {
    pub left: u64,
    pub right: u64,
}

impl std::ops::Add for ReceptiveField {
    type Output = ReceptiveField;

    fn add(self, rhs: Self) -> Self {
        ReceptiveField {
            left: self.left + rhs.left,
            right: self.right + rhs.right,
        }
    }
}

pub fn receptive_field(layers: &[LayerContext]) -> Result<ReceptiveField, DiversityError> {
    if layers.is_empty() {
        return Err(DiversityError::NoLayers);
    }
    layers
        .iter()
        .enumerate()
        .try_fold(ReceptiveField::default(), |acc, (i, layer)| {
            let contribution = match layer {
                LayerContext::Spliced(offsets) => {
                    if !offsets.contains(&0) {
                        return Err(DiversityError::MissingZeroOffset(i));
                    }
                    let min = *offsets.iter().min().expect("non-empty");
                    let max = *offsets.iter().max().expect("non-empty");
                    ReceptiveField {
                        left: min.unsigned_abs(),
                        right: max as u64,
                    }
                }
                LayerContext::Recurrent { past, future } => ReceptiveField {
                    left: *past,
                    right: *future,
                },
            };
            Ok(acc + contribution)
        })
}

/// Parses `splice o1,o2,...` and `recur past,future` lines. `#` starts a
/// comment.
pub fn parse_layers(content: &str) -> Result<Vec<LayerContext>, DiversityError> {
    let mut layers = Vec::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let err = |message: String| DiversityError::Parse { line, message };
        let (kind, args) = text
            .split_once(char::is_whitespace)
            .ok_or_else(|| err(format!("expected \"splice ...\" or \"recur ...\", got {text:?}")))?;
        let nums: Vec<&str> = args.split(',').map(str::trim).collect();
        match kind {
            "splice" => {
                let offsets = nums
                    .iter()
                    .map(|n| n.parse::<i64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| err(format!("bad offset: {e}")))?;
                if !offsets.contains(&0) {
                    return Err(err("spliced offsets must include 0".into()));
                }
                layers.push(LayerContext::Spliced(offsets));
            }
            "recur" => {
                let [past, future] = nums[..] else {
                    return Err(err("recur takes past,future".into()));
                };
                let parse = |s: &str| s.parse::<u64>().map_err(|e| err(format!("bad horizon {s:?}: {e}")));
                layers.push(LayerContext::Recurrent {
                    past: parse(past)?,
                    future: parse(future)?,
                });
            }
            other => return Err(err(format!("unknown layer kind {other:?}"))),
        }
    }
    Ok(layers)
}
