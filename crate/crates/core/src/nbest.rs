//! N-best list ingestion and conversion of decoder scores to posteriors.
//!
//! Wire format, one hypothesis per line:
//!
//! ```text
//! utt-id<TAB>rank<TAB>acoustic<TAB>lm<TAB>word word ...
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::align::WordSequence;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NbestError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("no utterances")]
    Empty,
    #[error("N-best list for {0:?} has no hypotheses")]
    EmptyList(String),
    #[error("invalid scales: lm scale {lm_scale} must be finite and >= 0, posterior scale {posterior_scale} finite and > 0")]
    InvalidScales { lm_scale: f64, posterior_scale: f64 },
    #[error("non-finite score in N-best list for {0:?}")]
    NonFiniteScore(String),
    #[error("invalid posterior: {0}")]
    InvalidPosterior(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub words: WordSequence,
    pub acoustic_score: f64,
    pub lm_score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NBestList {
    pub utterance_id: String,
    pub hypotheses: Vec<Hypothesis>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemOutput {
    pub system_id: String,
    pub lists: BTreeMap<String, NBestList>,
}

impl SystemOutput {
    /// First-ranked hypothesis of every utterance.
    pub fn one_best(&self) -> crate::align::Transcript {
        self.lists
            .iter()
            .filter_map(|(id, l)| l.hypotheses.first().map(|h| (id.clone(), h.words.clone())))
            .collect()
    }
}

fn field_error(line: usize, raw: &str, field: usize, message: String) -> NbestError {
    let column = raw
        .split('\t')
        .take(field)
        .map(|f| f.chars().count() + 1)
        .sum::<usize>()
        + 1;
    NbestError::Parse {
        line,
        column,
        message,
    }
}

pub fn parse_nbest(content: &str, system_id: &str) -> Result<SystemOutput, NbestError> {
    let mut lists: BTreeMap<String, NBestList> = BTreeMap::new();
    let mut ranks: HashSet<(String, u64)> = HashSet::new();

    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 5 {
            return Err(NbestError::Parse {
                line,
                column: 1,
                message: format!("expected 5 tab-separated fields, found {}", fields.len()),
            });
        }
        let id = fields[0];
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(field_error(line, raw, 0, format!("invalid utterance id {id:?}")));
        }
        let rank: u64 = fields[1]
            .trim()
            .parse()
            .ok()
            .filter(|&r| r > 0)
            .ok_or_else(|| {
                field_error(line, raw, 1, format!("rank {:?} is not a positive integer", fields[1]))
            })?;
        let score = |field: usize| -> Result<f64, NbestError> {
            fields[field]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|s| s.is_finite())
                .ok_or_else(|| {
                    field_error(line, raw, field, format!("score {:?} is not a finite number", fields[field]))
                })
        };
        let acoustic_score = score(2)?;
        let lm_score = score(3)?;
        if !ranks.insert((id.to_owned(), rank)) {
            return Err(field_error(line, raw, 1, format!("duplicate rank {rank} for {id:?}")));
        }
        lists
            .entry(id.to_owned())
            .or_insert_with(|| NBestList {
                utterance_id: id.to_owned(),
                hypotheses: Vec::new(),
            })
            .hypotheses
            .push(Hypothesis {
                words: WordSequence::from_text(fields[4]),
                acoustic_score,
                lm_score,
            });
    }

    if lists.is_empty() {
        return Err(NbestError::Empty);
    }
    Ok(SystemOutput {
        system_id: system_id.to_owned(),
        lists,
    })
}

/// Renders in wire format with ranks assigned by list position.
pub fn render_nbest(system: &SystemOutput) -> String {
    let mut out = String::new();
    for (id, list) in &system.lists {
        for (i, h) in list.hypotheses.iter().enumerate() {
            out.push_str(&format!(
                "{id}\t{}\t{}\t{}\t{}\n",
                i + 1,
                h.acoustic_score,
                h.lm_score,
                h.words
            ));
        }
    }
    out
}

/// LM weight and posterior scale (inverse temperature).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorScales {
    pub lm_scale: f64,
    pub posterior_scale: f64,
}

impl Default for PosteriorScales {
    fn default() -> Self {
        PosteriorScales {
            lm_scale: 1.0,
            posterior_scale: 1.0,
        }
    }
}

impl PosteriorScales {
    pub fn validate(&self) -> Result<(), NbestError> {
        let ok = self.lm_scale.is_finite()
            && self.lm_scale >= 0.0
            && self.posterior_scale.is_finite()
            && self.posterior_scale > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NbestError::InvalidScales {
                lm_scale: self.lm_scale,
                posterior_scale: self.posterior_scale,
            })
        }
    }
}

/// Normalized distribution over distinct word sequences.
///
/// Entries are kept in canonical order: descending probability, ties broken
/// by word-sequence order.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorDistribution {
    utterance_id: String,
    entries: Vec<(WordSequence, f64)>,
}

impl PosteriorDistribution {
    /// Builds a distribution from non-negative masses, merging duplicate
    /// sequences by summing and renormalizing.
    pub fn from_masses<I>(utterance_id: &str, masses: I) -> Result<Self, NbestError>
    where
        I: IntoIterator<Item = (WordSequence, f64)>,
    {
        let mut merged: Vec<(WordSequence, f64)> = Vec::new();
        let mut index: HashMap<WordSequence, usize> = HashMap::new();
        for (w, p) in masses {
            if !(p.is_finite() && p >= 0.0) {
                return Err(NbestError::InvalidPosterior(format!("mass {p} for {w:?}")));
            }
            match index.get(&w) {
                Some(&i) => merged[i].1 += p,
                None => {
                    index.insert(w.clone(), merged.len());
                    merged.push((w, p));
                }
            }
        }
        let total: f64 = merged.iter().map(|(_, p)| p).sum();
        if !(total > 0.0) {
            return Err(NbestError::InvalidPosterior("total mass is zero".into()));
        }
        for e in &mut merged {
            e.1 /= total;
        }
        Ok(Self::canonical(utterance_id, merged))
    }

    fn canonical(utterance_id: &str, mut entries: Vec<(WordSequence, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        PosteriorDistribution {
            utterance_id: utterance_id.to_owned(),
            entries,
        }
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    pub fn entries(&self) -> &[(WordSequence, f64)] {
        &self.entries
    }

    pub fn probability(&self, words: &WordSequence) -> f64 {
        self.entries
            .iter()
            .find(|(w, _)| w == words)
            .map_or(0.0, |(_, p)| *p)
    }

    /// Highest-posterior sequence.
    pub fn best(&self) -> &WordSequence {
        &self.entries[0].0
    }
}

/// Turns decoder scores into a posterior over distinct word sequences.
///
/// Each hypothesis gets `posterior_scale * (acoustic + lm_scale * lm)`;
/// duplicates are merged by log-sum-exp before a max-shifted softmax.
pub fn compute_posteriors(
    list: &NBestList,
    scales: PosteriorScales,
) -> Result<PosteriorDistribution, NbestError> {
    scales.validate()?;
    if list.hypotheses.is_empty() {
        return Err(NbestError::EmptyList(list.utterance_id.clone()));
    }

    let mut merged: Vec<(WordSequence, Vec<f64>)> = Vec::new();
    let mut index: HashMap<&WordSequence, usize> = HashMap::new();
    for h in &list.hypotheses {
        let s = scales.posterior_scale * (h.acoustic_score + scales.lm_scale * h.lm_score);
        if !s.is_finite() {
            return Err(NbestError::NonFiniteScore(list.utterance_id.clone()));
        }
        match index.get(&h.words) {
            Some(&i) => merged[i].1.push(s),
            None => {
                index.insert(&h.words, merged.len());
                merged.push((h.words.clone(), vec![s]));
            }
        }
    }

    let combined: Vec<f64> = merged.iter().map(|(_, s)| log_sum_exp(s)).collect();
    let max = combined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = combined.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let entries = merged
        .into_iter()
        .zip(exps)
        .map(|((w, _), e)| (w, e / total))
        .collect();
    Ok(PosteriorDistribution::canonical(&list.utterance_id, entries))
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
