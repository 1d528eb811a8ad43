//! Minimum Bayes risk decoding and multi-system combination over N-best
//! posteriors, with Levenshtein distance as the loss.
//!
//! The combined risk of a candidate `W` is
//! `sum_m lambda_m * sum_{W' in H_m} P_m(W') * L(W, W')`, accumulated over
//! systems in the given order and over each system's hypotheses in canonical
//! posterior order. The candidate space is the union of all supports.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::align::{edit_distance, Transcript, WordSequence};
use crate::nbest::{compute_posteriors, NbestError, PosteriorDistribution, PosteriorScales, SystemOutput};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MbrError {
    #[error("candidate set is empty")]
    NoCandidates,
    #[error("no systems to combine")]
    NoSystems,
    #[error("posteriors refer to different utterances: {0:?} and {1:?}")]
    UtteranceMismatch(String, String),
    #[error("{systems} systems but {weights} combination weights")]
    WeightCount { systems: usize, weights: usize },
    #[error("invalid combination weights: {0}")]
    InvalidWeights(String),
    #[error("systems cover different utterances; not in every system: [{}]", .0.join(", "))]
    CoverageMismatch(Vec<String>),
    #[error("systems share no utterances")]
    NoCommonUtterances,
    #[error(transparent)]
    Posterior(#[from] NbestError),
}

/// Non-negative system weights, normalized to sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinationWeights(Vec<f64>);

impl CombinationWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self, MbrError> {
        if weights.is_empty() {
            return Err(MbrError::InvalidWeights("no weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(MbrError::InvalidWeights(format!("weight {w} is negative or non-finite")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(MbrError::InvalidWeights("weights sum to zero".into()));
        }
        Ok(CombinationWeights(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(systems: usize) -> Result<Self, MbrError> {
        Self::new(vec![1.0; systems])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MbrResult {
    pub utterance_id: String,
    pub chosen: WordSequence,
    pub risk: f64,
    /// Every candidate with its expected loss, in candidate enumeration order.
    pub candidate_risks: Vec<(WordSequence, f64)>,
}

/// Single-system MBR. `candidates` defaults to the posterior's support.
pub fn mbr_decode(
    posterior: &PosteriorDistribution,
    candidates: Option<&[WordSequence]>,
) -> Result<MbrResult, MbrError> {
    let weights = CombinationWeights(vec![1.0]);
    let candidates = match candidates {
        Some(c) => dedup_in_order(c.iter()),
        None => posterior.entries().iter().map(|(w, _)| w.clone()).collect(),
    };
    select(posterior.utterance_id(), &[posterior], &weights, candidates)
}

/// Multi-system MBR combination for one utterance.
pub fn mbr_combine(
    systems: &[&PosteriorDistribution],
    lambdas: &CombinationWeights,
) -> Result<MbrResult, MbrError> {
    let first = systems.first().ok_or(MbrError::NoSystems)?;
    if lambdas.len() != systems.len() {
        return Err(MbrError::WeightCount {
            systems: systems.len(),
            weights: lambdas.len(),
        });
    }
    if let Some(other) = systems.iter().find(|p| p.utterance_id() != first.utterance_id()) {
        return Err(MbrError::UtteranceMismatch(
            first.utterance_id().to_owned(),
            other.utterance_id().to_owned(),
        ));
    }
    let candidates = dedup_in_order(systems.iter().flat_map(|p| p.entries().iter().map(|(w, _)| w)));
    select(first.utterance_id(), systems, lambdas, candidates)
}

fn dedup_in_order<'a>(words: impl Iterator<Item = &'a WordSequence>) -> Vec<WordSequence> {
    let mut seen = BTreeSet::new();
    words.filter(|w| seen.insert(*w)).cloned().collect()
}

fn select(
    utterance_id: &str,
    systems: &[&PosteriorDistribution],
    lambdas: &CombinationWeights,
    candidates: Vec<WordSequence>,
) -> Result<MbrResult, MbrError> {
    if candidates.is_empty() {
        return Err(MbrError::NoCandidates);
    }

    let mut distances: HashMap<(&WordSequence, &WordSequence), usize> = HashMap::new();
    let mut scored: Vec<(WordSequence, f64, f64)> = Vec::with_capacity(candidates.len());
    for cand in &candidates {
        let mut risk = 0.0;
        let mut mass = 0.0;
        for (system, &lambda) in systems.iter().zip(lambdas.as_slice()) {
            let mut expected = 0.0;
            for (hyp, p) in system.entries() {
                let d = *distances
                    .entry((cand, hyp))
                    .or_insert_with(|| edit_distance(cand.words(), hyp.words()));
                expected += p * d as f64;
                if hyp == cand {
                    mass += lambda * p;
                }
            }
            risk += lambda * expected;
        }
        scored.push((cand.clone(), risk, mass));
    }

    let best = scored
        .iter()
        .min_by(|a, b| compare_candidates(a, b))
        .expect("non-empty");
    Ok(MbrResult {
        utterance_id: utterance_id.to_owned(),
        chosen: best.0.clone(),
        risk: best.1,
        candidate_risks: scored.iter().map(|(w, r, _)| (w.clone(), *r)).collect(),
    })
}

/// Lower risk first, then higher weighted posterior mass, then word order.
fn compare_candidates(a: &(WordSequence, f64, f64), b: &(WordSequence, f64, f64)) -> Ordering {
    a.1.total_cmp(&b.1)
        .then_with(|| b.2.total_cmp(&a.2))
        .then_with(|| a.0.cmp(&b.0))
}

/// How to treat systems that cover different utterance sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Coverage {
    /// Every system must cover exactly the same utterances.
    #[default]
    Strict,
    /// Combine only utterances present in every system.
    Intersect,
}

/// Posterior computation and MBR combination for every utterance.
///
/// Utterances are processed in parallel; results are keyed by id so the
/// output is independent of scheduling.
pub fn combine_corpus(
    systems: &[SystemOutput],
    lambdas: &CombinationWeights,
    scales: PosteriorScales,
    coverage: Coverage,
) -> Result<BTreeMap<String, MbrResult>, MbrError> {
    if systems.is_empty() {
        return Err(MbrError::NoSystems);
    }
    if lambdas.len() != systems.len() {
        return Err(MbrError::WeightCount {
            systems: systems.len(),
            weights: lambdas.len(),
        });
    }
    scales.validate()?;

    let all: BTreeSet<&String> = systems.iter().flat_map(|s| s.lists.keys()).collect();
    let common: Vec<&String> = all
        .iter()
        .copied()
        .filter(|id| systems.iter().all(|s| s.lists.contains_key(*id)))
        .collect();
    if coverage == Coverage::Strict && common.len() != all.len() {
        let diff = all
            .iter()
            .filter(|id| !common.contains(id))
            .map(|id| (*id).clone())
            .collect();
        return Err(MbrError::CoverageMismatch(diff));
    }
    if common.is_empty() {
        return Err(MbrError::NoCommonUtterances);
    }

    common
        .par_iter()
        .map(|id| {
            let posteriors = systems
                .iter()
                .map(|s| compute_posteriors(&s.lists[*id], scales))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&PosteriorDistribution> = posteriors.iter().collect();
            mbr_combine(&refs, lambdas).map(|r| ((*id).clone(), r))
        })
        .collect()
}

pub fn one_best(results: &BTreeMap<String, MbrResult>) -> Transcript {
    results
        .iter()
        .map(|(id, r)| (id.clone(), r.chosen.clone()))
        .collect()
}

/// `utt<TAB>risk<TAB>words` per candidate, utterances in id order.
pub fn render_risks(results: &BTreeMap<String, MbrResult>) -> String {
    let mut out = String::new();
    for (id, r) in results {
        for (w, risk) in &r.candidate_risks {
            out.push_str(&format!("{id}\t{risk}\t{w}\n"));
        }
    }
    out
}
