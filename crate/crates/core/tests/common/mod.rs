//! Brute-force references shared by the integration suites. Nothing here
//! calls into the DP or selection code it is used to check.

#![allow(dead_code)]

use gramcomb::nbest::{Hypothesis, NBestList, PosteriorDistribution};
use gramcomb::WordSequence;
use rand::Rng;

/// Textbook recursive edit distance, no memoization.
pub fn naive_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ta)), Some((y, tb))) => {
            if x == y {
                naive_levenshtein(ta, tb)
            } else {
                1 + naive_levenshtein(ta, b)
                    .min(naive_levenshtein(a, tb))
                    .min(naive_levenshtein(ta, tb))
            }
        }
    }
}

/// Every sequence over `0..vocab` with length at most `max_len`.
pub fn all_sequences(vocab: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for v in 0..vocab {
                let mut t: Vec<u8> = s.clone();
                t.push(v);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub struct OracleChoice {
    pub chosen: WordSequence,
    pub risk: f64,
    pub risks: Vec<(WordSequence, f64)>,
}

/// Exhaustive MBR: expected loss of every candidate in the union of the
/// systems' supports, accumulated per system then weighted, and the
/// candidate ranked first by (risk, -weighted mass, word order).
pub fn exhaustive_mbr(systems: &[&PosteriorDistribution], lambdas: &[f64]) -> OracleChoice {
    let mut candidates: Vec<WordSequence> = Vec::new();
    for s in systems {
        for (w, _) in s.entries() {
            if !candidates.contains(w) {
                candidates.push(w.clone());
            }
        }
    }
    let mut scored: Vec<(WordSequence, f64, f64)> = candidates
        .iter()
        .map(|c| {
            let mut risk = 0.0;
            let mut mass = 0.0;
            for (s, lambda) in systems.iter().zip(lambdas) {
                let mut inner = 0.0;
                for (h, p) in s.entries() {
                    inner += p * naive_levenshtein(c.words(), h.words()) as f64;
                    if h == c {
                        mass += lambda * p;
                    }
                }
                risk += lambda * inner;
            }
            (c.clone(), risk, mass)
        })
        .collect();
    let risks = scored.iter().map(|(w, r, _)| (w.clone(), *r)).collect();
    scored.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap()
            .then(b.2.partial_cmp(&a.2).unwrap())
            .then(a.0.cmp(&b.0))
    });
    OracleChoice {
        chosen: scored[0].0.clone(),
        risk: scored[0].1,
        risks,
    }
}

/// Random N-best list: up to `max_hyps` hypotheses of length up to `max_len`
/// over `vocab` words, with scores spread over a few nats.
pub fn random_nbest(rng: &mut impl Rng, utt: &str, max_hyps: usize, vocab: u8, max_len: usize) -> NBestList {
    let n = rng.gen_range(1..=max_hyps);
    let hypotheses = (0..n)
        .map(|_| {
            let len = rng.gen_range(0..=max_len);
            let words: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect();
            Hypothesis {
                words: WordSequence::new(words).unwrap(),
                acoustic_score: rng.gen_range(-6.0..0.0),
                lm_score: rng.gen_range(-3.0..0.0),
            }
        })
        .collect();
    NBestList {
        utterance_id: utt.to_owned(),
        hypotheses,
    }
}

/// Random non-negative weights, some exactly zero.
pub fn random_lambdas(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    loop {
        let l: Vec<f64> = (0..m)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.05..1.0) })
            .collect();
        if l.iter().sum::<f64>() > 0.0 {
            return l;
        }
    }
}
