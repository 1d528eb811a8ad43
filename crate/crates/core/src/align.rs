//! Word-level Levenshtein alignment and WER scoring.
//!
//! The alignment convention throughout is `levenshtein(reference, hypothesis)`:
//! insertions are extra words in the hypothesis, deletions are reference words
//! missing from it.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// An ordered sequence of whitespace-free word tokens.
///
/// Ordering is lexicographic over tokens, each token compared by codepoint.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordSequence(Vec<String>);

impl WordSequence {
    /// Builds a sequence from tokens, rejecting empty tokens and tokens that
    /// contain whitespace.
    pub fn new<I, S>(words: I) -> Result<Self, AlignError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        for w in &words {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(AlignError::InvalidToken(w.clone()));
            }
        }
        Ok(WordSequence(words))
    }

    /// Splits text on whitespace. Never fails.
    pub fn from_text(text: &str) -> Self {
        WordSequence(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn empty() -> Self {
        WordSequence(Vec::new())
    }

    pub fn words(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for WordSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(w)?;
        }
        Ok(())
    }
}

impl From<&str> for WordSequence {
    fn from(text: &str) -> Self {
        WordSequence::from_text(text)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignError {
    #[error("invalid word token {0:?}: tokens must be non-empty and free of whitespace")]
    InvalidToken(String),
    #[error("utterance id mismatch: missing hypotheses for [{}]; unexpected hypotheses for [{}]", missing.join(", "), extra.join(", "))]
    UtteranceMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("total reference length is zero")]
    EmptyReference,
    #[error("baseline WER must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Edit distance together with the error breakdown of one minimal alignment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AlignmentResult {
    pub distance: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

impl std::ops::AddAssign for AlignmentResult {
    fn add_assign(&mut self, rhs: Self) {
        self.distance += rhs.distance;
        self.substitutions += rhs.substitutions;
        self.insertions += rhs.insertions;
        self.deletions += rhs.deletions;
    }
}

/// Unit-cost edit distance between two token slices, two-row DP.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            let cost = if x == y { diag } else { diag + 1 };
            row[j + 1] = cost.min(up + 1).min(row[j] + 1);
            diag = up;
        }
    }
    row[b.len()]
}

/// Aligns `hyp` against `reference` and counts substitutions, insertions and
/// deletions along one minimal path.
///
/// Backtrace runs from the final cell; at ties it prefers the diagonal
/// (match or substitution), then a deletion, then an insertion.
pub fn levenshtein(reference: &WordSequence, hyp: &WordSequence) -> AlignmentResult {
    align_tokens(reference.words(), hyp.words())
}

pub fn align_tokens<T: PartialEq>(a: &[T], b: &[T]) -> AlignmentResult {
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    let mut dp = vec![0usize; (n + 1) * width];
    for j in 0..=m {
        dp[j] = j;
    }
    for i in 1..=n {
        dp[i * width] = i;
        for j in 1..=m {
            let sub = dp[(i - 1) * width + j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let del = dp[(i - 1) * width + j] + 1;
            let ins = dp[i * width + j - 1] + 1;
            dp[i * width + j] = sub.min(del).min(ins);
        }
    }

    let mut out = AlignmentResult {
        distance: dp[n * width + m],
        ..Default::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i * width + j];
        if i > 0 && j > 0 {
            let mismatch = a[i - 1] != b[j - 1];
            if dp[(i - 1) * width + j - 1] + usize::from(mismatch) == here {
                out.substitutions += usize::from(mismatch);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[(i - 1) * width + j] + 1 == here {
            out.deletions += 1;
            i -= 1;
        } else {
            out.insertions += 1;
            j -= 1;
        }
    }
    out
}

/// Utterance id to word sequence, iterated in id order.
pub type Transcript = BTreeMap<String, WordSequence>;

/// Parses `utt-id<TAB>word word ...` lines. Blank lines are skipped; an empty
/// word sequence is written as `utt-id<TAB>`.
pub fn parse_transcript(content: &str) -> Result<Transcript, AlignError> {
    let mut out = Transcript::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (id, words) = raw.split_once('\t').ok_or_else(|| AlignError::Parse {
            line,
            message: "expected \"utt-id<TAB>words\"".into(),
        })?;
        let id = id.trim();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(AlignError::Parse {
                line,
                message: format!("invalid utterance id {id:?}"),
            });
        }
        if out
            .insert(id.to_owned(), WordSequence::from_text(words))
            .is_some()
        {
            return Err(AlignError::Parse {
                line,
                message: format!("duplicate utterance id {id:?}"),
            });
        }
    }
    Ok(out)
}

pub fn render_transcript(transcript: &Transcript) -> String {
    let mut out = String::new();
    for (id, words) in transcript {
        out.push_str(id);
        out.push('\t');
        out.push_str(&words.to_string());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct UtteranceScore {
    pub alignment: AlignmentResult,
    pub ref_words: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WerReport {
    pub utterances: BTreeMap<String, UtteranceScore>,
    pub totals: AlignmentResult,
    pub ref_words: usize,
}

impl WerReport {
    /// WER in percent, full precision.
    pub fn wer(&self) -> f64 {
        100.0 * self.totals.distance as f64 / self.ref_words as f64
    }

    /// `WER=<float> SUB=<int> INS=<int> DEL=<int> WORDS=<int>`
    pub fn summary_line(&self) -> String {
        format!(
            "WER={:.1} SUB={} INS={} DEL={} WORDS={}",
            self.wer(),
            self.totals.substitutions,
            self.totals.insertions,
            self.totals.deletions,
            self.ref_words
        )
    }
}

impl fmt::Display for WerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "utterance\tref_words\terrors\tsub\tins\tdel")?;
        for (id, s) in &self.utterances {
            writeln!(
                f,
                "{id}\t{}\t{}\t{}\t{}\t{}",
                s.ref_words,
                s.alignment.distance,
                s.alignment.substitutions,
                s.alignment.insertions,
                s.alignment.deletions
            )?;
        }
        writeln!(
            f,
            "total: {} errors / {} words = {:.1}% WER ({})",
            self.totals.distance,
            self.ref_words,
            self.wer(),
            self.wer()
        )
    }
}

/// Scores hypotheses against references.
///
/// With `missing_as_empty`, reference utterances without a hypothesis score
/// as all-deletions instead of failing. Hypotheses for ids absent from the
/// references are always an error.
pub fn score_wer(
    hyps: &Transcript,
    refs: &Transcript,
    missing_as_empty: bool,
) -> Result<WerReport, AlignError> {
    let missing: Vec<String> = refs
        .keys()
        .filter(|id| !hyps.contains_key(*id))
        .cloned()
        .collect();
    let extra: Vec<String> = hyps
        .keys()
        .filter(|id| !refs.contains_key(*id))
        .cloned()
        .collect();
    if !extra.is_empty() || (!missing.is_empty() && !missing_as_empty) {
        return Err(AlignError::UtteranceMismatch { missing, extra });
    }

    let empty = WordSequence::empty();
    let mut utterances = BTreeMap::new();
    let mut totals = AlignmentResult::default();
    let mut ref_words = 0;
    for (id, reference) in refs {
        let hyp = hyps.get(id).unwrap_or(&empty);
        let alignment = levenshtein(reference, hyp);
        totals += alignment;
        ref_words += reference.len();
        utterances.insert(
            id.clone(),
            UtteranceScore {
                alignment,
                ref_words: reference.len(),
            },
        );
    }
    if ref_words == 0 {
        return Err(AlignError::EmptyReference);
    }
    Ok(WerReport {
        utterances,
        totals,
        ref_words,
    })
}

/// Signed relative change of `other` with respect to `baseline`, in percent.
pub fn relative_change(baseline_wer: f64, other_wer: f64) -> Result<f64, AlignError> {
    if !(baseline_wer > 0.0) {
        return Err(AlignError::NonPositiveBaseline(baseline_wer));
    }
    Ok(100.0 * (other_wer - baseline_wer) / baseline_wer)
}

/// Rounds to one decimal place for display.
pub fn round1(x: f64) -> f64 {
    let r = (x * 10.0).round() / 10.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}
