//! Graphemic lexicons built from the 26 base letters, with optional
//! apostrophe (`DA`) and abbreviation (`DB`) attributes.
//!
//! A unit renders as its base letter, followed by `;` and the concatenated
//! attributes when any are present: `c;DADB`, `b;DB`, `s`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexiconError {
    #[error("rejected {token:?}: no letters")]
    NoLetters { token: String },
    #[error("rejected {token:?}: disallowed character {ch:?} at position {position}")]
    DisallowedChar {
        token: String,
        ch: char,
        position: usize,
    },
    #[error("invalid unit symbol {0:?}")]
    InvalidUnit(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("lexicon is empty")]
    EmptyLexicon,
}

/// A base grapheme `a`-`z` with its attribute set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributedGrapheme {
    base: u8,
    apostrophe: bool,
    abbreviation: bool,
}

impl AttributedGrapheme {
    /// `None` unless `base` is a lowercase ASCII letter.
    pub fn new(base: char, apostrophe: bool, abbreviation: bool) -> Option<Self> {
        base.is_ascii_lowercase().then_some(AttributedGrapheme {
            base: base as u8,
            apostrophe,
            abbreviation,
        })
    }

    pub fn plain(base: char) -> Option<Self> {
        Self::new(base, false, false)
    }

    pub fn base(&self) -> char {
        self.base as char
    }

    /// Carries `DA`.
    pub fn has_apostrophe(&self) -> bool {
        self.apostrophe
    }

    /// Carries `DB`.
    pub fn has_abbreviation(&self) -> bool {
        self.abbreviation
    }

    pub fn without_attributes(self) -> Self {
        AttributedGrapheme {
            apostrophe: false,
            abbreviation: false,
            ..self
        }
    }
}

impl fmt::Display for AttributedGrapheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base as char)?;
        if self.apostrophe || self.abbreviation {
            f.write_str(";")?;
            if self.apostrophe {
                f.write_str("DA")?;
            }
            if self.abbreviation {
                f.write_str("DB")?;
            }
        }
        Ok(())
    }
}

impl FromStr for AttributedGrapheme {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LexiconError::InvalidUnit(s.to_owned());
        let (base, attrs) = match s.split_once(';') {
            Some((b, a)) => (b, Some(a)),
            None => (s, None),
        };
        let mut chars = base.chars();
        let (Some(c), None) = (chars.next(), chars.next()) else {
            return Err(bad());
        };
        let (apostrophe, abbreviation) = match attrs {
            None => (false, false),
            Some("DA") => (true, false),
            Some("DB") => (false, true),
            Some("DADB") => (true, true),
            Some(_) => return Err(bad()),
        };
        AttributedGrapheme::new(c, apostrophe, abbreviation).ok_or_else(bad)
    }
}

/// Decomposes an orthographic token into attributed graphemes.
///
/// Letters are lowercased in order. A period directly after a letter marks
/// that letter `DB`. An apostrophe marks the most recent letter `DA`, or the
/// next letter when none precedes it. Hyphens, periods and apostrophes emit no
/// units of their own.
pub fn word_to_graphemes(
    word: &str,
    mark_attributes: bool,
) -> Result<Vec<AttributedGrapheme>, LexiconError> {
    let mut units: Vec<AttributedGrapheme> = Vec::new();
    let mut pending_apostrophe = false;
    let mut prev_was_letter = false;

    for (position, ch) in word.chars().enumerate() {
        match ch {
            c if c.is_ascii_alphabetic() => {
                let mut g = AttributedGrapheme::plain(c.to_ascii_lowercase())
                    .expect("ascii letter");
                if pending_apostrophe {
                    g.apostrophe = mark_attributes;
                    pending_apostrophe = false;
                }
                units.push(g);
                prev_was_letter = true;
                continue;
            }
            '.' => {
                if prev_was_letter && mark_attributes {
                    units.last_mut().expect("letter precedes").abbreviation = true;
                }
            }
            '\'' => match units.last_mut() {
                Some(last) => last.apostrophe |= mark_attributes,
                None => pending_apostrophe = true,
            },
            '-' => {}
            other => {
                return Err(LexiconError::DisallowedChar {
                    token: word.to_owned(),
                    ch: other,
                    position,
                })
            }
        }
        prev_was_letter = false;
    }

    if units.is_empty() {
        return Err(LexiconError::NoLetters {
            token: word.to_owned(),
        });
    }
    Ok(units)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconEntry {
    pub word: String,
    pub units: Vec<AttributedGrapheme>,
}

impl LexiconEntry {
    pub fn pronunciation(&self) -> String {
        self.units
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for LexiconEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.word, self.pronunciation())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LexiconBuild {
    /// Sorted by word, one entry per distinct word.
    pub entries: Vec<LexiconEntry>,
    /// Sorted by word, one per distinct rejected word.
    pub rejections: Vec<LexiconError>,
}

pub fn build_lexicon<I, S>(words: I, mark_attributes: bool) -> LexiconBuild
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let distinct: BTreeSet<String> = words
        .into_iter()
        .map(|w| w.as_ref().to_owned())
        .collect();
    let mut out = LexiconBuild::default();
    for word in distinct {
        match word_to_graphemes(&word, mark_attributes) {
            Ok(units) => out.entries.push(LexiconEntry { word, units }),
            Err(e) => out.rejections.push(e),
        }
    }
    out
}

/// One token per line; surrounding whitespace trimmed, blank lines skipped.
pub fn parse_word_list(content: &str) -> Vec<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn render_lexicon(entries: &[LexiconEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_lexicon(content: &str) -> Result<Vec<LexiconEntry>, LexiconError> {
    let mut entries = Vec::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (word, pron) = raw.split_once('\t').ok_or(LexiconError::Parse {
            line,
            message: "expected \"word<TAB>units\"".into(),
        })?;
        let units = pron
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<AttributedGrapheme>, _>>()
            .map_err(|e| LexiconError::Parse {
                line,
                message: e.to_string(),
            })?;
        if word.is_empty() || units.is_empty() {
            return Err(LexiconError::Parse {
                line,
                message: "empty word or pronunciation".into(),
            });
        }
        entries.push(LexiconEntry {
            word: word.to_owned(),
            units,
        });
    }
    Ok(entries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContextMode {
    Mono,
    LeftBi,
}

impl FromStr for ContextMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mono" => Ok(ContextMode::Mono),
            "left-bi" => Ok(ContextMode::LeftBi),
            _ => Err(format!("unknown context mode {s:?} (expected mono or left-bi)")),
        }
    }
}

/// Left context of a bi-grapheme: the previous unit, or the word boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LeftContext {
    Boundary,
    Unit(AttributedGrapheme),
}

pub const BOUNDARY_SYMBOL: &str = "#";

impl fmt::Display for LeftContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LeftContext::Boundary => f.write_str(BOUNDARY_SYMBOL),
            LeftContext::Unit(g) => g.fmt(f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContextUnit {
    Mono(AttributedGrapheme),
    LeftBi(LeftContext, AttributedGrapheme),
}

impl ContextUnit {
    pub fn center(&self) -> AttributedGrapheme {
        match *self {
            ContextUnit::Mono(g) | ContextUnit::LeftBi(_, g) => g,
        }
    }
}

impl fmt::Display for ContextUnit {
    /// Mono units render as the grapheme; left-bi units as `left-center`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContextUnit::Mono(g) => g.fmt(f),
            ContextUnit::LeftBi(l, g) => write!(f, "{l}-{g}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitInventory {
    pub context: ContextMode,
    pub units: BTreeSet<ContextUnit>,
}

impl UnitInventory {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// One unit per line, in inventory order.
    pub fn render(&self) -> String {
        self.units.iter().map(|u| format!("{u}\n")).collect()
    }
}

/// Collects word-internal context units; the first unit of every word sees
/// the boundary as its left context.
pub fn context_units(
    lexicon: &[LexiconEntry],
    context: ContextMode,
) -> Result<UnitInventory, LexiconError> {
    if lexicon.is_empty() {
        return Err(LexiconError::EmptyLexicon);
    }
    let mut units = BTreeSet::new();
    for entry in lexicon {
        let mut left = LeftContext::Boundary;
        for &g in &entry.units {
            units.insert(match context {
                ContextMode::Mono => ContextUnit::Mono(g),
                ContextMode::LeftBi => ContextUnit::LeftBi(left, g),
            });
            left = LeftContext::Unit(g);
        }
    }
    Ok(UnitInventory { context, units })
}

/// Occurrence counts of each attributed grapheme across a lexicon.
pub fn grapheme_counts(lexicon: &[LexiconEntry]) -> BTreeMap<AttributedGrapheme, usize> {
    let mut counts = BTreeMap::new();
    for g in lexicon.iter().flat_map(|e| e.units.iter()) {
        *counts.entry(*g).or_insert(0) += 1;
    }
    counts
}
