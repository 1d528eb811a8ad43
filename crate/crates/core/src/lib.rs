//! Lexicon and system-combination tooling for speech recognition.
//!
//! * [`glexicon`]: graphemic lexicons with apostrophe/abbreviation attributes
//!   and context-dependent unit inventories.
//! * [`align`]: word-level Levenshtein alignment and WER scoring.
//! * [`nbest`]: N-best list ingestion and score-to-posterior conversion.
//! * [`mbr`]: minimum Bayes risk decoding and multi-system combination.
//! * [`diversity`]: cross-WER, ensemble statistics, synthetic ensembles and
//!   receptive-field arithmetic.
//! * [`smoothing`]: checkpoint selection and layer-wise parameter
//!   interpolation with simplex-constrained weights.
//! * [`cli`]: the `gramcomb` command-line front end and pipeline runner.
//!
//! Runnable walkthroughs of each capability live under `examples/`.

pub mod align;
pub mod cli;
pub mod diversity;
pub mod glexicon;
pub mod mbr;
pub mod nbest;
pub mod smoothing;

pub use align::{levenshtein, relative_change, score_wer, AlignmentResult, Transcript, WerReport, WordSequence};
pub use diversity::{cross_wer, ensemble_stats, receptive_field, synth_ensemble, EnsembleStats, LayerContext, ReceptiveField};
pub use glexicon::{build_lexicon, context_units, word_to_graphemes, AttributedGrapheme, ContextMode, LexiconEntry};
pub use mbr::{combine_corpus, mbr_combine, mbr_decode, CombinationWeights, Coverage, MbrResult};
pub use nbest::{compute_posteriors, parse_nbest, NBestList, PosteriorDistribution, PosteriorScales, SystemOutput};
pub use smoothing::{estimate_weights, interpolate, select_checkpoints, ParamBundle, SmoothingOptions, SmoothingWeights};
