//! Align hypotheses against references and report WER with its
//! substitution/insertion/deletion breakdown.

use gramcomb::align::{self, WordSequence};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let refs = align::parse_transcript(
        "utt1\tthe cat sat on the mat\n\
         utt2\ta b c d\n\
         utt3\tgood morning everyone\n",
    )?;
    let hyps = align::parse_transcript(
        "utt1\tthe cat sat on mat\n\
         utt2\ta x c d e\n\
         utt3\tgood morning everyone\n",
    )?;

    let report = align::score_wer(&hyps, &refs, false)?;
    print!("{report}");
    println!("{}", report.summary_line());

    // A single pair, with the edit counts split out.
    let r = WordSequence::from_text("a b c");
    let h = WordSequence::from_text("a x c d");
    let a = align::levenshtein(&r, &h);
    println!(
        "\n\"{r}\" -> \"{h}\": distance {} (sub {}, ins {}, del {})",
        a.distance, a.substitutions, a.insertions, a.deletions
    );

    // Relative change between two systems, as usually tabulated.
    let base = 24.4;
    for other in [26.9, 23.0] {
        let rel = align::relative_change(base, other)?;
        println!("{base} -> {other}: {rel:+.4}% ({:+.1}%)", align::round1(rel));
    }

    // A missing hypothesis is an error unless it should count as empty.
    let mut partial = hyps.clone();
    partial.remove("utt3");
    match align::score_wer(&partial, &refs, false) {
        Err(e) => println!("\nstrict scoring: {e}"),
        Ok(_) => unreachable!(),
    }
    let lenient = align::score_wer(&partial, &refs, true)?;
    println!("missing-as-empty: {}", lenient.summary_line());
    Ok(())
}
