//! Build a graphemic lexicon from a word list, then derive the
//! context-dependent unit inventories a tree-based acoustic model would use.
//!
//! Run with `cargo run --example lexicon`.

use gramcomb::glexicon::{self, ContextMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let words = ["the", "moon", "B.B.C.'s", "information", "rock'n'roll", "x-ray", "3D", "the"];

    let with_attrs = glexicon::build_lexicon(words, true);
    println!("lexicon with apostrophe/abbreviation attributes:");
    print!("{}", glexicon::render_lexicon(&with_attrs.entries));
    for rejected in &with_attrs.rejections {
        println!("  {rejected}");
    }

    let plain = glexicon::build_lexicon(words, false);
    println!("\nsame words, attributes stripped:");
    print!("{}", glexicon::render_lexicon(&plain.entries));

    for mode in [ContextMode::Mono, ContextMode::LeftBi] {
        let attributed = glexicon::context_units(&with_attrs.entries, mode)?;
        let stripped = glexicon::context_units(&plain.entries, mode)?;
        println!(
            "\n{mode:?}: {} units with attributes, {} without",
            attributed.len(),
            stripped.len()
        );
    }

    let left_bi = glexicon::context_units(&with_attrs.entries, ContextMode::LeftBi)?;
    println!("\nfirst left-biphone units:");
    for line in left_bi.render().lines().take(8) {
        println!("  {line}");
    }

    println!("\ngrapheme counts:");
    for (g, n) in glexicon::grapheme_counts(&with_attrs.entries) {
        if g.has_apostrophe() || g.has_abbreviation() {
            println!("  {g}\t{n}");
        }
    }
    Ok(())
}
