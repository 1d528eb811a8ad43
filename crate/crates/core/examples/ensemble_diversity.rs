//! Measure how different the members of an ensemble are, and how much MBR
//! combination gains from that difference, on a synthetic ensemble.

use gramcomb::align::{self, Transcript, WordSequence};
use gramcomb::diversity::{self, Deviation};
use gramcomb::mbr::{self, CombinationWeights, Coverage};
use gramcomb::nbest::PosteriorScales;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn references(utterances: usize) -> Transcript {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..utterances)
        .map(|u| {
            let len = rng.gen_range(5..15);
            let words: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..200))).collect();
            (format!("utt{u:04}"), WordSequence::new(words).expect("valid tokens"))
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let refs = references(800);
    println!("{:>6} {:>8} {:>8} {:>8} {:>10}", "target", "mean", "std", "cWER", "combined");
    for target in [10.0, 20.0, 30.0] {
        let systems = diversity::synth_ensemble(&refs, 4, target, 2024)?;
        let one_bests: Vec<Transcript> = systems.iter().map(|s| s.one_best()).collect();
        let stats = diversity::ensemble_stats(&one_bests, &refs, Deviation::Population)?;

        let weights = CombinationWeights::uniform(systems.len())?;
        let combined = mbr::combine_corpus(&systems, &weights, PosteriorScales::default(), Coverage::Strict)?;
        let wer = align::score_wer(&mbr::one_best(&combined), &refs, false)?.wer();

        println!(
            "{target:>6.1} {:>8.2} {:>8.2} {:>8.2} {wer:>10.2}",
            stats.mean, stats.std_dev, stats.cwer
        );
    }

    // Identical systems have no diversity at all.
    let same = vec![refs.clone(), refs.clone()];
    println!("\ncWER of two identical systems: {:.2}", diversity::cross_wer(&same)?);
    Ok(())
}
