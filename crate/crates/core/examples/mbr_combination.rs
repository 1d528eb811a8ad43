//! Turn scored N-best lists into posteriors, MBR-decode each system and
//! combine several systems with weighted expected-WER minimisation.

use gramcomb::mbr::{self, CombinationWeights, Coverage};
use gramcomb::nbest::{self, PosteriorScales};

const SYS_A: &str = "\
utt1\t1\t-10.0\t-4.0\tthe cat sat
utt1\t2\t-10.5\t-3.8\tthe cat sad
utt1\t3\t-11.0\t-5.0\ta cat sat
utt2\t1\t-8.0\t-2.0\tgood morning
utt2\t2\t-8.2\t-2.1\tgood mourning
";

const SYS_B: &str = "\
utt1\t1\t-9.0\t-4.5\tthe cat sad
utt1\t2\t-9.1\t-4.4\tthe cat sat
utt2\t1\t-7.0\t-3.0\tgood mourning
utt2\t2\t-7.5\t-2.0\tgood morning
utt2\t3\t-9.0\t-2.5\tgood morning all
";

const SYS_C: &str = "\
utt1\t1\t-12.0\t-3.0\tthe cat sat
utt2\t1\t-6.0\t-2.5\tgood morning
utt2\t2\t-6.9\t-2.5\tgood mourning
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let systems = vec![
        nbest::parse_nbest(SYS_A, "A")?,
        nbest::parse_nbest(SYS_B, "B")?,
        nbest::parse_nbest(SYS_C, "C")?,
    ];
    let scales = PosteriorScales { lm_scale: 1.0, posterior_scale: 0.8 };

    for sys in &systems {
        println!("system {}:", sys.system_id);
        for list in sys.lists.values() {
            let post = nbest::compute_posteriors(list, scales)?;
            let decoded = mbr::mbr_decode(&post, None)?;
            let shown: Vec<String> = post
                .entries()
                .iter()
                .map(|(w, p)| format!("\"{w}\" {p:.3}"))
                .collect();
            println!(
                "  {}: {}  => \"{}\" (risk {:.3})",
                list.utterance_id,
                shown.join(", "),
                decoded.chosen,
                decoded.risk
            );
        }
    }

    for lambdas in [vec![1.0, 1.0, 1.0], vec![0.6, 0.2, 0.2], vec![0.0, 1.0, 0.0]] {
        let weights = CombinationWeights::new(lambdas.clone())?;
        let results = mbr::combine_corpus(&systems, &weights, scales, Coverage::Strict)?;
        println!("\ncombination with lambdas {lambdas:?}:");
        print!("{}", mbr::render_risks(&results));
    }
    Ok(())
}
