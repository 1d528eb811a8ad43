//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use gramcomb::align::{self, round1};
use gramcomb::diversity::{self, LayerContext, ReceptiveField};
use gramcomb::mbr::{self, CombinationWeights, Coverage};
use gramcomb::nbest::{compute_posteriors, PosteriorDistribution, PosteriorScales};
use gramcomb::smoothing::{
    self, builtin_evaluator, Dataset, Layer, LossEvaluator, ParamBundle, SmoothingOptions,
};
use gramcomb::{cli, Transcript, WordSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{all_sequences, exhaustive_mbr, naive_levenshtein, random_lambdas, random_nbest};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv: Vec<&str> = std::iter::once("gramcomb").chain(args.iter().copied()).collect();
    let code = cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

// 1
fn lexicon_excerpt() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let words = dir.path().join("words.txt");
    let lex = dir.path().join("lexicon.txt");
    fs::write(&words, "moon\nthe\nB.B.C.'s\ninformation\n").unwrap();
    let (code, _, err) = run_cli(&["glex", "build", "--words", p(&words), "--out", p(&lex)]);
    ensure!(code == 0, "glex build exited {code}: {err}");
    let expected = "B.B.C.'s\tb;DB b;DB c;DADB s\n\
                    information\ti n f o r m a t i o n\n\
                    moon\tm o o n\n\
                    the\tt h e\n";
    let got = fs::read_to_string(&lex).unwrap();
    ensure!(got == expected, "lexicon differs:\n{got}");
    Ok("4 entries byte-exact".into())
}

// 2
fn receptive_fields() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let layers = dir.path().join("tdnn.layers");
    fs::write(
        &layers,
        "splice -1,0,1\nsplice -1,0,1\nsplice -1,0,1,2\nsplice -3,0,3\nsplice -3,0,3\nsplice -6,-3,0\nsplice 0\n",
    )
    .unwrap();
    let (code, stdout, err) = run_cli(&["rfield", "--layers", p(&layers)]);
    ensure!(code == 0, "rfield exited {code}: {err}");
    ensure!(stdout == "left=15 right=10\n", "TDNN field {stdout:?}");

    let dnn = diversity::receptive_field(&[LayerContext::Spliced((-10..=10).collect())]).unwrap();
    ensure!(dnn == ReceptiveField { left: 10, right: 10 }, "DNN field {dnn:?}");
    Ok("TDNN (15, 10), DNN (10, 10)".into())
}

// 3
fn relative_wer_arithmetic() -> Outcome {
    // (baseline, other, expected %Rel as listed)
    let combination_pairs = [
        (27.8, 30.7, 10.4),
        (27.8, 26.3, -5.4),
        (24.4, 26.9, 10.3),
        (24.4, 23.0, -5.7),
        (25.0, 26.7, 6.8),
        (25.0, 23.2, -7.2),
        (23.4, 25.0, 6.8),
        (23.4, 21.7, -7.3),
    ];
    let smoothing_pairs = [(23.4, 21.7, -7.3), (21.5, 20.3, -5.6)];
    let mut misses = Vec::new();
    for (base, other, expected) in combination_pairs.iter().chain(&smoothing_pairs) {
        let rel = align::relative_change(*base, *other).unwrap();
        let shown = round1(rel);
        if (shown - expected).abs() > 0.05 {
            misses.push(format!("({base} -> {other}) = {rel:.4} shows as {shown:+.1}, expected {expected:+.1}"));
        }
    }
    ensure!(misses.is_empty(), "{}", misses.join("; "));
    Ok("10 pairs within 0.05".into())
}

// 4
fn mbr_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20171);
    let instances = 500;
    let scales = PosteriorScales::default();
    for i in 0..instances {
        let m = rng.gen_range(1..=3);
        let vocab = rng.gen_range(1..=4);
        let posteriors: Vec<PosteriorDistribution> = (0..m)
            .map(|_| compute_posteriors(&random_nbest(&mut rng, "u", 6, vocab, 4), scales).unwrap())
            .collect();
        let weights = CombinationWeights::new(random_lambdas(&mut rng, m)).unwrap();
        let refs: Vec<&PosteriorDistribution> = posteriors.iter().collect();
        let got = mbr::mbr_combine(&refs, &weights).unwrap();
        let want = exhaustive_mbr(&refs, weights.as_slice());
        ensure!(
            got.chosen == want.chosen && got.risk == want.risk && got.candidate_risks == want.risks,
            "instance {i}: got {:?} ({}) want {:?} ({})",
            got.chosen.to_string(),
            got.risk,
            want.chosen.to_string(),
            want.risk
        );
    }
    Ok(format!("{instances} instances, 0 mismatches"))
}

// 5
fn levenshtein_oracle() -> Outcome {
    let seqs = all_sequences(3, 6);
    let mut pairs = 0usize;
    for a in &seqs {
        for b in &seqs {
            let want = naive_levenshtein(a, b);
            let wa = WordSequence::new(a.iter().map(|x| x.to_string())).unwrap();
            let wb = WordSequence::new(b.iter().map(|x| x.to_string())).unwrap();
            let got = align::levenshtein(&wa, &wb);
            ensure!(
                got.distance == want
                    && got.substitutions + got.insertions + got.deletions == want
                    && align::edit_distance(a, b) == want,
                "{a:?} vs {b:?}: got {got:?}, want {want}"
            );
            pairs += 1;
        }
    }
    Ok(format!("{pairs} pairs agree"))
}

fn transcript(pairs: &[(&str, &str)]) -> Transcript {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), WordSequence::from_text(v)))
        .collect()
}

// 6
fn cwer_hand_cases() -> Outcome {
    let abc = transcript(&[("u1", "a b c")]);
    let abd = transcript(&[("u1", "a b d")]);
    let ab = transcript(&[("u1", "a b")]);
    let c1 = diversity::cross_wer(&[abc.clone(), abd]).unwrap();
    ensure!((c1 - 100.0 / 3.0).abs() < 1e-9, "abc/abd cWER {c1}");
    let c2 = diversity::cross_wer(&[ab, abc]).unwrap();
    ensure!((c2 - 100.0 * 5.0 / 12.0).abs() < 1e-9, "ab/abc cWER {c2}");

    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for trial in 0..100 {
        let m = rng.gen_range(2..=5);
        let systems: Vec<Transcript> = (0..m)
            .map(|_| {
                (0..6)
                    .map(|u| {
                        let len = rng.gen_range(1..6);
                        let w: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..4))).collect();
                        (format!("u{u}"), WordSequence::new(w).unwrap())
                    })
                    .collect()
            })
            .collect();
        let base = diversity::cross_wer(&systems).unwrap();
        let mut shuffled = systems.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        let perm = diversity::cross_wer(&shuffled).unwrap();
        ensure!((base - perm).abs() < 1e-9, "trial {trial}: {base} vs {perm}");
    }
    Ok(format!("{c1:.4}%, {c2:.4}%, permutation invariant on 100 ensembles"))
}

fn synthetic_references(utterances: usize, len: usize, vocab: usize, seed: u64) -> Transcript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..utterances)
        .map(|u| {
            let words: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect();
            (format!("utt{u:05}"), WordSequence::new(words).unwrap())
        })
        .collect()
}

// 7
fn combination_gain() -> Outcome {
    let refs = synthetic_references(1000, 10, 50, 7);
    let words: usize = refs.values().map(WordSequence::len).sum();
    ensure!(words >= 10_000, "only {words} reference words");
    let weights = CombinationWeights::uniform(3).unwrap();
    let mut wins = 0;
    let mut gains = Vec::new();
    for seed in 0..50u64 {
        let systems = diversity::synth_ensemble(&refs, 3, 25.0, seed).unwrap();
        let singles: Vec<f64> = systems
            .iter()
            .map(|s| align::score_wer(&s.one_best(), &refs, false).unwrap().wer())
            .collect();
        let combined = mbr::combine_corpus(&systems, &weights, PosteriorScales::default(), Coverage::Strict).unwrap();
        let wer = align::score_wer(&mbr::one_best(&combined), &refs, false).unwrap().wer();
        let mean = singles.iter().sum::<f64>() / 3.0;
        let worst = singles.iter().copied().fold(f64::MIN, f64::max);
        ensure!(wer <= worst, "seed {seed}: combined {wer} above worst single {worst}");
        if wer < mean {
            wins += 1;
        }
        gains.push(mean - wer);
    }
    ensure!(wins >= 45, "combination beat the mean in only {wins}/50 trials");
    let avg_gain = gains.iter().sum::<f64>() / gains.len() as f64;
    Ok(format!("{wins}/50 trials below mean, average gain {avg_gain:.2} abs"))
}

fn linear_model(w: &[f64], b: &[f64]) -> ParamBundle {
    ParamBundle::new(vec![
        Layer { name: "W".into(), values: w.to_vec() },
        Layer { name: "b".into(), values: b.to_vec() },
    ])
    .unwrap()
}

/// Three overlapping 2-D Gaussian blobs and `m` noisy checkpoints of a
/// reasonable linear classifier for them.
fn smoothing_problem(m: usize, seed: u64) -> (Dataset, Vec<ParamBundle>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [(1.0, 0.0), (-0.5, 0.9), (-0.5, -0.9)];
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for i in 0..30 {
        let c = i % 3;
        let (cx, cy) = centers[c];
        features.push(vec![cx + rng.gen_range(-0.8..0.8), cy + rng.gen_range(-0.8..0.8)]);
        labels.push(c);
    }
    let models = (0..m)
        .map(|_| {
            let w: Vec<f64> = centers
                .iter()
                .flat_map(|&(x, y)| [2.0 * x, 2.0 * y])
                .map(|v| v + rng.gen_range(-1.5..1.5))
                .collect();
            let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            linear_model(&w, &b)
        })
        .collect();
    (Dataset::new(features, labels).unwrap(), models)
}

/// Points of the probability simplex over `m` models at resolution 1/steps.
fn simplex_grid(m: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if m == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(m - 1, left - k, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, steps, steps, &mut Vec::new(), &mut out);
    out
}

/// Cross-entropy of the layer-wise mixture, computed directly from the
/// checkpoints without going through the interpolation code.
fn mixture_loss(data: &Dataset, models: &[ParamBundle], w_alpha: &[f64], b_alpha: &[f64]) -> f64 {
    let mix = |name: &str, alpha: &[f64]| -> Vec<f64> {
        let len = models[0].layer(name).unwrap().len();
        (0..len)
            .map(|i| models.iter().zip(alpha).map(|(m, a)| a * m.layer(name).unwrap()[i]).sum())
            .collect()
    };
    let w = mix("W", w_alpha);
    let b = mix("b", b_alpha);
    let mut total = 0.0;
    for (x, &y) in data.features.iter().zip(&data.labels) {
        let logits: Vec<f64> = (0..3).map(|c| b[c] + w[2 * c] * x[0] + w[2 * c + 1] * x[1]).collect();
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        total += z.ln() - logits[y];
    }
    total / data.labels.len() as f64
}

// 8
fn smoothing() -> Outcome {
    let mut notes = Vec::new();

    // (a) grid oracle
    for (m, seed) in [(2, 1), (2, 2), (3, 3), (3, 4)] {
        let (data, models) = smoothing_problem(m, seed);
        let grid = simplex_grid(m, 50);
        let mut best = f64::INFINITY;
        for wa in &grid {
            for ba in &grid {
                best = best.min(mixture_loss(&data, &models, wa, ba));
            }
        }
        let eval = builtin_evaluator(data);
        let fit = smoothing::estimate_weights(&models, &eval, &SmoothingOptions::default()).unwrap();
        ensure!(
            (fit.loss - best).abs() <= 1e-3,
            "(a) M={m} seed {seed}: optimized {} vs grid {best}",
            fit.loss
        );
        notes.push(format!("M={m}: {:.5} vs grid {:.5}", fit.loss, best));
    }

    // (b) vertex dominance on convex losses
    let (data, models) = smoothing_problem(3, 9);
    let eval = builtin_evaluator(data);
    let fit = smoothing::estimate_weights(&models, &eval, &SmoothingOptions::default()).unwrap();
    let vertex_best = models.iter().map(|m| eval.loss(m).unwrap()).fold(f64::INFINITY, f64::min);
    ensure!(fit.loss <= vertex_best + 1e-6, "(b) builtin: {} > {vertex_best}", fit.loss);
    let scalars: Vec<ParamBundle> = [0.0, 1.0, 2.0]
        .iter()
        .map(|&v| ParamBundle::new(vec![Layer { name: "x".into(), values: vec![v] }]).unwrap())
        .collect();
    for target in [-3.0, 0.4, 1.7, 5.0] {
        let quad = move |b: &ParamBundle| (b.layer("x").unwrap()[0] - target).powi(2);
        let abs = move |b: &ParamBundle| (b.layer("x").unwrap()[0] - target).abs();
        for loss in [&quad as &(dyn Fn(&ParamBundle) -> f64 + Sync), &abs] {
            let fit = smoothing::estimate_weights(&scalars, &loss, &SmoothingOptions::default()).unwrap();
            let vb = scalars.iter().map(loss).fold(f64::INFINITY, f64::min);
            ensure!(fit.loss <= vb + 1e-6, "(b) target {target}: {} > {vb}", fit.loss);
        }
    }

    // (c) scalar recovery
    let two = &scalars[..2];
    let loss = |b: &ParamBundle| (b.layer("x").unwrap()[0] - 0.3).powi(2);
    let fit = smoothing::estimate_weights(two, &loss, &SmoothingOptions::default()).unwrap();
    let row = &fit.weights.rows()[0];
    ensure!(
        (row[0] - 0.7).abs() < 1e-2 && (row[1] - 0.3).abs() < 1e-2,
        "(c) recovered {row:?}"
    );
    notes.push(format!("alpha=({:.4}, {:.4})", row[0], row[1]));

    // (d) checkpoint selection
    let available: Vec<u64> = (1..=120).collect();
    let picked = smoothing::select_checkpoints(&available, 20, 6).unwrap();
    let want: Vec<u64> = (1..=20).rev().map(|k| 6 * k).collect();
    ensure!(picked == want, "(d) picked {picked:?}");

    Ok(notes.join("; "))
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn write_inputs(dir: &Path) {
    let refs = synthetic_references(200, 8, 30, 3);
    fs::write(dir.join("refs.txt"), align::render_transcript(&refs)).unwrap();
    let systems = diversity::synth_ensemble(&refs, 3, 20.0, 5).unwrap();
    for s in &systems {
        fs::write(dir.join(format!("{}.txt", s.system_id)), align::render_transcript(&s.one_best())).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 1..=3 {
        let mut text = String::new();
        for u in 0..40 {
            let list = random_nbest(&mut rng, &format!("u{u:02}"), 5, 4, 5);
            for (r, h) in list.hypotheses.iter().enumerate() {
                text.push_str(&format!("u{u:02}\t{}\t{}\t{}\t{}\n", r + 1, h.acoustic_score, h.lm_score, h.words));
            }
        }
        fs::write(dir.join(format!("n{k}.nbest")), text).unwrap();
    }
    fs::write(dir.join("words.txt"), "B.B.C.'s\ninformation\nmoon\nthe\nrock'n'roll\n123\n").unwrap();
    fs::write(dir.join("tdnn.layers"), "splice -2,-1,0,1,2\nsplice -1,0,1\nrecur 40,0\nsplice -3,0,3\n").unwrap();
    fs::write(dir.join("iters.txt"), (1..=120).map(|i| i.to_string()).collect::<Vec<_>>().join("\n")).unwrap();
    let (data, models) = smoothing_problem(3, 12);
    let mut dtext = String::new();
    for (x, y) in data.features.iter().zip(&data.labels) {
        dtext.push_str(&format!("{y}\t{} {}\n", x[0], x[1]));
    }
    fs::write(dir.join("data.txt"), dtext).unwrap();
    for (i, m) in models.iter().enumerate() {
        fs::write(dir.join(format!("ckpt{i}.pbundle")), smoothing::render_bundle(m)).unwrap();
    }
    fs::write(
        dir.join("pipeline.conf"),
        "stages = lexicon-build, synth-ensemble, mbr-combine, score, cwer, smooth\n\
         words = words.txt\nref = refs.txt\nsystems = 3\ntarget_wer = 25\n\
         bundles = ckpt0.pbundle, ckpt1.pbundle, ckpt2.pbundle\ndata = data.txt\nmax_iters = 50\n",
    )
    .unwrap();
}

fn all_commands(inp: &Path, out: &Path) -> Vec<Vec<String>> {
    let i = |f: &str| inp.join(f).to_str().unwrap().to_owned();
    let o = |f: &str| out.join(f).to_str().unwrap().to_owned();
    let cmds: Vec<Vec<String>> = vec![
        vec!["glex".into(), "build".into(), "--words".into(), i("words.txt"), "--out".into(), o("lex.txt"), "--rejections".into(), o("rej.txt")],
        vec!["glex".into(), "units".into(), "--lexicon".into(), o("lex.txt"), "--context".into(), "left-bi".into(), "--out".into(), o("units.txt")],
        vec!["score".into(), "--hyp".into(), i("sys1.txt"), "--ref".into(), i("refs.txt"), "--report".into(), o("score.txt")],
        vec!["mbr".into(), "decode".into(), "--nbest".into(), i("n1.nbest"), "--out".into(), o("dec.txt"), "--risks".into(), o("dec.risks"), "--post-scale".into(), "0.7".into()],
        vec!["mbr".into(), "combine".into(), "--nbest".into(), i("n1.nbest"), "--nbest".into(), i("n2.nbest"), "--nbest".into(), i("n3.nbest"), "--lambdas".into(), "0.5,0.3,0.2".into(), "--lm-scale".into(), "0.8".into(), "--out".into(), o("comb.txt"), "--risks".into(), o("comb.risks")],
        vec!["cwer".into(), "--hyp".into(), i("sys1.txt"), "--hyp".into(), i("sys2.txt"), "--hyp".into(), i("sys3.txt")],
        vec!["stats".into(), "--hyp".into(), i("sys1.txt"), "--hyp".into(), i("sys2.txt"), "--hyp".into(), i("sys3.txt"), "--ref".into(), i("refs.txt")],
        vec!["smooth".into(), "--bundle".into(), i("ckpt0.pbundle"), "--bundle".into(), i("ckpt1.pbundle"), "--bundle".into(), i("ckpt2.pbundle"), "--data".into(), i("data.txt"), "--out".into(), o("smooth.pbundle"), "--weights-out".into(), o("smooth.weights"), "--max-iters".into(), "40".into()],
        vec!["checkpoints".into(), "--available".into(), i("iters.txt"), "--count".into(), "20".into(), "--interval".into(), "6".into()],
        vec!["rfield".into(), "--layers".into(), i("tdnn.layers")],
        vec!["synth".into(), "--ref".into(), i("refs.txt"), "--systems".into(), "3".into(), "--target-wer".into(), "25".into(), "--seed".into(), "7".into(), "--out-dir".into(), o("synth")],
        vec!["pipeline".into(), "--config".into(), i("pipeline.conf"), "--seed".into(), "7".into(), "--out-dir".into(), o("pipe")],
    ];
    cmds
}

// 9
fn determinism() -> Outcome {
    let inputs = tempfile::tempdir().unwrap();
    write_inputs(inputs.path());
    let mut runs = Vec::new();
    for threads in ["1", "1", "4"] {
        let out = tempfile::tempdir().unwrap();
        let mut stdouts = Vec::new();
        for cmd in all_commands(inputs.path(), out.path()) {
            let mut args: Vec<&str> = vec!["--threads", threads];
            args.extend(cmd.iter().map(String::as_str));
            let (code, stdout, err) = run_cli(&args);
            ensure!(code == 0, "{} exited {code}: {err}", cmd[..2].join(" "));
            // Paths inside stdout differ between runs only if a command echoes them.
            stdouts.push(stdout);
        }
        runs.push((snapshot(out.path()), stdouts, out));
    }
    let (files0, out0, _) = &runs[0];
    for (k, (files, out, _)) in runs.iter().enumerate().skip(1) {
        ensure!(files.keys().eq(files0.keys()), "run {k}: different file sets");
        for (path, bytes) in files {
            ensure!(bytes == &files0[path], "run {k}: {} differs", path.display());
        }
        ensure!(out == out0, "run {k}: stdout differs");
    }
    Ok(format!("12 subcommands, {} output files, identical over 3 runs (1, 1, 4 threads)", files0.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 lexicon excerpt", lexicon_excerpt),
        ("2 receptive field", receptive_fields),
        ("3 relative-WER arithmetic", relative_wer_arithmetic),
        ("4 MBR oracle equivalence", mbr_oracle_equivalence),
        ("5 Levenshtein oracle", levenshtein_oracle),
        ("6 cWER hand cases", cwer_hand_cases),
        ("7 combination gain", combination_gain),
        ("8 smoothing", smoothing),
        ("9 determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = std::time::Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {name}: PASS ({detail}) [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({why}) [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

