//! Pick checkpoints from a training run and interpolate them layer by layer
//! with weights tuned on held-out data.

use gramcomb::smoothing::{self, builtin_evaluator, Dataset, Layer, LossEvaluator, ParamBundle, SmoothingOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Noisy snapshots of a 3-class linear classifier, drifting towards a good
/// solution as "training" proceeds.
fn checkpoints(rng: &mut ChaCha8Rng, iterations: &[u64]) -> Vec<ParamBundle> {
    let target = [2.0, 0.0, -1.0, 1.8, -1.0, -1.8];
    iterations
        .iter()
        .map(|&it| {
            let noise = 3.0 / (it as f64).sqrt();
            let w: Vec<f64> = target.iter().map(|t| t + rng.gen_range(-noise..noise)).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-noise..noise)).collect();
            ParamBundle::new(vec![
                Layer { name: "W".into(), values: w },
                Layer { name: "b".into(), values: b },
            ])
            .expect("well-formed bundle")
        })
        .collect()
}

fn held_out(rng: &mut ChaCha8Rng) -> Dataset {
    let centers = [(1.0, 0.0), (-0.5, 0.9), (-0.5, -0.9)];
    let (features, labels) = (0..150)
        .map(|i| {
            let (x, y) = centers[i % 3];
            (vec![x + rng.gen_range(-0.9..0.9), y + rng.gen_range(-0.9..0.9)], i % 3)
        })
        .unzip();
    Dataset::new(features, labels).expect("well-formed dataset")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let available: Vec<u64> = (1..=60).collect();
    let picked = smoothing::select_checkpoints(&available, 4, 6)?;
    println!("checkpoints: {picked:?}");

    let models = checkpoints(&mut rng, &picked);
    let eval = builtin_evaluator(held_out(&mut rng));
    for (it, m) in picked.iter().zip(&models) {
        println!("  iteration {it:>3}: held-out loss {:.4}", eval.loss(m)?);
    }

    let fit = smoothing::estimate_weights(&models, &eval, &SmoothingOptions::default())?;
    println!(
        "uniform average: {:.4}, tuned: {:.4} after {} steps",
        fit.initial_loss, fit.loss, fit.iterations
    );
    print!("{}", smoothing::render_weights(&fit.weights));

    let smoothed = smoothing::interpolate(&models, &fit.weights)?;
    println!("smoothed model loss: {:.4}", eval.loss(&smoothed)?);

    // Any loss function works; here the weights recover a known mixture.
    let scalars: Vec<ParamBundle> = [0.0, 1.0]
        .iter()
        .map(|&v| ParamBundle::new(vec![Layer { name: "x".into(), values: vec![v] }]))
        .collect::<Result<_, _>>()?;
    let target = |b: &ParamBundle| (b.layer("x").unwrap_or(&[0.0])[0] - 0.3).powi(2);
    let fit = smoothing::estimate_weights(&scalars, &target, &SmoothingOptions::default())?;
    println!("\nscalar mixture for 0.3: {:?}", fit.weights.rows()[0]);
    Ok(())
}
