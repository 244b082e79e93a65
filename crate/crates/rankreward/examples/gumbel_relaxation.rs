//! The Gumbel-softmax relaxation up close: temperature sharpening and the
//! Gumbel-max sampling law.
//!
//! ```sh
//! cargo run --example gumbel_relaxation
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rankreward::policy::softmax;
use rankreward::toy::sample_gumbel;

fn main() {
    let logits = [1.2, 0.3, -0.5, 0.9, -1.1];
    let probs = softmax(&logits);
    println!("logits {logits:?}");
    println!("softmax {probs:?}\n");

    // One frozen noise draw, relaxed at decreasing temperatures.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let eps: Vec<f64> = (0..logits.len()).map(|_| sample_gumbel(&mut rng)).collect();
    println!("frozen ε {eps:?}");
    for lambda in [4.0, 1.0, 0.25, 0.05, 1e-3] {
        let scaled: Vec<f64> = logits
            .iter()
            .zip(&eps)
            .map(|(l, e)| (l + e) / lambda)
            .collect();
        let relaxed = softmax(&scaled);
        let max = relaxed.iter().cloned().fold(0.0, f64::max);
        println!("λ = {lambda:<6} max entry {max:.4}  {relaxed:?}");
    }
    println!("(λ → 0 recovers the one-hot at argmax(logits + ε))\n");

    // Gumbel-max law: argmax(logits + ε) is distributed as softmax(logits).
    let n = 100_000;
    let mut counts = vec![0usize; logits.len()];
    for _ in 0..n {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, l) in logits.iter().enumerate() {
            let v = l + sample_gumbel(&mut rng);
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        counts[best] += 1;
    }
    println!("argmax frequencies over {n} draws vs softmax probabilities:");
    for (i, (c, p)) in counts.iter().zip(&probs).enumerate() {
        let freq = *c as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        println!(
            "category {i}: freq {freq:.4} target {p:.4} deviation {:+.2}σ",
            (freq - p) / sigma
        );
    }
}
