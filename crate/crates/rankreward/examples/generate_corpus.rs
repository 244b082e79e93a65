//! Generate a scored dialogue corpus and summarize its score distribution.
//!
//! ```sh
//! cargo run --example generate_corpus
//! ```

use std::collections::BTreeMap;

use rankreward::slotworld::{generate_dataset, EnvConfig};

fn main() {
    let env = EnvConfig::default();
    let noise = [0.0, 0.3, 0.6, 0.9, 1.0];
    let corpus = generate_dataset(&env, 1000, &noise, 7).unwrap();

    println!(
        "vocabulary {} tokens, {} system actions, noise levels {noise:?}",
        env.vocab_size(),
        env.action_count()
    );
    println!("{} dialogues generated\n", corpus.len());

    let mut buckets: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for item in &corpus {
        buckets
            .entry(item.trajectory.turns.len())
            .or_default()
            .push(item.score.combined);
    }
    println!("{:>6} {:>7} {:>9} {:>9} {:>9}", "turns", "count", "min", "mean", "max");
    for (len, scores) in &buckets {
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("{len:>6} {:>7} {min:>9.2} {mean:>9.2} {max:>9.2}", scores.len());
    }

    let mut histogram = [0usize; 10];
    for item in &corpus {
        let bin = ((item.score.combined / 20.0) as usize).min(9);
        histogram[bin] += 1;
    }
    println!("\ncombined-score histogram (bin width 20):");
    for (i, count) in histogram.iter().enumerate() {
        println!("{:>3}-{:>3} | {}", i * 20, i * 20 + 20, "#".repeat(count / 4));
    }

    let inform = corpus.iter().filter(|i| i.score.inform == 100.0).count();
    let success = corpus.iter().filter(|i| i.score.success == 100.0).count();
    println!(
        "\ninform rate {:.1}%  success rate {:.1}%",
        100.0 * inform as f64 / corpus.len() as f64,
        100.0 * success as f64 / corpus.len() as f64
    );
}
