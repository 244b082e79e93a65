//! Categorical reward maximization with the three gradient estimators.
//!
//! Reproduces the estimator comparison: the exact gradient and the
//! Gumbel-softmax estimator reach the global optimum (~0.533) while
//! single-sample REINFORCE typically stalls below it with orders of
//! magnitude higher gradient variance.
//!
//! ```sh
//! cargo run --release --example toy_experiment
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rankreward::toy::{exact_objective, grad_variance_estimate, run_toy, ToyConfig};
use rankreward::Estimator;

fn main() {
    let base = ToyConfig::default();
    println!(
        "D={} R={} lr={} steps={} (optimum ≈ {:.4})",
        base.categories,
        base.reward_scale,
        base.learning_rate,
        base.steps,
        0.5 + 1.0 / base.reward_scale as f64
    );
    println!("initial objective: {:.6}", exact_objective(&vec![0.0; base.categories], 30, 30));
    println!();

    println!("{:<16} {:>10} {:>12} {:>12}", "estimator", "final", "p_D(final)", "variance@0");
    for estimator in [Estimator::Exact, Estimator::Reinforce, Estimator::GumbelSoftmax] {
        let cfg = ToyConfig {
            estimator,
            seed: 5,
            ..base.clone()
        };
        let trace = run_toy(&cfg).unwrap();
        let last_probs = &trace.snapshots.last().unwrap().probs;
        let mut rng = ChaCha8Rng::seed_from_u64(777);
        let variance = grad_variance_estimate(
            &vec![0.0; cfg.categories],
            estimator,
            cfg.variance_samples,
            &cfg,
            &mut rng,
        );
        println!(
            "{:<16} {:>10.6} {:>12.6} {:>12.3e}",
            format!("{estimator:?}"),
            trace.final_objective(),
            last_probs[cfg.categories - 1],
            variance
        );
    }
    println!();
    println!("run `rankreward toy --config configs/toy.json --out out/toy` for the CSV traces");
}
