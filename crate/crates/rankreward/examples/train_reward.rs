//! Train the turn-level reward model and measure how well its accumulated
//! returns rank held-out trajectories.
//!
//! ```sh
//! cargo run --release --example train_reward
//! ```

use rankreward::ranking::{LossKind, Transform};
use rankreward::reward::{
    pairwise_ranking_accuracy, train_reward, RewardModel, RewardTrainConfig,
};
use rankreward::slotworld::{generate_dataset, reward_config, reward_dataset, EnvConfig};

fn main() {
    let env = EnvConfig::default();
    let corpus = generate_dataset(&env, 2000, &[0.0, 0.3, 0.6, 0.9, 1.0], 42).unwrap();
    let examples = reward_dataset(&env, &corpus).unwrap();
    let split = examples.len() * 4 / 5;
    let (train, held_out) = examples.split_at(split);
    println!("{} training / {} held-out trajectories\n", train.len(), held_out.len());

    let model = RewardModel::new(reward_config(&env));
    println!(
        "{:<24} {:>4} {:>10} {:>10}",
        "objective", "N", "final loss", "held-out acc"
    );
    for (name, loss, transform, n) in [
        ("cross-entropy, escort-1", LossKind::RewardNet, Transform::escort(1).unwrap(), 3),
        ("cross-entropy, escort-1", LossKind::RewardNet, Transform::escort(1).unwrap(), 2),
        ("rank-mle, softmax", LossKind::RewardMle, Transform::softmax(), 3),
        ("rank-mle, softmax", LossKind::RewardMle, Transform::softmax(), 2),
        ("rank-mle, softmax", LossKind::RewardMle, Transform::softmax(), 5),
    ] {
        let cfg = RewardTrainConfig {
            loss,
            list_size: n,
            transform,
            iterations: 2000,
            learning_rate: 0.05,
            seed: 7,
        };
        let out = train_reward(&model, train, &cfg).unwrap();
        let acc = pairwise_ranking_accuracy(&model, &out.params, held_out).unwrap();
        let final_loss = out.trace.last().map(|(_, l)| *l).unwrap_or(f64::NAN);
        println!("{name:<24} {n:>4} {final_loss:>10.4} {acc:>10.4}");
    }
    println!("\n(chance level is 0.5; returns of better-scored dialogues should be larger)");
}
