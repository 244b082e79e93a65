//! The full pipeline: generate a corpus, learn a reward function from score
//! rankings, train a policy against it, and compare with plain behavior
//! cloning on greedy rollouts.
//!
//! ```sh
//! cargo run --release --example train_policy
//! ```

use rankreward::policy::{
    train_policy, EstimatorConfig, GreedyPolicy, PolicyModel, PolicyTrainConfig, RewardSource,
};
use rankreward::ranking::{LossKind, Transform};
use rankreward::reward::{train_reward, RewardModel, RewardTrainConfig};
use rankreward::slotworld::{
    evaluate_policy, generate_dataset, policy_config, policy_dataset, reward_config,
    reward_dataset, EnvConfig, ExpertPolicy,
};
use rankreward::Estimator;

fn main() {
    let env = EnvConfig::default();
    let seed = 1;
    println!("generating corpus...");
    let corpus = generate_dataset(&env, 2000, &[0.0, 0.3, 0.6, 0.9, 1.0], 42).unwrap();
    let reward_examples = reward_dataset(&env, &corpus).unwrap();
    let policy_data = policy_dataset(&env, &corpus).unwrap();

    println!("training reward model (cross-entropy loss, N=3, escort power 1)...");
    let reward_model = RewardModel::new(reward_config(&env));
    let reward_cfg = RewardTrainConfig {
        loss: LossKind::RewardNet,
        list_size: 3,
        transform: Transform::escort(1).unwrap(),
        iterations: 2000,
        learning_rate: 0.05,
        seed,
    };
    let reward_params = train_reward(&reward_model, &reward_examples, &reward_cfg)
        .unwrap()
        .params;

    let policy_model = PolicyModel::new(policy_config(&env));
    let train_cfg = PolicyTrainConfig {
        estimator: EstimatorConfig {
            kind: Estimator::GumbelSoftmax,
            temperature: 1.0,
            alpha: 0.1,
        },
        iterations: 4000,
        learning_rate: 0.15,
        batch_size: 8,
        seed,
    };

    println!("training policy with learned reward + relaxed policy gradient (α=0.1)...");
    let learned_source = RewardSource::Learned {
        model: &reward_model,
        params: &reward_params,
    };
    let guided = train_policy(&policy_model, &policy_data, &learned_source, &train_cfg).unwrap();

    println!("training behavior-cloning baseline (α=0, constant reward)...");
    let bc_cfg = PolicyTrainConfig {
        estimator: EstimatorConfig {
            alpha: 0.0,
            ..train_cfg.estimator
        },
        ..train_cfg.clone()
    };
    let baseline =
        train_policy(&policy_model, &policy_data, &RewardSource::Constant(1.0), &bc_cfg).unwrap();

    println!("\ngreedy evaluation over 200 episodes:");
    println!(
        "{:<22} {:>8} {:>8} {:>8} {:>9}",
        "policy", "inform", "success", "fluency", "combined"
    );
    let mut expert = ExpertPolicy { cfg: &env };
    let (mean, _) = evaluate_policy(&env, &mut expert, 200, 900 + seed);
    println!(
        "{:<22} {:>8.1} {:>8.1} {:>8.1} {:>9.2}",
        "scripted expert", mean.inform, mean.success, mean.fluency, mean.combined
    );
    for (name, params) in [
        ("reward-guided (α=0.1)", &guided.params),
        ("behavior cloning", &baseline.params),
    ] {
        let mut policy = GreedyPolicy {
            model: &policy_model,
            params,
        };
        let (mean, _) = evaluate_policy(&env, &mut policy, 200, 900 + seed);
        println!(
            "{:<22} {:>8.1} {:>8.1} {:>8.1} {:>9.2}",
            name, mean.inform, mean.success, mean.fluency, mean.combined
        );
    }
    println!("\n(the corpus is majority-corrupted, so plain cloning imitates the");
    println!(" corruption while the reward weighting recovers expert behavior)");
}
