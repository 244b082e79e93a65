//! File-based command layer.
//!
//! Each command is a pure function of a JSON config file plus its declared
//! input files, and writes its outputs (plus `resolved_config.json`, the
//! fully-defaulted config that reproduces the run byte-for-byte) into an
//! output directory. Unknown config keys are rejected. All randomness flows
//! from the config seed, so re-running any command yields identical bytes.
//!
//! Commands and their outputs:
//!
//! | command        | inputs                   | outputs                                |
//! |----------------|--------------------------|----------------------------------------|
//! | `gen-data`     | —                        | `corpus.jsonl`                         |
//! | `train-reward` | corpus                   | `reward_checkpoint.txt`, `reward_trace.csv` |
//! | `train-policy` | corpus, reward checkpoint| `policy_checkpoint.txt`, `policy_trace.csv` |
//! | `eval`         | policy checkpoint        | `eval.csv`                             |
//! | `toy`          | —                        | `toy_trace.csv`, `probs_snapshot.csv`  |
//!
//! Exit codes: 0 success, 2 config error, 3 missing or unreadable input,
//! 4 numerical abort, 1 other I/O failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{
    self, EstimatorConfig, GreedyPolicy, PolicyModel, PolicyTrainConfig, RewardSource,
};
use crate::ranking::{LossKind, Transform};
use crate::reward::{self, RewardError, RewardModel, RewardTrainConfig};
use crate::slotworld::{self, EnvConfig};
use crate::toy::{self, ToyConfig};
use crate::Estimator;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config-error: {0}")]
    Config(String),
    #[error("missing-input: {0}")]
    MissingInput(String),
    #[error("numerical-abort: {0}")]
    Numerical(String),
    #[error("io-error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingInput(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))
}

fn prepare_out_dir(out_dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))
}

fn write_resolved_config<T: Serialize>(out_dir: &Path, cfg: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(cfg)
        .map_err(|e| CliError::Io(format!("serializing resolved config: {e}")))?;
    text.push('\n');
    write_output(&out_dir.join("resolved_config.json"), &text)
}

fn parse_config<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

fn load_corpus(path: &Path) -> Result<Vec<slotworld::ScoredTrajectory>, CliError> {
    let text = read_input(path)?;
    slotworld::corpus_from_jsonl(&text)
        .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))
}

fn env_error(e: slotworld::EnvError) -> CliError {
    CliError::Config(e.to_string())
}

// --- command configs ---------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataConfig {
    pub seed: u64,
    pub num_dialogues: usize,
    pub noise_levels: Vec<f64>,
    pub env: EnvConfig,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        GenDataConfig {
            seed: 0,
            num_dialogues: 2000,
            noise_levels: vec![0.0, 0.3, 0.6, 0.9, 1.0],
            env: EnvConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRewardCliConfig {
    pub seed: u64,
    pub corpus: PathBuf,
    pub loss: LossKind,
    pub list_size: usize,
    pub transform: Transform,
    pub iterations: usize,
    pub learning_rate: f64,
    pub env: EnvConfig,
}

impl Default for TrainRewardCliConfig {
    fn default() -> Self {
        TrainRewardCliConfig {
            seed: 0,
            corpus: PathBuf::from("corpus.jsonl"),
            loss: LossKind::RewardNet,
            list_size: 3,
            transform: Transform::escort(1).expect("power 1 is valid"),
            iterations: 2000,
            learning_rate: 0.05,
            env: EnvConfig::default(),
        }
    }
}

/// Reward used during policy training: a trained checkpoint or the
/// constant-reward stub.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardSpec {
    Checkpoint(PathBuf),
    Constant(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainPolicyCliConfig {
    pub seed: u64,
    pub corpus: PathBuf,
    pub reward: RewardSpec,
    pub estimator: Estimator,
    pub alpha: f64,
    pub temperature: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub env: EnvConfig,
}

impl Default for TrainPolicyCliConfig {
    fn default() -> Self {
        TrainPolicyCliConfig {
            seed: 0,
            corpus: PathBuf::from("corpus.jsonl"),
            reward: RewardSpec::Constant(1.0),
            estimator: Estimator::GumbelSoftmax,
            alpha: 0.1,
            temperature: 1.0,
            iterations: 2000,
            learning_rate: 0.1,
            batch_size: 8,
            env: EnvConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub seed: u64,
    pub policy_checkpoint: PathBuf,
    pub episodes: usize,
    pub env: EnvConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seed: 0,
            policy_checkpoint: PathBuf::from("policy_checkpoint.txt"),
            episodes: 200,
            env: EnvConfig::default(),
        }
    }
}

// --- commands -----------------------------------------------------------------

pub fn cmd_gen_data(cfg: &GenDataConfig, out_dir: &Path) -> Result<(), CliError> {
    prepare_out_dir(out_dir)?;
    let corpus = slotworld::generate_dataset(&cfg.env, cfg.num_dialogues, &cfg.noise_levels, cfg.seed)
        .map_err(env_error)?;
    write_resolved_config(out_dir, cfg)?;
    write_output(&out_dir.join("corpus.jsonl"), &slotworld::corpus_to_jsonl(&corpus))
}

pub fn cmd_train_reward(cfg: &TrainRewardCliConfig, out_dir: &Path) -> Result<(), CliError> {
    prepare_out_dir(out_dir)?;
    cfg.env.validate().map_err(env_error)?;
    let corpus = load_corpus(&cfg.corpus)?;
    let examples = slotworld::reward_dataset(&cfg.env, &corpus)
        .map_err(|e| CliError::MissingInput(e.to_string()))?;
    let model = RewardModel::new(slotworld::reward_config(&cfg.env));
    let train_cfg = RewardTrainConfig {
        loss: cfg.loss,
        list_size: cfg.list_size,
        transform: cfg.transform,
        iterations: cfg.iterations,
        learning_rate: cfg.learning_rate,
        seed: cfg.seed,
    };
    let trained = reward::train_reward(&model, &examples, &train_cfg).map_err(|e| match e {
        RewardError::TooManyEmptyBatches { .. } => CliError::Numerical(e.to_string()),
        other => CliError::Numerical(other.to_string()),
    })?;
    write_resolved_config(out_dir, cfg)?;
    let ckpt = trained.params.to_checkpoint_string(
        model.config().fingerprint(),
        &model.config().schema_string(),
    );
    write_output(&out_dir.join("reward_checkpoint.txt"), &ckpt)?;
    let mut trace = String::from("step,loss\n");
    for (step, loss) in &trained.trace {
        let _ = writeln!(trace, "{step},{loss}");
    }
    write_output(&out_dir.join("reward_trace.csv"), &trace)
}

pub fn cmd_train_policy(cfg: &TrainPolicyCliConfig, out_dir: &Path) -> Result<(), CliError> {
    prepare_out_dir(out_dir)?;
    cfg.env.validate().map_err(env_error)?;
    let corpus = load_corpus(&cfg.corpus)?;
    let data = slotworld::policy_dataset(&cfg.env, &corpus)
        .map_err(|e| CliError::MissingInput(e.to_string()))?;
    let policy_model = PolicyModel::new(slotworld::policy_config(&cfg.env));
    let reward_model = RewardModel::new(slotworld::reward_config(&cfg.env));
    let reward_params = match &cfg.reward {
        RewardSpec::Checkpoint(path) => Some(
            reward::load_checkpoint(&reward_model, path)
                .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))?,
        ),
        RewardSpec::Constant(_) => None,
    };
    let source = match (&cfg.reward, &reward_params) {
        (RewardSpec::Constant(c), _) => RewardSource::Constant(*c),
        (RewardSpec::Checkpoint(_), Some(params)) => RewardSource::Learned {
            model: &reward_model,
            params,
        },
        _ => unreachable!(),
    };
    let train_cfg = PolicyTrainConfig {
        estimator: EstimatorConfig {
            kind: cfg.estimator,
            temperature: cfg.temperature,
            alpha: cfg.alpha,
        },
        iterations: cfg.iterations,
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
    };
    let trained = policy::train_policy(&policy_model, &data, &source, &train_cfg)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    write_resolved_config(out_dir, cfg)?;
    let ckpt = trained.params.to_checkpoint_string(
        policy_model.config().fingerprint(),
        &policy_model.config().schema_string(),
    );
    write_output(&out_dir.join("policy_checkpoint.txt"), &ckpt)?;
    let mut trace = String::from("step,gen_loss,dst_loss,jgs_estimate\n");
    for row in &trained.trace {
        let _ = writeln!(
            trace,
            "{},{},{},{}",
            row.step, row.gen_loss, row.dst_loss, row.jgs_estimate
        );
    }
    write_output(&out_dir.join("policy_trace.csv"), &trace)
}

pub fn cmd_eval(cfg: &EvalConfig, out_dir: &Path) -> Result<(), CliError> {
    prepare_out_dir(out_dir)?;
    cfg.env.validate().map_err(env_error)?;
    let policy_model = PolicyModel::new(slotworld::policy_config(&cfg.env));
    let params = policy::load_checkpoint(&policy_model, &cfg.policy_checkpoint).map_err(|e| {
        CliError::MissingInput(format!("{}: {e}", cfg.policy_checkpoint.display()))
    })?;
    let mut greedy = GreedyPolicy {
        model: &policy_model,
        params: &params,
    };
    let (mean, rows) = slotworld::evaluate_policy(&cfg.env, &mut greedy, cfg.episodes, cfg.seed);
    write_resolved_config(out_dir, cfg)?;
    write_output(&out_dir.join("eval.csv"), &slotworld::evaluation_csv(&rows))?;
    println!(
        "inform {:.2} success {:.2} fluency {:.2} combined {:.2}",
        mean.inform, mean.success, mean.fluency, mean.combined
    );
    Ok(())
}

pub fn cmd_toy(cfg: &ToyConfig, out_dir: &Path) -> Result<(), CliError> {
    prepare_out_dir(out_dir)?;
    let trace = toy::run_toy(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    write_resolved_config(out_dir, cfg)?;
    write_output(&out_dir.join("toy_trace.csv"), &trace.trace_csv())?;
    write_output(&out_dir.join("probs_snapshot.csv"), &trace.snapshots_csv())
}

/// Parse the config file for `command` and run it against `out_dir`.
pub fn run_command(command: &str, config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let text = read_input(config_path)?;
    match command {
        "gen-data" => cmd_gen_data(&parse_config(&text)?, out_dir),
        "train-reward" => cmd_train_reward(&parse_config(&text)?, out_dir),
        "train-policy" => cmd_train_policy(&parse_config(&text)?, out_dir),
        "eval" => cmd_eval(&parse_config(&text)?, out_dir),
        "toy" => cmd_toy(&parse_config(&text)?, out_dir),
        other => Err(CliError::Config(format!("unknown command {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn dir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn small_gen_config() -> GenDataConfig {
        GenDataConfig {
            seed: 5,
            num_dialogues: 120,
            ..GenDataConfig::default()
        }
    }

    #[test]
    fn gen_data_writes_corpus_and_resolved_config() {
        let out = dir();
        let cfg = small_gen_config();
        cmd_gen_data(&cfg, out.path()).unwrap();
        let corpus = fs::read_to_string(out.path().join("corpus.jsonl")).unwrap();
        assert_eq!(corpus.lines().count(), 120);
        let resolved = fs::read_to_string(out.path().join("resolved_config.json")).unwrap();
        let back: GenDataConfig = serde_json::from_str(&resolved).unwrap();
        assert_eq!(back.num_dialogues, 120);
    }

    #[test]
    fn rerun_from_resolved_config_is_byte_identical() {
        let out_a = dir();
        cmd_gen_data(&small_gen_config(), out_a.path()).unwrap();
        let resolved = fs::read_to_string(out_a.path().join("resolved_config.json")).unwrap();
        let reparsed: GenDataConfig = serde_json::from_str(&resolved).unwrap();
        let out_b = dir();
        cmd_gen_data(&reparsed, out_b.path()).unwrap();
        for name in ["corpus.jsonl", "resolved_config.json"] {
            let a = fs::read(out_a.path().join(name)).unwrap();
            let b = fs::read(out_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config::<GenDataConfig>("{\"seed\":1,\"bogus\":3}").unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_corpus_is_a_missing_input() {
        let out = dir();
        let cfg = TrainRewardCliConfig {
            corpus: out.path().join("nope.jsonl"),
            ..TrainRewardCliConfig::default()
        };
        let err = cmd_train_reward(&cfg, out.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        // One-line machine-parseable rendering.
        let msg = err.to_string();
        assert!(msg.starts_with("missing-input: "));
        assert_eq!(msg.lines().count(), 1);
    }

    #[test]
    fn toy_command_writes_both_csvs() {
        let out = dir();
        let cfg = ToyConfig {
            steps: 120,
            ..ToyConfig::default()
        };
        cmd_toy(&cfg, out.path()).unwrap();
        let trace = fs::read_to_string(out.path().join("toy_trace.csv")).unwrap();
        assert!(trace.starts_with("step,objective,"));
        assert_eq!(trace.lines().count(), 121);
        let snaps = fs::read_to_string(out.path().join("probs_snapshot.csv")).unwrap();
        assert_eq!(snaps.lines().count(), 3); // header + steps 0 and 100
    }

    #[test]
    fn invalid_toy_config_is_a_config_error() {
        let out = dir();
        let cfg = ToyConfig {
            learning_rate: -1.0,
            ..ToyConfig::default()
        };
        let err = cmd_toy(&cfg, out.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
