//! End-to-end exercises of the `rankreward` binary: the full command
//! pipeline, exit codes, and output determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rankreward"))
}

fn run(subcommand: &str, config: &Path, out: &Path) -> Output {
    bin()
        .arg(subcommand)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_json(path: &Path, contents: &str) {
    fs::write(path, contents).unwrap();
}

#[test]
fn full_pipeline_through_the_binary() {
    let root = tempfile::tempdir().unwrap();
    let cfg_dir = root.path().join("configs");
    fs::create_dir_all(&cfg_dir).unwrap();

    let gen_cfg = cfg_dir.join("gen.json");
    write_json(&gen_cfg, r#"{"seed": 11, "num_dialogues": 250}"#);
    let gen_out = root.path().join("corpus");
    let out = run("gen-data", &gen_cfg, &gen_out);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(gen_out.join("corpus.jsonl").exists());
    assert!(gen_out.join("resolved_config.json").exists());

    let corpus = gen_out.join("corpus.jsonl");
    let reward_cfg = cfg_dir.join("reward.json");
    write_json(
        &reward_cfg,
        &format!(
            r#"{{"seed": 11, "corpus": {:?}, "loss": "reward_net", "list_size": 3,
               "transform": {{"escort": 1}}, "iterations": 300, "learning_rate": 0.05}}"#,
            corpus
        ),
    );
    let reward_out = root.path().join("reward");
    let out = run("train-reward", &reward_cfg, &reward_out);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(reward_out.join("reward_trace.csv")).unwrap();
    assert!(trace.starts_with("step,loss\n"));
    assert_eq!(trace.lines().count(), 301);

    let policy_cfg = cfg_dir.join("policy.json");
    write_json(
        &policy_cfg,
        &format!(
            r#"{{"seed": 11, "corpus": {:?},
               "reward": {{"checkpoint": {:?}}},
               "estimator": "gumbel_softmax", "alpha": 0.1,
               "iterations": 300, "learning_rate": 0.15, "batch_size": 8}}"#,
            corpus,
            reward_out.join("reward_checkpoint.txt")
        ),
    );
    let policy_out = root.path().join("policy");
    let out = run("train-policy", &policy_cfg, &policy_out);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(policy_out.join("policy_trace.csv")).unwrap();
    assert!(trace.starts_with("step,gen_loss,dst_loss,jgs_estimate\n"));

    let eval_cfg = cfg_dir.join("eval.json");
    write_json(
        &eval_cfg,
        &format!(
            r#"{{"seed": 11, "policy_checkpoint": {:?}, "episodes": 40}}"#,
            policy_out.join("policy_checkpoint.txt")
        ),
    );
    let eval_out = root.path().join("eval");
    let out = run("eval", &eval_cfg, &eval_out);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(eval_out.join("eval.csv")).unwrap();
    assert!(csv.starts_with("episode,inform,success,fluency,combined\n"));
    assert_eq!(csv.lines().count(), 41);
    assert!(String::from_utf8_lossy(&out.stdout).contains("combined"));

    let toy_cfg = cfg_dir.join("toy.json");
    write_json(&toy_cfg, r#"{"steps": 150, "estimator": "reinforce"}"#);
    let toy_out = root.path().join("toy");
    let out = run("toy", &toy_cfg, &toy_out);
    assert!(out.status.success());
    assert!(toy_out.join("toy_trace.csv").exists());
    assert!(toy_out.join("probs_snapshot.csv").exists());
}

#[test]
fn toy_with_defaults_reaches_the_optimum_region() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("toy.json");
    write_json(&cfg, r#"{"seed": 5}"#);
    let out_dir = root.path().join("toy");
    let out = run("toy", &cfg, &out_dir);
    assert!(out.status.success());
    let trace = fs::read_to_string(out_dir.join("toy_trace.csv")).unwrap();
    let last = trace.lines().last().unwrap();
    let objective: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(objective >= 0.530, "default toy run ended at {objective}");
}

#[test]
fn rerunning_a_command_is_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("gen.json");
    write_json(&cfg, r#"{"seed": 4, "num_dialogues": 100}"#);
    let out_a = root.path().join("a");
    let out_b = root.path().join("b");
    assert!(run("gen-data", &cfg, &out_a).status.success());
    assert!(run("gen-data", &cfg, &out_b).status.success());
    assert_eq!(
        fs::read(out_a.join("corpus.jsonl")).unwrap(),
        fs::read(out_b.join("corpus.jsonl")).unwrap()
    );
    assert_eq!(
        fs::read(out_a.join("resolved_config.json")).unwrap(),
        fs::read(out_b.join("resolved_config.json")).unwrap()
    );
}

#[test]
fn config_errors_exit_2_with_one_line_message() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("bad.json");
    write_json(&cfg, r#"{"seed": 1, "not_a_field": true}"#);
    let out = run("gen-data", &cfg, &root.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("config-error: "), "stderr: {stderr}");
    assert_eq!(stderr.trim_end().lines().count(), 1);
}

#[test]
fn missing_inputs_exit_3() {
    let root = tempfile::tempdir().unwrap();
    // Missing config file.
    let out = run("toy", &root.path().join("nope.json"), &root.path().join("o"));
    assert_eq!(out.status.code(), Some(3));
    // Missing corpus.
    let cfg = root.path().join("reward.json");
    write_json(&cfg, r#"{"corpus": "/definitely/not/here.jsonl"}"#);
    let out = run("train-reward", &cfg, &root.path().join("o2"));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("missing-input: "));
}

#[test]
fn numerical_aborts_exit_4() {
    let root = tempfile::tempdir().unwrap();
    // A corpus whose scores are all tied cannot produce ranked batches.
    let gen_cfg = root.path().join("gen.json");
    write_json(&gen_cfg, r#"{"seed": 2, "num_dialogues": 40, "noise_levels": [0.0]}"#);
    let gen_out = root.path().join("corpus");
    assert!(run("gen-data", &gen_cfg, &gen_out).status.success());

    let reward_cfg = root.path().join("reward.json");
    write_json(
        &reward_cfg,
        &format!(
            r#"{{"corpus": {:?}, "iterations": 50}}"#,
            gen_out.join("corpus.jsonl")
        ),
    );
    let out = run("train-reward", &reward_cfg, &root.path().join("o"));
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("numerical-abort: "));
}
