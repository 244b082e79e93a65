//! SlotWorld: a synthetic goal-oriented dialogue environment.
//!
//! A scripted user pursues a goal made of constraint slots (each with a small
//! value domain) and a set of requested info slots. One dialogue turn is a
//! pair `(user observation tokens, system action token)`:
//!
//! ```text
//! turn 0..K-1   user informs constraint slot s      expert: ack(s)
//! turn K        user asks for an entity, restating  expert: offer(entity)
//!               all constraint values
//! turn K+1..    user requests info slot r           expert: answer(r)
//! last turn     user says bye                       expert: end
//! ```
//!
//! The correct entity is a deterministic lookup from the constraint values
//! (their sum modulo the domain size), standing in for a database query. The
//! expert's action is always computable from the current observation alone,
//! so dialogues are solvable within a short history window.
//!
//! Trajectories are scored in the shape of the usual dialogue metrics:
//! `inform` (correct entity offered), `success` (inform plus every requested
//! slot answered), a `fluency` analog (modified unigram+bigram precision of
//! the system tokens against the expert reference), and
//! `combined = (inform + success) * 0.5 + fluency`.
//!
//! Corpus generation corrupts the expert with per-dialogue action noise so
//! that combined scores spread over the full range, which is what gives the
//! reward-learning losses a non-trivial ranking signal.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::{HistoryFeatures, PolicyConfig, PolicyDatum};
use crate::reward::{ActionInput, RewardExample, RewardModelConfig, TurnInput};

/// Maximum dialogue length in turns.
pub const MAX_TURNS: usize = 8;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("trajectories have different goals")]
    GoalMismatch,
    #[error("corpus parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("token {0} is not a system action")]
    NotAnAction(u32),
}

/// Environment shape. The defaults give a vocabulary of 69 tokens and an
/// action space of 40 system tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Number of constraint slots `K`.
    pub constraint_slots: usize,
    /// Values per constraint slot.
    pub constraint_domain: usize,
    /// Number of requestable info slots.
    pub info_slots: usize,
    /// Extra system tokens that are never correct, padding the action space.
    pub filler_tokens: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            constraint_slots: 3,
            constraint_domain: 8,
            info_slots: 3,
            filler_tokens: 24,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(1..=4).contains(&self.constraint_slots) {
            return Err(EnvError::InvalidConfig(
                "constraint_slots must be in 1..=4".into(),
            ));
        }
        if !(2..=8).contains(&self.constraint_domain) {
            return Err(EnvError::InvalidConfig(
                "constraint_domain must be in 2..=8".into(),
            ));
        }
        // K informs + entity turn + info requests + bye must fit in MAX_TURNS.
        if self.constraint_slots + self.info_slots + 2 > MAX_TURNS {
            return Err(EnvError::InvalidConfig(format!(
                "dialogues would exceed {MAX_TURNS} turns"
            )));
        }
        Ok(())
    }

    // User token ids.
    pub fn inform_token(&self, slot: usize, value: usize) -> u32 {
        (slot * self.constraint_domain + value) as u32
    }
    pub fn request_entity_token(&self) -> u32 {
        (self.constraint_slots * self.constraint_domain) as u32
    }
    pub fn request_info_token(&self, slot: usize) -> u32 {
        self.request_entity_token() + 1 + slot as u32
    }
    pub fn bye_token(&self) -> u32 {
        self.request_entity_token() + 1 + self.info_slots as u32
    }
    fn user_token_count(&self) -> usize {
        self.constraint_slots * self.constraint_domain + self.info_slots + 2
    }

    // System tokens, identified by their action index 0..action_count.
    pub fn ack_action(&self, slot: usize) -> usize {
        slot
    }
    pub fn offer_action(&self, entity: usize) -> usize {
        self.constraint_slots + entity
    }
    pub fn answer_action(&self, slot: usize) -> usize {
        self.constraint_slots + self.constraint_domain + slot
    }
    pub fn end_action(&self) -> usize {
        self.constraint_slots + self.constraint_domain + self.info_slots
    }
    pub fn stall_action(&self) -> usize {
        self.end_action() + 1
    }
    pub fn action_count(&self) -> usize {
        self.stall_action() + 1 + self.filler_tokens
    }

    pub fn action_token(&self, action: usize) -> u32 {
        debug_assert!(action < self.action_count());
        (self.user_token_count() + action) as u32
    }
    pub fn action_index(&self, token: u32) -> Result<usize, EnvError> {
        let idx = (token as usize).checked_sub(self.user_token_count());
        match idx {
            Some(a) if a < self.action_count() => Ok(a),
            _ => Err(EnvError::NotAnAction(token)),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.user_token_count() + self.action_count()
    }

    /// Entity id implied by a full set of constraint values.
    pub fn entity_for(&self, constraints: &[usize]) -> usize {
        constraints.iter().sum::<usize>() % self.constraint_domain
    }

    /// Id-space sizes of the encoded reward-model inputs.
    pub fn belief_vocab(&self) -> usize {
        self.constraint_slots * (self.constraint_domain + 1)
    }
    pub fn goal_vocab(&self) -> usize {
        self.belief_vocab() + self.info_slots * 2
    }
    /// History ids cover observation tokens plus offset-encoded actions.
    pub fn history_vocab(&self) -> usize {
        self.vocab_size() + self.action_count()
    }
}

/// User goal: one value per constraint slot plus requested info slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub constraints: Vec<usize>,
    pub requested: Vec<usize>,
}

/// One dialogue turn: observation token bag and the system action token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub obs: Vec<u32>,
    pub act: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub goal: Goal,
    pub turns: Vec<Turn>,
    pub terminal: bool,
}

/// Per-trajectory automatic evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub inform: f64,
    pub success: f64,
    pub fluency: f64,
    pub combined: f64,
}

impl ScoreBreakdown {
    pub fn zero() -> Self {
        ScoreBreakdown {
            inform: 0.0,
            success: 0.0,
            fluency: 0.0,
            combined: 0.0,
        }
    }
}

/// `(inform + success) * 0.5 + fluency`.
pub fn combined_score(inform: f64, success: f64, fluency: f64) -> f64 {
    (inform + success) * 0.5 + fluency
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTrajectory {
    pub trajectory: Trajectory,
    pub score: ScoreBreakdown,
}

pub fn sample_goal<R: Rng>(cfg: &EnvConfig, rng: &mut R) -> Goal {
    let constraints = (0..cfg.constraint_slots)
        .map(|_| rng.gen_range(0..cfg.constraint_domain))
        .collect();
    let requested = (0..cfg.info_slots).filter(|_| rng.gen::<bool>()).collect();
    Goal {
        constraints,
        requested,
    }
}

/// The user side of the dialogue, independent of system behavior.
pub fn user_script(cfg: &EnvConfig, goal: &Goal) -> Vec<Vec<u32>> {
    let mut script = Vec::new();
    for (s, &v) in goal.constraints.iter().enumerate() {
        script.push(vec![cfg.inform_token(s, v)]);
    }
    let mut recap = vec![cfg.request_entity_token()];
    for (s, &v) in goal.constraints.iter().enumerate() {
        recap.push(cfg.inform_token(s, v));
    }
    script.push(recap);
    for &r in &goal.requested {
        script.push(vec![cfg.request_info_token(r)]);
    }
    script.push(vec![cfg.bye_token()]);
    script
}

/// Expert response implied by the current observation alone.
pub fn expert_action(cfg: &EnvConfig, obs: &[u32]) -> usize {
    if obs.contains(&cfg.bye_token()) {
        return cfg.end_action();
    }
    if obs.contains(&cfg.request_entity_token()) {
        // Decode the restated constraint values and look the entity up.
        let mut values = vec![0usize; cfg.constraint_slots];
        for &tok in obs {
            let t = tok as usize;
            if t < cfg.constraint_slots * cfg.constraint_domain {
                values[t / cfg.constraint_domain] = t % cfg.constraint_domain;
            }
        }
        return cfg.offer_action(cfg.entity_for(&values));
    }
    for r in 0..cfg.info_slots {
        if obs.contains(&cfg.request_info_token(r)) {
            return cfg.answer_action(r);
        }
    }
    for &tok in obs {
        let t = tok as usize;
        if t < cfg.constraint_slots * cfg.constraint_domain {
            return cfg.ack_action(t / cfg.constraint_domain);
        }
    }
    cfg.stall_action()
}

pub fn expert_trajectory(cfg: &EnvConfig, goal: &Goal) -> Trajectory {
    let turns = user_script(cfg, goal)
        .into_iter()
        .map(|obs| {
            let act = cfg.action_token(expert_action(cfg, &obs));
            Turn { obs, act }
        })
        .collect();
    Trajectory {
        goal: goal.clone(),
        turns,
        terminal: true,
    }
}

/// Generate a scored corpus by corrupting the expert with action noise.
///
/// Dialogue `i` uses `noise_levels[i % len]` as its substitution probability.
/// A corrupted turn replaces the expert action with the stall token (90%) or
/// a uniformly random system token (10%), which skews low-quality dialogues
/// toward a consistent wrong response the way dull generic replies do.
pub fn generate_dataset(
    cfg: &EnvConfig,
    num_dialogues: usize,
    noise_levels: &[f64],
    seed: u64,
) -> Result<Vec<ScoredTrajectory>, EnvError> {
    cfg.validate()?;
    if num_dialogues == 0 {
        return Err(EnvError::InvalidConfig("num_dialogues must be >= 1".into()));
    }
    if noise_levels.is_empty() {
        return Err(EnvError::InvalidConfig("noise_levels must not be empty".into()));
    }
    if noise_levels.iter().any(|n| !(0.0..=1.0).contains(n)) {
        return Err(EnvError::InvalidConfig(
            "noise levels must lie in [0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Vec::with_capacity(num_dialogues);
    for i in 0..num_dialogues {
        let goal = sample_goal(cfg, &mut rng);
        let reference = expert_trajectory(cfg, &goal);
        let noise = noise_levels[i % noise_levels.len()];
        let mut trajectory = reference.clone();
        for turn in &mut trajectory.turns {
            if rng.gen::<f64>() < noise {
                let substitute = if rng.gen::<f64>() < 0.9 {
                    cfg.stall_action()
                } else {
                    rng.gen_range(0..cfg.action_count())
                };
                turn.act = cfg.action_token(substitute);
            }
        }
        let score = score_trajectory(cfg, &trajectory, &reference)?;
        corpus.push(ScoredTrajectory { trajectory, score });
    }
    Ok(corpus)
}

fn ngram_precision(candidate: &[usize], reference: &[usize], n: usize) -> Option<f64> {
    if candidate.len() < n {
        return None;
    }
    let mut ref_counts: BTreeMap<&[usize], usize> = BTreeMap::new();
    for gram in reference.windows(n) {
        *ref_counts.entry(gram).or_insert(0) += 1;
    }
    let mut cand_counts: BTreeMap<&[usize], usize> = BTreeMap::new();
    for gram in candidate.windows(n) {
        *cand_counts.entry(gram).or_insert(0) += 1;
    }
    let clipped: usize = cand_counts
        .iter()
        .map(|(gram, count)| (*count).min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    Some(clipped as f64 / (candidate.len() - n + 1) as f64)
}

/// Score a trajectory against the expert reference for the same goal.
pub fn score_trajectory(
    cfg: &EnvConfig,
    trajectory: &Trajectory,
    reference: &Trajectory,
) -> Result<ScoreBreakdown, EnvError> {
    if trajectory.goal != reference.goal {
        return Err(EnvError::GoalMismatch);
    }
    if trajectory.turns.is_empty() {
        return Ok(ScoreBreakdown::zero());
    }
    let actions: Vec<usize> = trajectory
        .turns
        .iter()
        .map(|t| cfg.action_index(t.act))
        .collect::<Result<_, _>>()?;
    let ref_actions: Vec<usize> = reference
        .turns
        .iter()
        .map(|t| cfg.action_index(t.act))
        .collect::<Result<_, _>>()?;

    let entity = cfg.entity_for(&trajectory.goal.constraints);
    let inform = actions.contains(&cfg.offer_action(entity));
    let success = inform
        && trajectory
            .goal
            .requested
            .iter()
            .all(|&r| actions.contains(&cfg.answer_action(r)));

    let p1 = ngram_precision(&actions, &ref_actions, 1).unwrap_or(0.0);
    let fluency = match ngram_precision(&actions, &ref_actions, 2) {
        Some(p2) => 100.0 * (p1 + p2) / 2.0,
        None => 100.0 * p1,
    };

    let inform = if inform { 100.0 } else { 0.0 };
    let success = if success { 100.0 } else { 0.0 };
    Ok(ScoreBreakdown {
        inform,
        success,
        fluency,
        combined: combined_score(inform, success, fluency),
    })
}

// --- policy interface -------------------------------------------------------

/// What a system policy sees when choosing an action.
pub struct TurnContext<'a> {
    /// Bag of history ids over the configured window (see [`history_bag`]).
    pub history: &'a [u32],
    /// Raw observation tokens of the current turn.
    pub current_obs: &'a [u32],
}

pub trait SystemPolicy {
    fn choose_action(&mut self, ctx: &TurnContext<'_>) -> usize;
}

/// The scripted expert wrapped as a policy.
pub struct ExpertPolicy<'a> {
    pub cfg: &'a EnvConfig,
}

impl SystemPolicy for ExpertPolicy<'_> {
    fn choose_action(&mut self, ctx: &TurnContext<'_>) -> usize {
        expert_action(self.cfg, ctx.current_obs)
    }
}

/// Uniform-random baseline policy.
pub struct UniformRandomPolicy {
    pub action_count: usize,
    pub rng: ChaCha8Rng,
}

impl SystemPolicy for UniformRandomPolicy {
    fn choose_action(&mut self, _ctx: &TurnContext<'_>) -> usize {
        self.rng.gen_range(0..self.action_count)
    }
}

/// Bag-of-ids dialogue history over a sliding window of
/// [`crate::policy::HISTORY_WINDOW`] turns: the preceding turns'
/// observations and actions plus the current observation. Action tokens are
/// offset past the vocabulary so they embed separately from observations.
pub fn history_bag(cfg: &EnvConfig, previous_turns: &[Turn], current_obs: &[u32]) -> Vec<u32> {
    let keep = crate::policy::HISTORY_WINDOW - 1;
    let start = previous_turns.len().saturating_sub(keep);
    let mut bag = Vec::new();
    for prev in &previous_turns[start..] {
        bag.extend_from_slice(&prev.obs);
        if let Ok(action) = cfg.action_index(prev.act) {
            bag.push((cfg.vocab_size() + action) as u32);
        }
    }
    bag.extend_from_slice(current_obs);
    bag
}

/// Roll one dialogue for `goal` with the supplied policy.
pub fn rollout(cfg: &EnvConfig, goal: &Goal, policy: &mut dyn SystemPolicy) -> Trajectory {
    let mut turns: Vec<Turn> = Vec::new();
    for obs in user_script(cfg, goal) {
        let history = history_bag(cfg, &turns, &obs);
        let action = policy.choose_action(&TurnContext {
            history: &history,
            current_obs: &obs,
        });
        turns.push(Turn {
            obs,
            act: cfg.action_token(action),
        });
    }
    Trajectory {
        goal: goal.clone(),
        turns,
        terminal: true,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeScore {
    pub episode: usize,
    pub score: ScoreBreakdown,
}

/// Greedy evaluation over sampled goals; returns the per-metric means and the
/// per-episode scores.
pub fn evaluate_policy(
    cfg: &EnvConfig,
    policy: &mut dyn SystemPolicy,
    episodes: usize,
    seed: u64,
) -> (ScoreBreakdown, Vec<EpisodeScore>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(episodes);
    let mut mean = ScoreBreakdown::zero();
    for episode in 0..episodes {
        let goal = sample_goal(cfg, &mut rng);
        let reference = expert_trajectory(cfg, &goal);
        let trajectory = rollout(cfg, &goal, policy);
        let score = score_trajectory(cfg, &trajectory, &reference)
            .expect("rollout shares the reference goal");
        mean.inform += score.inform;
        mean.success += score.success;
        mean.fluency += score.fluency;
        mean.combined += score.combined;
        rows.push(EpisodeScore { episode, score });
    }
    if episodes > 0 {
        let n = episodes as f64;
        mean.inform /= n;
        mean.success /= n;
        mean.fluency /= n;
        mean.combined /= n;
    }
    (mean, rows)
}

/// `episode,inform,success,fluency,combined` CSV.
pub fn evaluation_csv(rows: &[EpisodeScore]) -> String {
    let mut out = String::from("episode,inform,success,fluency,combined\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.episode, row.score.inform, row.score.success, row.score.fluency, row.score.combined
        );
    }
    out
}

// --- serialization ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CorpusLine {
    goal: Goal,
    turns: Vec<Turn>,
    score: ScoreBreakdown,
}

/// One JSON object per line: `{goal, turns, score}`.
pub fn corpus_to_jsonl(corpus: &[ScoredTrajectory]) -> String {
    let mut out = String::new();
    for item in corpus {
        let line = CorpusLine {
            goal: item.trajectory.goal.clone(),
            turns: item.trajectory.turns.clone(),
            score: item.score,
        };
        out.push_str(&serde_json::to_string(&line).expect("corpus serializes"));
        out.push('\n');
    }
    out
}

pub fn corpus_from_jsonl(text: &str) -> Result<Vec<ScoredTrajectory>, EnvError> {
    let mut corpus = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CorpusLine = serde_json::from_str(line).map_err(|e| EnvError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        corpus.push(ScoredTrajectory {
            trajectory: Trajectory {
                goal: parsed.goal,
                turns: parsed.turns,
                terminal: true,
            },
            score: parsed.score,
        });
    }
    Ok(corpus)
}

// --- model input encodings ---------------------------------------------------

/// Belief-state ids after observing `turns_so_far` observations: one id per
/// constraint slot, `slot_base + 0` when uninformed, `slot_base + 1 + value`
/// once the user has stated the value.
fn belief_ids(cfg: &EnvConfig, observations: &[&[u32]]) -> Vec<usize> {
    let mut values: Vec<Option<usize>> = vec![None; cfg.constraint_slots];
    for obs in observations {
        for &tok in *obs {
            let t = tok as usize;
            if t < cfg.constraint_slots * cfg.constraint_domain {
                values[t / cfg.constraint_domain] = Some(t % cfg.constraint_domain);
            }
        }
    }
    values
        .iter()
        .enumerate()
        .map(|(s, v)| s * (cfg.constraint_domain + 1) + v.map_or(0, |v| v + 1))
        .collect()
}

fn goal_ids(cfg: &EnvConfig, goal: &Goal) -> Vec<usize> {
    let mut ids: Vec<usize> = goal
        .constraints
        .iter()
        .enumerate()
        .map(|(s, &v)| s * (cfg.constraint_domain + 1) + v + 1)
        .collect();
    for j in 0..cfg.info_slots {
        let requested = goal.requested.contains(&j);
        ids.push(cfg.belief_vocab() + j * 2 + usize::from(requested));
    }
    ids
}

/// Per-slot categorical labels for dialogue-state supervision: `0` for
/// uninformed, `1 + value` otherwise.
fn belief_labels(cfg: &EnvConfig, observations: &[&[u32]]) -> Vec<usize> {
    belief_ids(cfg, observations)
        .iter()
        .enumerate()
        .map(|(s, id)| id - s * (cfg.constraint_domain + 1))
        .collect()
}

/// Reward-model view of a scored corpus: per-turn `(belief, action, goal)`
/// inputs plus the combined score.
pub fn reward_dataset(cfg: &EnvConfig, corpus: &[ScoredTrajectory]) -> Result<Vec<RewardExample>, EnvError> {
    corpus
        .iter()
        .map(|item| {
            let goal = goal_ids(cfg, &item.trajectory.goal);
            let mut seen: Vec<&[u32]> = Vec::new();
            let turns = item
                .trajectory
                .turns
                .iter()
                .map(|turn| {
                    seen.push(&turn.obs);
                    Ok(TurnInput {
                        belief: belief_ids(cfg, &seen),
                        action: ActionInput::Discrete(cfg.action_index(turn.act)?),
                        goal: goal.clone(),
                    })
                })
                .collect::<Result<Vec<_>, EnvError>>()?;
            Ok(RewardExample {
                turns,
                score: item.score.combined,
            })
        })
        .collect()
}

/// Policy-model view of a scored corpus: one datum per turn with history
/// features, the dataset action, DST labels, and the reward-model input.
pub fn policy_dataset(cfg: &EnvConfig, corpus: &[ScoredTrajectory]) -> Result<Vec<PolicyDatum>, EnvError> {
    let mut data = Vec::new();
    for item in corpus {
        let goal = goal_ids(cfg, &item.trajectory.goal);
        let mut seen: Vec<&[u32]> = Vec::new();
        for (t, turn) in item.trajectory.turns.iter().enumerate() {
            seen.push(&turn.obs);
            data.push(PolicyDatum {
                history: HistoryFeatures {
                    ids: history_bag(cfg, &item.trajectory.turns[..t], &turn.obs),
                },
                action: cfg.action_index(turn.act)?,
                belief_labels: belief_labels(cfg, &seen),
                reward_input: TurnInput {
                    belief: belief_ids(cfg, &seen),
                    action: ActionInput::Discrete(cfg.action_index(turn.act)?),
                    goal: goal.clone(),
                },
            });
        }
    }
    Ok(data)
}

/// Reward-model dimensions implied by the environment.
pub fn reward_config(cfg: &EnvConfig) -> RewardModelConfig {
    RewardModelConfig {
        belief_vocab: cfg.belief_vocab(),
        action_vocab: cfg.action_count(),
        goal_vocab: cfg.goal_vocab(),
        embed_dim: 16,
        hidden_dim: 32,
    }
}

/// Policy dimensions implied by the environment.
pub fn policy_config(cfg: &EnvConfig) -> PolicyConfig {
    PolicyConfig {
        history_vocab: cfg.history_vocab(),
        action_count: cfg.action_count(),
        belief_slots: vec![cfg.constraint_domain + 1; cfg.constraint_slots],
        embed_dim: 16,
        hidden_dim: 32,
    }
}
