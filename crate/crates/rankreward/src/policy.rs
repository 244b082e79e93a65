//! Dialogue policy, policy-gradient estimators, and agent training.
//!
//! The policy maps a bag-of-ids dialogue history (two-turn window) to a
//! categorical distribution over system actions, with an auxiliary
//! dialogue-state head per constraint slot. Training minimizes
//!
//! ```text
//! loss(φ) = gen_loss(φ) + dst_loss(φ)
//! gen_loss(φ) = -α · J(π_φ) + weighted_bc(φ)
//! weighted_bc(φ) = -mean[ log π_φ(a_t | h_t) · R(o_t, a_t, g) ]
//! ```
//!
//! where `R` is the frozen reward function and `J(π_φ) = E[R(o, a, g)]` is
//! estimated per [`crate::Estimator`]:
//!
//! * `GumbelSoftmax` draws `ε ~ Gumbel(0,1)^|A|`, forms the relaxed action
//!   `softmax((logits + ε)/λ)`, feeds it through the reward model's convex
//!   action-embedding combination, and differentiates the whole chain back
//!   into `φ` (one draw per batch element),
//! * `Reinforce` is the score-function estimator `∇log π(ã|h) · R(·, ã, ·)`
//!   for a sampled `ã`, unbiased but high-variance,
//! * `Exact` enumerates the action space, serving as the oracle the
//!   stochastic estimators are tested against.
//!
//! The reward factor in `weighted_bc` is a constant weight: no gradient flows
//! into the reward parameters anywhere in this module.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{fingerprint, CheckpointError, ParamSet};
use crate::reward::{ActionInput, RewardError, RewardModel, TurnInput};
use crate::slotworld::{SystemPolicy, TurnContext};
use crate::toy::sample_gumbel;
use crate::Estimator;

/// History window in turns used by the feature encoding.
pub const HISTORY_WINDOW: usize = 2;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("history id {id} out of bounds ({bound})")]
    IdOutOfBounds { id: usize, bound: usize },
    #[error("belief label {label} out of bounds for slot {slot} ({card})")]
    LabelOutOfBounds {
        slot: usize,
        label: usize,
        card: usize,
    },
    #[error("action space of {0} is too large to enumerate")]
    ActionSpaceTooLarge(usize),
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Dimensions of the policy network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub history_vocab: usize,
    pub action_count: usize,
    /// Cardinality of each dialogue-state slot head.
    pub belief_slots: Vec<usize>,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

impl PolicyConfig {
    pub fn schema_string(&self) -> String {
        let slots: Vec<String> = self.belief_slots.iter().map(|s| s.to_string()).collect();
        format!(
            "policy history_vocab={} action_count={} belief_slots={} embed_dim={} hidden_dim={}",
            self.history_vocab,
            self.action_count,
            slots.join("/"),
            self.embed_dim,
            self.hidden_dim
        )
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint(&self.schema_string())
    }
}

/// Bag of history ids over the last [`HISTORY_WINDOW`] turns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryFeatures {
    pub ids: Vec<u32>,
}

/// One training datum: history features, the dataset action, per-slot
/// dialogue-state labels, and the reward-model view of the same turn.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDatum {
    pub history: HistoryFeatures,
    pub action: usize,
    pub belief_labels: Vec<usize>,
    pub reward_input: TurnInput,
}

/// Estimator selection for the policy-gradient term of the loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: Estimator,
    /// Gumbel-softmax temperature `λ`.
    pub temperature: f64,
    /// Weight `α` of the policy-gradient objective in the loss.
    pub alpha: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kind: Estimator::GumbelSoftmax,
            temperature: 1.0,
            alpha: 0.1,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(PolicyError::InvalidConfig("temperature must be > 0".into()));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(PolicyError::InvalidConfig("alpha must be >= 0".into()));
        }
        Ok(())
    }
}

/// Frozen reward used during policy training: a trained model or a constant
/// stub (the behavior-cloning baseline).
pub enum RewardSource<'a> {
    Learned {
        model: &'a RewardModel,
        params: &'a ParamSet,
    },
    Constant(f64),
}

impl RewardSource<'_> {
    pub fn turn_reward(&self, turn: &TurnInput) -> Result<f64, RewardError> {
        match self {
            RewardSource::Learned { model, params } => model.turn_reward(params, turn),
            RewardSource::Constant(c) => Ok(*c),
        }
    }

    fn turn_reward_with_action_grad(
        &self,
        turn: &TurnInput,
        action_count: usize,
    ) -> Result<(f64, Vec<f64>), RewardError> {
        match self {
            RewardSource::Learned { model, params } => {
                model.turn_reward_with_action_grad(params, turn)
            }
            RewardSource::Constant(c) => Ok((*c, vec![0.0; action_count])),
        }
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|e| e / z).collect()
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

struct Forward {
    features: Vec<f64>,
    hidden: Vec<f64>,
    action_logits: Vec<f64>,
}

pub struct PolicyModel {
    cfg: PolicyConfig,
}

impl PolicyModel {
    pub fn new(cfg: PolicyConfig) -> Self {
        PolicyModel { cfg }
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    pub fn zero_params(&self) -> ParamSet {
        let c = &self.cfg;
        let mut p = ParamSet::new();
        p.add("embed", &[c.history_vocab, c.embed_dim]);
        p.add("trunk_w", &[c.hidden_dim, c.embed_dim]);
        p.add("trunk_b", &[c.hidden_dim]);
        p.add("action_w", &[c.action_count, c.hidden_dim]);
        p.add("action_b", &[c.action_count]);
        for (s, card) in c.belief_slots.iter().enumerate() {
            p.add(&format!("belief_w_{s}"), &[*card, c.hidden_dim]);
            p.add(&format!("belief_b_{s}"), &[*card]);
        }
        p
    }

    pub fn init_params<R: Rng>(&self, rng: &mut R) -> ParamSet {
        let mut p = self.zero_params();
        p.init_uniform(-0.1, 0.1, rng);
        p
    }

    fn forward(&self, params: &ParamSet, history: &HistoryFeatures) -> Result<Forward, PolicyError> {
        let c = &self.cfg;
        let embed = params.tensor("embed");
        let mut features = vec![0.0; c.embed_dim];
        if !history.ids.is_empty() {
            let scale = 1.0 / history.ids.len() as f64;
            for &id in &history.ids {
                let id = id as usize;
                if id >= c.history_vocab {
                    return Err(PolicyError::IdOutOfBounds {
                        id,
                        bound: c.history_vocab,
                    });
                }
                for (k, v) in embed.row(id).iter().enumerate() {
                    features[k] += scale * v;
                }
            }
        }
        let trunk_w = params.tensor("trunk_w");
        let trunk_b = params.tensor("trunk_b");
        let hidden: Vec<f64> = (0..c.hidden_dim)
            .map(|i| {
                let pre: f64 = trunk_w
                    .row(i)
                    .iter()
                    .zip(&features)
                    .map(|(w, x)| w * x)
                    .sum::<f64>()
                    + trunk_b.data[i];
                pre.tanh()
            })
            .collect();
        let action_w = params.tensor("action_w");
        let action_b = params.tensor("action_b");
        let action_logits: Vec<f64> = (0..c.action_count)
            .map(|a| {
                action_w
                    .row(a)
                    .iter()
                    .zip(&hidden)
                    .map(|(w, h)| w * h)
                    .sum::<f64>()
                    + action_b.data[a]
            })
            .collect();
        Ok(Forward {
            features,
            hidden,
            action_logits,
        })
    }

    /// Action logits and the softmax distribution for a history.
    pub fn action_distribution(
        &self,
        params: &ParamSet,
        history: &HistoryFeatures,
    ) -> Result<(Vec<f64>, Vec<f64>), PolicyError> {
        let fwd = self.forward(params, history)?;
        let probs = softmax(&fwd.action_logits);
        Ok((fwd.action_logits, probs))
    }

    /// Relaxed action sample `softmax((logits + ε)/λ)` for given noise.
    pub fn gumbel_relaxed_sample(
        &self,
        params: &ParamSet,
        history: &HistoryFeatures,
        eps: &[f64],
        temperature: f64,
    ) -> Result<Vec<f64>, PolicyError> {
        let (logits, _) = self.action_distribution(params, history)?;
        let scaled: Vec<f64> = logits
            .iter()
            .zip(eps)
            .map(|(l, e)| (l + e) / temperature)
            .collect();
        Ok(softmax(&scaled))
    }

    fn belief_logits(&self, params: &ParamSet, hidden: &[f64], slot: usize) -> Vec<f64> {
        let w = params.tensor(&format!("belief_w_{slot}"));
        let b = params.tensor(&format!("belief_b_{slot}"));
        (0..self.cfg.belief_slots[slot])
            .map(|v| {
                w.row(v).iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>() + b.data[v]
            })
            .collect()
    }

    /// Backpropagate head gradients into the parameter gradients.
    fn backward_into(
        &self,
        params: &ParamSet,
        history: &HistoryFeatures,
        fwd: &Forward,
        dlogits_action: Option<&[f64]>,
        dlogits_belief: Option<&[Vec<f64>]>,
        grads: &mut ParamSet,
    ) {
        let c = &self.cfg;
        let mut dh = vec![0.0; c.hidden_dim];
        if let Some(dla) = dlogits_action {
            let action_w = params.tensor("action_w");
            {
                let g_b = grads.tensor_mut("action_b");
                for (g, d) in g_b.data.iter_mut().zip(dla) {
                    *g += d;
                }
            }
            {
                let g_w = grads.tensor_mut("action_w");
                for (a, d) in dla.iter().enumerate() {
                    let row = g_w.row_mut(a);
                    for (k, h) in fwd.hidden.iter().enumerate() {
                        row[k] += d * h;
                    }
                }
            }
            for (a, d) in dla.iter().enumerate() {
                for (k, w) in action_w.row(a).iter().enumerate() {
                    dh[k] += d * w;
                }
            }
        }
        if let Some(slots) = dlogits_belief {
            for (s, dls) in slots.iter().enumerate() {
                let w_name = format!("belief_w_{s}");
                {
                    let g_b = grads.tensor_mut(&format!("belief_b_{s}"));
                    for (g, d) in g_b.data.iter_mut().zip(dls) {
                        *g += d;
                    }
                }
                {
                    let g_w = grads.tensor_mut(&w_name);
                    for (v, d) in dls.iter().enumerate() {
                        let row = g_w.row_mut(v);
                        for (k, h) in fwd.hidden.iter().enumerate() {
                            row[k] += d * h;
                        }
                    }
                }
                let w = params.tensor(&w_name);
                for (v, d) in dls.iter().enumerate() {
                    for (k, wv) in w.row(v).iter().enumerate() {
                        dh[k] += d * wv;
                    }
                }
            }
        }
        let dpre: Vec<f64> = (0..c.hidden_dim)
            .map(|i| dh[i] * (1.0 - fwd.hidden[i] * fwd.hidden[i]))
            .collect();
        {
            let g_b = grads.tensor_mut("trunk_b");
            for (g, d) in g_b.data.iter_mut().zip(&dpre) {
                *g += d;
            }
        }
        {
            let g_w = grads.tensor_mut("trunk_w");
            for (i, d) in dpre.iter().enumerate() {
                let row = g_w.row_mut(i);
                for (k, x) in fwd.features.iter().enumerate() {
                    row[k] += d * x;
                }
            }
        }
        if !history.ids.is_empty() {
            let trunk_w = params.tensor("trunk_w");
            let mut dx = vec![0.0; c.embed_dim];
            for (i, d) in dpre.iter().enumerate() {
                for (k, w) in trunk_w.row(i).iter().enumerate() {
                    dx[k] += d * w;
                }
            }
            let scale = 1.0 / history.ids.len() as f64;
            let g_embed = grads.tensor_mut("embed");
            for &id in &history.ids {
                let row = g_embed.row_mut(id as usize);
                for (k, d) in dx.iter().enumerate() {
                    row[k] += scale * d;
                }
            }
        }
    }
}

fn reward_input_with_action(datum: &PolicyDatum, action: ActionInput) -> TurnInput {
    TurnInput {
        belief: datum.reward_input.belief.clone(),
        action,
        goal: datum.reward_input.goal.clone(),
    }
}

/// Monte-Carlo score-function estimate of `∇_φ E[R]` over a batch, one
/// sampled action per element. Returns the mean sampled reward and the
/// gradient estimate (ascent direction).
pub fn reinforce_grad<R: Rng>(
    model: &PolicyModel,
    params: &ParamSet,
    reward: &RewardSource<'_>,
    batch: &[PolicyDatum],
    rng: &mut R,
) -> Result<(f64, ParamSet), PolicyError> {
    let mut grads = params.zeros_like();
    let mut mean_reward = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for datum in batch {
        let fwd = model.forward(params, &datum.history)?;
        let probs = softmax(&fwd.action_logits);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut sampled = probs.len() - 1;
        for (a, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                sampled = a;
                break;
            }
        }
        let r = reward.turn_reward(&reward_input_with_action(
            datum,
            ActionInput::Discrete(sampled),
        ))?;
        mean_reward += scale * r;
        let dlogits: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(a, p)| scale * r * (if a == sampled { 1.0 } else { 0.0 } - p))
            .collect();
        model.backward_into(params, &datum.history, &fwd, Some(&dlogits), None, &mut grads);
    }
    Ok((mean_reward, grads))
}

/// Relaxed objective and its gradient for one element under frozen noise.
/// Exposed so gradient checks can freeze the stochasticity.
pub fn gs_element_objective_and_grad(
    model: &PolicyModel,
    params: &ParamSet,
    reward: &RewardSource<'_>,
    datum: &PolicyDatum,
    eps: &[f64],
    temperature: f64,
) -> Result<(f64, ParamSet), PolicyError> {
    let fwd = model.forward(params, &datum.history)?;
    let scaled: Vec<f64> = fwd
        .action_logits
        .iter()
        .zip(eps)
        .map(|(l, e)| (l + e) / temperature)
        .collect();
    let relaxed = softmax(&scaled);
    let (objective, dr_ds) = reward.turn_reward_with_action_grad(
        &reward_input_with_action(datum, ActionInput::Simplex(relaxed.clone())),
        model.cfg.action_count,
    )?;
    // Chain through the softmax Jacobian: dr/dl_j = s_j (g_j - <g, s>) / λ.
    let inner: f64 = dr_ds.iter().zip(&relaxed).map(|(g, s)| g * s).sum();
    let dlogits: Vec<f64> = relaxed
        .iter()
        .zip(&dr_ds)
        .map(|(s, g)| s * (g - inner) / temperature)
        .collect();
    let mut grads = params.zeros_like();
    model.backward_into(params, &datum.history, &fwd, Some(&dlogits), None, &mut grads);
    Ok((objective, grads))
}

/// Gumbel-softmax estimate of `E[R]` and `∇_φ E[R]` over a batch, one noise
/// draw per element.
pub fn gs_objective_and_grad<R: Rng>(
    model: &PolicyModel,
    params: &ParamSet,
    reward: &RewardSource<'_>,
    batch: &[PolicyDatum],
    temperature: f64,
    rng: &mut R,
) -> Result<(f64, ParamSet), PolicyError> {
    let mut grads = params.zeros_like();
    let mut objective = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for datum in batch {
        let eps: Vec<f64> = (0..model.cfg.action_count)
            .map(|_| sample_gumbel(rng))
            .collect();
        let (obj, g) =
            gs_element_objective_and_grad(model, params, reward, datum, &eps, temperature)?;
        objective += scale * obj;
        grads.axpy(scale, &g);
    }
    Ok((objective, grads))
}

/// Reward-weighted behavior cloning: `-mean[log π(a_t|h_t) · R(o_t,a_t,g)]`.
/// The reward factor is a constant weight.
pub fn weighted_bc_loss(
    model: &PolicyModel,
    params: &ParamSet,
    reward: &RewardSource<'_>,
    batch: &[PolicyDatum],
) -> Result<f64, PolicyError> {
    Ok(weighted_bc_loss_and_grad(model, params, reward, batch)?.0)
}

/// [`weighted_bc_loss`] together with its parameter gradient.
pub fn weighted_bc_loss_and_grad(
    model: &PolicyModel,
    params: &ParamSet,
    reward: &RewardSource<'_>,
    batch: &[PolicyDatum],
) -> Result<(f64, ParamSet), PolicyError> {
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for datum in batch {
        let fwd = model.forward(params, &datum.history)?;
        let logp = log_softmax(&fwd.action_logits);
        let probs = softmax(&fwd.action_logits);
        let r = reward.turn_reward(&datum.reward_input)?;
        loss -= scale * logp[datum.action] * r;
        let dlogits: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(a, p)| {
                -scale * r * (if a == datum.action { 1.0 } else { 0.0 } - p)
            })
            .collect();
        model.backward_into(params, &datum.history, &fwd, Some(&dlogits), None, &mut grads);
    }
    Ok((loss, grads))
}

/// Exact `E_a[R]` and `∇_φ E_a[R]` for one element by enumerating the action
/// space; the oracle for the stochastic estimators.
pub fn exact_policy_grad(
    model: &PolicyModel,
    params: &ParamSet,
    reward: &RewardSource<'_>,
    datum: &PolicyDatum,
) -> Result<(f64, ParamSet), PolicyError> {
    let n = model.cfg.action_count;
    if n > 1024 {
        return Err(PolicyError::ActionSpaceTooLarge(n));
    }
    let fwd = model.forward(params, &datum.history)?;
    let probs = softmax(&fwd.action_logits);
    let rewards: Vec<f64> = (0..n)
        .map(|a| {
            reward.turn_reward(&reward_input_with_action(datum, ActionInput::Discrete(a)))
        })
        .collect::<Result<_, _>>()?;
    let expected: f64 = probs.iter().zip(&rewards).map(|(p, r)| p * r).sum();
    let dlogits: Vec<f64> = probs
        .iter()
        .zip(&rewards)
        .map(|(p, r)| p * (r - expected))
        .collect();
    let mut grads = params.zeros_like();
    model.backward_into(params, &datum.history, &fwd, Some(&dlogits), None, &mut grads);
    Ok((expected, grads))
}

pub struct GenLossOutput {
    pub loss: f64,
    /// Estimate of the policy-gradient objective `E[R]`; zero when `α = 0`.
    pub jgs_estimate: f64,
    pub grads: ParamSet,
}

/// Generation loss `-α · J(π) + weighted_bc` with gradients. When `α = 0` no
/// noise is drawn and the output is exactly the weighted-BC loss.
pub fn gen_loss<R: Rng>(
    model: &PolicyModel,
    params: &ParamSet,
    reward: &RewardSource<'_>,
    batch: &[PolicyDatum],
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<GenLossOutput, PolicyError> {
    cfg.validate()?;
    let (bc_loss, mut grads) = weighted_bc_loss_and_grad(model, params, reward, batch)?;
    if cfg.alpha == 0.0 {
        return Ok(GenLossOutput {
            loss: bc_loss,
            jgs_estimate: 0.0,
            grads,
        });
    }
    let (estimate, obj_grads) = match cfg.kind {
        Estimator::GumbelSoftmax => {
            gs_objective_and_grad(model, params, reward, batch, cfg.temperature, rng)?
        }
        Estimator::Reinforce => reinforce_grad(model, params, reward, batch, rng)?,
        Estimator::Exact => {
            let mut grads = params.zeros_like();
            let mut estimate = 0.0;
            let scale = 1.0 / batch.len() as f64;
            for datum in batch {
                let (e, g) = exact_policy_grad(model, params, reward, datum)?;
                estimate += scale * e;
                grads.axpy(scale, &g);
            }
            (estimate, grads)
        }
    };
    grads.axpy(-cfg.alpha, &obj_grads);
    Ok(GenLossOutput {
        loss: -cfg.alpha * estimate + bc_loss,
        jgs_estimate: estimate,
        grads,
    })
}

/// Dialogue-state loss: per-slot categorical cross-entropy against the
/// ground-truth labels, summed over slots and averaged over the batch.
pub fn dst_loss(
    model: &PolicyModel,
    params: &ParamSet,
    batch: &[PolicyDatum],
) -> Result<(f64, ParamSet), PolicyError> {
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for datum in batch {
        let fwd = model.forward(params, &datum.history)?;
        let mut dlogits_belief = Vec::with_capacity(model.cfg.belief_slots.len());
        for (s, &card) in model.cfg.belief_slots.iter().enumerate() {
            let label = datum.belief_labels[s];
            if label >= card {
                return Err(PolicyError::LabelOutOfBounds {
                    slot: s,
                    label,
                    card,
                });
            }
            let logits = model.belief_logits(params, &fwd.hidden, s);
            let logp = log_softmax(&logits);
            loss -= scale * logp[label];
            let probs = softmax(&logits);
            dlogits_belief.push(
                probs
                    .iter()
                    .enumerate()
                    .map(|(v, p)| scale * (p - if v == label { 1.0 } else { 0.0 }))
                    .collect(),
            );
        }
        model.backward_into(
            params,
            &datum.history,
            &fwd,
            None,
            Some(&dlogits_belief),
            &mut grads,
        );
    }
    Ok((loss, grads))
}

/// Uniform indices with replacement; the batch sampler used by
/// [`train_policy`], exposed so reference runs can replay it.
pub fn sample_policy_batch<R: Rng>(corpus_len: usize, batch_size: usize, rng: &mut R) -> Vec<usize> {
    (0..batch_size).map(|_| rng.gen_range(0..corpus_len)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTraceRow {
    pub step: usize,
    pub gen_loss: f64,
    pub dst_loss: f64,
    pub jgs_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct PolicyTraining {
    pub params: ParamSet,
    pub trace: Vec<PolicyTraceRow>,
}

/// Knobs of one policy-training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyTrainConfig {
    pub estimator: EstimatorConfig,
    pub iterations: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

/// SGD on `gen_loss + dst_loss` from a seeded init against a frozen reward.
pub fn train_policy(
    model: &PolicyModel,
    corpus: &[PolicyDatum],
    reward: &RewardSource<'_>,
    cfg: &PolicyTrainConfig,
) -> Result<PolicyTraining, PolicyError> {
    cfg.estimator.validate()?;
    if corpus.is_empty() {
        return Err(PolicyError::EmptyCorpus);
    }
    if cfg.batch_size == 0 {
        return Err(PolicyError::InvalidConfig("batch_size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = model.init_params(&mut rng);
    let mut trace = Vec::with_capacity(cfg.iterations);
    for step in 1..=cfg.iterations {
        let indices = sample_policy_batch(corpus.len(), cfg.batch_size, &mut rng);
        let batch: Vec<PolicyDatum> = indices.iter().map(|&i| corpus[i].clone()).collect();
        let gen = gen_loss(model, &params, reward, &batch, &cfg.estimator, &mut rng)?;
        let (dst, dst_grads) = dst_loss(model, &params, &batch)?;
        let total = gen.loss + dst;
        if !total.is_finite() {
            return Err(PolicyError::NonFiniteLoss { step });
        }
        params.axpy(-cfg.learning_rate, &gen.grads);
        params.axpy(-cfg.learning_rate, &dst_grads);
        trace.push(PolicyTraceRow {
            step,
            gen_loss: gen.loss,
            dst_loss: dst,
            jgs_estimate: gen.jgs_estimate,
        });
    }
    Ok(PolicyTraining { params, trace })
}

pub fn save_checkpoint(
    model: &PolicyModel,
    params: &ParamSet,
    path: &Path,
) -> Result<(), PolicyError> {
    params.save(path, model.cfg.fingerprint(), &model.cfg.schema_string())?;
    Ok(())
}

pub fn load_checkpoint(model: &PolicyModel, path: &Path) -> Result<ParamSet, PolicyError> {
    let params = ParamSet::load(path, model.cfg.fingerprint())?;
    model.zero_params().check_layout(&params)?;
    Ok(params)
}

/// Greedy (argmax) wrapper satisfying the environment's policy interface.
pub struct GreedyPolicy<'a> {
    pub model: &'a PolicyModel,
    pub params: &'a ParamSet,
}

impl SystemPolicy for GreedyPolicy<'_> {
    fn choose_action(&mut self, ctx: &TurnContext<'_>) -> usize {
        let history = HistoryFeatures {
            ids: ctx.history.to_vec(),
        };
        let (logits, _) = self
            .model
            .action_distribution(self.params, &history)
            .expect("rollout histories are within vocabulary");
        let mut best = 0;
        for (a, l) in logits.iter().enumerate() {
            if *l > logits[best] {
                best = a;
            }
        }
        best
    }
}
