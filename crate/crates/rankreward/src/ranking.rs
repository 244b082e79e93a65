//! Listwise ranking losses over trajectory returns.
//!
//! Given `N` trajectories with automatic evaluation scores `S(τ_1) > ... >
//! S(τ_N)` and accumulated model returns `J(τ_i)`, this module provides the
//! losses that make the returns reproduce the score ranking:
//!
//! ```text
//! pairwise:   -log( exp(J_i) / (exp(J_i) + exp(J_j)) )         for τ_i ≻ τ_j
//! cross-ent:  -Σ_i P_S(τ_i) · log P_J(τ_i)
//!             P_S(τ_i) = S_i / Σ_k S_k,   P_J(τ_i) = Φ(J_i) / Σ_k Φ(J_k)
//! rank-mle:   -Σ_i [ log Φ(J_i) - log Σ_{k≥i} Φ(J_k) ]
//! ```
//!
//! `Φ` is a [`Transform`]: either `exp(·)` (softmax) or `(·)^p` (escort,
//! integer power 1..=4, defined on positive inputs only). The rank-MLE loss is
//! the negative log-likelihood of the observed order under the Plackett-Luce
//! choice model; the cross-entropy loss uses the raw scores as soft targets.
//!
//! All softmax-style sums run through max-shifted log-sum-exp, and the
//! rank-MLE suffix sums are accumulated right to left, so the losses stay
//! finite for any realistic return magnitude. Everything here is a pure
//! function of its inputs.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RankingError {
    #[error("escort power must be in 1..=4, got {0}")]
    InvalidPower(u32),
    #[error("escort transform requires positive input, got {0}")]
    EscortDomain(f64),
    #[error("scores must be positive and strictly decreasing")]
    InvalidScores,
    #[error("input must not be empty")]
    Empty,
    #[error("need at least two entries, got {0}")]
    NeedPair(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("order is not a permutation of 0..{0}")]
    InvalidPermutation(usize),
    #[error("score vector required for the cross-entropy loss")]
    MissingScores,
}

/// Probabilistic transform `Φ` mapping returns to unnormalized weights.
///
/// Constructed through [`Transform::softmax`] and [`Transform::escort`] so the
/// escort power stays in the supported range `1..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transform {
    kind: TransformKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TransformKind {
    Softmax,
    Escort(u32),
}

impl Transform {
    pub fn softmax() -> Self {
        Transform {
            kind: TransformKind::Softmax,
        }
    }

    pub fn escort(power: u32) -> Result<Self, RankingError> {
        if !(1..=4).contains(&power) {
            return Err(RankingError::InvalidPower(power));
        }
        Ok(Transform {
            kind: TransformKind::Escort(power),
        })
    }

    pub fn is_softmax(&self) -> bool {
        self.kind == TransformKind::Softmax
    }

    /// `Φ(x)`: `exp(x)` for softmax, `x^p` for escort (requires `x > 0`).
    pub fn apply(&self, x: f64) -> Result<f64, RankingError> {
        match self.kind {
            TransformKind::Softmax => Ok(x.exp()),
            TransformKind::Escort(p) => {
                if x <= 0.0 {
                    Err(RankingError::EscortDomain(x))
                } else {
                    Ok(x.powi(p as i32))
                }
            }
        }
    }

    /// `log Φ(x)`, the quantity the stable loss paths actually use.
    pub fn log_apply(&self, x: f64) -> Result<f64, RankingError> {
        match self.kind {
            TransformKind::Softmax => Ok(x),
            TransformKind::Escort(p) => {
                if x <= 0.0 {
                    Err(RankingError::EscortDomain(x))
                } else {
                    Ok(f64::from(p) * x.ln())
                }
            }
        }
    }

    /// `d/dx log Φ(x)`: 1 for softmax, `p/x` for escort.
    pub fn dlog_apply(&self, x: f64) -> Result<f64, RankingError> {
        match self.kind {
            TransformKind::Softmax => Ok(1.0),
            TransformKind::Escort(p) => {
                if x <= 0.0 {
                    Err(RankingError::EscortDomain(x))
                } else {
                    Ok(f64::from(p) / x)
                }
            }
        }
    }
}

impl Serialize for Transform {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.kind {
            TransformKind::Softmax => serializer.serialize_str("softmax"),
            TransformKind::Escort(p) => {
                use serde::ser::SerializeMap;
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("escort", &p)?;
                map.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Transform {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Escort { escort: u32 },
        }
        match Raw::deserialize(deserializer)? {
            Raw::Name(s) if s == "softmax" => Ok(Transform::softmax()),
            Raw::Name(s) => Err(D::Error::custom(format!("unknown transform {s:?}"))),
            Raw::Escort { escort } => {
                Transform::escort(escort).map_err(|e| D::Error::custom(e.to_string()))
            }
        }
    }
}

/// Automatic evaluation scores, strictly decreasing and strictly positive.
///
/// Ties are rejected at construction; batch samplers are expected to resample
/// rather than hand tied scores to the losses.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self, RankingError> {
        if values.is_empty() {
            return Err(RankingError::Empty);
        }
        let positive = values.iter().all(|v| *v > 0.0 && v.is_finite());
        let decreasing = values.windows(2).all(|w| w[0] > w[1]);
        if !positive || !decreasing {
            return Err(RankingError::InvalidScores);
        }
        Ok(ScoreVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `P_S`: scores normalized by their sum.
    pub fn simplex(&self) -> Vec<f64> {
        let total: f64 = self.0.iter().sum();
        self.0.iter().map(|v| v / total).collect()
    }

    /// Shannon entropy of [`ScoreVector::simplex`], the attainable minimum of
    /// the cross-entropy loss.
    pub fn entropy(&self) -> f64 {
        self.simplex().iter().map(|p| -p * p.ln()).sum()
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi.is_infinite() && hi < 0.0 {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log Φ` applied elementwise.
fn log_weights(t: Transform, xs: &[f64]) -> Result<Vec<f64>, RankingError> {
    xs.iter().map(|&x| t.log_apply(x)).collect()
}

/// Normalize through `Φ` onto the probability simplex.
///
/// Entries sum to one and are strictly positive for finite inputs.
pub fn normalize(t: Transform, xs: &[f64]) -> Result<Vec<f64>, RankingError> {
    if xs.is_empty() {
        return Err(RankingError::Empty);
    }
    let logs = log_weights(t, xs)?;
    let lse = log_sum_exp(&logs);
    Ok(logs.iter().map(|l| (l - lse).exp()).collect())
}

/// Pairwise preference loss for `τ_i ≻ τ_j` under exponentiated returns.
///
/// Equals `softplus(j_other - j_preferred)`, which is the stable form of
/// `-log(exp(J_i) / (exp(J_i) + exp(J_j)))`; zero only in the limit of
/// perfect separation.
pub fn bt_pairwise_loss(j_preferred: f64, j_other: f64) -> f64 {
    softplus(j_other - j_preferred)
}

/// Cross-entropy between the score simplex and the transformed-return simplex.
///
/// Bounded below by the entropy of `P_S`, with equality exactly when the
/// return distribution matches the score distribution.
pub fn reward_net_loss(
    scores: &ScoreVector,
    returns: &[f64],
    t: Transform,
) -> Result<f64, RankingError> {
    if scores.len() != returns.len() {
        return Err(RankingError::LengthMismatch(scores.len(), returns.len()));
    }
    if scores.len() < 2 {
        return Err(RankingError::NeedPair(scores.len()));
    }
    let logs = log_weights(t, returns)?;
    let lse = log_sum_exp(&logs);
    let p_s = scores.simplex();
    Ok(p_s
        .iter()
        .zip(&logs)
        .map(|(ps, l)| -ps * (l - lse))
        .sum())
}

/// Negative log-likelihood of the order `τ_1 ≻ ... ≻ τ_N` under the
/// Plackett-Luce model induced by the transformed returns.
///
/// `returns` must already be indexed in preference order. The suffix
/// log-sum-exp is accumulated right to left.
pub fn reward_mle_loss(returns: &[f64], t: Transform) -> Result<f64, RankingError> {
    if returns.is_empty() {
        return Err(RankingError::Empty);
    }
    let logs = log_weights(t, returns)?;
    let mut loss = 0.0;
    let mut suffix = f64::NEG_INFINITY;
    for &l in logs.iter().rev() {
        suffix = log_add_exp(suffix, l);
        loss -= l - suffix;
    }
    Ok(loss)
}

/// Probability of observing `order` under the Plackett-Luce model.
///
/// `order[i]` is the index of the item chosen at stage `i`; summing over all
/// `N!` orders yields one.
pub fn plackett_luce_prob(
    order: &[usize],
    returns: &[f64],
    t: Transform,
) -> Result<f64, RankingError> {
    let n = returns.len();
    if n == 0 {
        return Err(RankingError::Empty);
    }
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(RankingError::InvalidPermutation(n));
    }
    for &i in order {
        if i >= n || seen[i] {
            return Err(RankingError::InvalidPermutation(n));
        }
        seen[i] = true;
    }
    let logs = log_weights(t, returns)?;
    let mut log_prob = 0.0;
    let mut suffix = f64::NEG_INFINITY;
    for stage in (0..n).rev() {
        suffix = log_add_exp(suffix, logs[order[stage]]);
        log_prob += logs[order[stage]] - suffix;
    }
    Ok(log_prob.exp())
}

/// Which listwise loss to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    RewardNet,
    RewardMle,
}

/// Analytic gradient of the selected loss with respect to the returns.
///
/// For the cross-entropy loss the gradient is `(P_J - P_S) ∘ d log Φ / dJ`;
/// for the rank-MLE loss each stage contributes its suffix-softmax weight
/// minus the indicator of the chosen item. Scores are required only for
/// [`LossKind::RewardNet`].
pub fn loss_grad_wrt_returns(
    kind: LossKind,
    scores: Option<&ScoreVector>,
    returns: &[f64],
    t: Transform,
) -> Result<Vec<f64>, RankingError> {
    let n = returns.len();
    match kind {
        LossKind::RewardNet => {
            let scores = scores.ok_or(RankingError::MissingScores)?;
            if scores.len() != n {
                return Err(RankingError::LengthMismatch(scores.len(), n));
            }
            if n < 2 {
                return Err(RankingError::NeedPair(n));
            }
            let p_j = normalize(t, returns)?;
            let p_s = scores.simplex();
            (0..n)
                .map(|m| Ok((p_j[m] - p_s[m]) * t.dlog_apply(returns[m])?))
                .collect()
        }
        LossKind::RewardMle => {
            if n == 0 {
                return Err(RankingError::Empty);
            }
            let logs = log_weights(t, returns)?;
            // Suffix log-normalizers: log Σ_{k≥i} Φ(J_k).
            let mut suffix = vec![0.0; n];
            let mut acc = f64::NEG_INFINITY;
            for i in (0..n).rev() {
                acc = log_add_exp(acc, logs[i]);
                suffix[i] = acc;
            }
            (0..n)
                .map(|m| {
                    // d loss / d log Φ(J_m) = Σ_{i<=m} softmax_i(m) - 1.
                    let weight: f64 = (0..=m).map(|i| (logs[m] - suffix[i]).exp()).sum();
                    Ok((weight - 1.0) * t.dlog_apply(returns[m])?)
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{central_difference_vec, max_relative_error};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_transforms() -> Vec<Transform> {
        let mut ts = vec![Transform::softmax()];
        for p in 1..=4 {
            ts.push(Transform::escort(p).unwrap());
        }
        ts
    }

    #[test]
    fn transform_construction_rejects_bad_powers() {
        assert_eq!(Transform::escort(0), Err(RankingError::InvalidPower(0)));
        assert_eq!(Transform::escort(5), Err(RankingError::InvalidPower(5)));
        assert!(Transform::escort(1).is_ok());
    }

    #[test]
    fn apply_matches_hand_values() {
        let e1 = Transform::escort(1).unwrap();
        let e2 = Transform::escort(2).unwrap();
        assert!((e1.apply(0.7).unwrap() - 0.7).abs() < 1e-15);
        assert!((Transform::softmax().apply(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((e2.apply(3.0).unwrap() - 9.0).abs() < 1e-15);
        assert_eq!(e2.apply(-1.0), Err(RankingError::EscortDomain(-1.0)));
        assert_eq!(e2.apply(0.0), Err(RankingError::EscortDomain(0.0)));
    }

    #[test]
    fn normalize_hand_values() {
        let sm = Transform::softmax();
        let p = normalize(sm, &[1.3, 1.3, 1.3]).unwrap();
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        let e1 = Transform::escort(1).unwrap();
        let p = normalize(e1, &[2.0, 1.0, 1.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
        assert!((p[2] - 0.25).abs() < 1e-12);
        let p = normalize(sm, &[2.0f64.ln(), 0.0]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_survives_large_inputs() {
        let p = normalize(Transform::softmax(), &[1e4, 1e4 - 1.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bt_loss_hand_values() {
        assert!((bt_pairwise_loss(1.0, 1.0) - 2.0f64.ln()).abs() < 1e-12);
        // Perfect separation drives the loss to zero.
        assert!(bt_pairwise_loss(1e3, 0.0) < 1e-12);
        assert!(bt_pairwise_loss(0.0, 1e3) > 100.0);
    }

    #[test]
    fn reward_net_hand_values() {
        let e1 = Transform::escort(1).unwrap();
        let s = ScoreVector::new(vec![3.0, 1.0]).unwrap();
        // P_J matching P_S exactly gives the entropy of P_S.
        let loss = reward_net_loss(&s, &[0.75, 0.25], e1).unwrap();
        assert!((loss - 0.562335).abs() < 1e-6);
        assert!((loss - s.entropy()).abs() < 1e-12);
        let loss = reward_net_loss(&s, &[2.0, 1.0], e1).unwrap();
        assert!((loss - 0.578752).abs() < 1e-6);
    }

    #[test]
    fn reward_net_reduces_to_soft_pairwise_at_n2_escort1() {
        let e1 = Transform::escort(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let s1: f64 = rng.gen_range(1.0..10.0);
            let s2: f64 = rng.gen_range(0.1..s1 - 1e-6);
            let j1: f64 = rng.gen_range(0.1..5.0);
            let j2: f64 = rng.gen_range(0.1..5.0);
            let s = ScoreVector::new(vec![s1, s2]).unwrap();
            let loss = reward_net_loss(&s, &[j1, j2], e1).unwrap();
            let p = s1 / (s1 + s2);
            let q = j1 / (j1 + j2);
            let soft = -(p * q.ln() + (1.0 - p) * (1.0 - q).ln());
            assert!((loss - soft).abs() < 1e-12, "{loss} vs {soft}");
        }
    }

    #[test]
    fn reward_mle_hand_values() {
        let sm = Transform::softmax();
        assert!((reward_mle_loss(&[0.37], sm).unwrap()).abs() < 1e-15);
        for t in all_transforms() {
            let loss = reward_mle_loss(&[2.5, 2.5, 2.5], t).unwrap();
            assert!((loss - 6.0f64.ln()).abs() < 1e-12, "uniform order over 3! ");
        }
        let loss = reward_mle_loss(&[2.0, 1.0], sm).unwrap();
        assert!((loss - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-12);
        assert!((loss - bt_pairwise_loss(2.0, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn reward_mle_is_order_sensitive() {
        // Swapping adjacent entries of a strictly decreasing return vector
        // strictly increases the loss.
        let returns = [4.0, 3.0, 2.0, 1.0];
        for t in all_transforms() {
            let base = reward_mle_loss(&returns, t).unwrap();
            for i in 0..returns.len() - 1 {
                let mut swapped = returns;
                swapped.swap(i, i + 1);
                let worse = reward_mle_loss(&swapped, t).unwrap();
                assert!(worse > base, "swap {i} should increase loss");
            }
        }
    }

    #[test]
    fn plackett_luce_hand_values() {
        let sm = Transform::softmax();
        assert!((plackett_luce_prob(&[0], &[1.7], sm).unwrap() - 1.0).abs() < 1e-15);
        for t in all_transforms() {
            let p = plackett_luce_prob(&[2, 0, 3, 1], &[1.1, 1.1, 1.1, 1.1], t).unwrap();
            assert!((p - 1.0 / 24.0).abs() < 1e-12);
        }
        assert_eq!(
            plackett_luce_prob(&[0, 0, 1], &[1.0, 2.0, 3.0], sm),
            Err(RankingError::InvalidPermutation(3))
        );
        assert_eq!(
            plackett_luce_prob(&[0, 1], &[1.0, 2.0, 3.0], sm),
            Err(RankingError::InvalidPermutation(3))
        );
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 1 {
            return vec![vec![0]];
        }
        let mut out = Vec::new();
        for perm in permutations(n - 1) {
            for slot in 0..n {
                let mut p = perm.clone();
                p.insert(slot, n - 1);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn plackett_luce_sums_to_one_over_all_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=5 {
            let perms = permutations(n);
            assert_eq!(perms.len(), (1..=n).product::<usize>());
            for t in all_transforms() {
                let returns: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
                let total: f64 = perms
                    .iter()
                    .map(|p| plackett_luce_prob(p, &returns, t).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-9, "n={n} total={total}");
            }
        }
    }

    #[test]
    fn reward_net_grad_hand_value() {
        let sm = Transform::softmax();
        let s = ScoreVector::new(vec![3.0, 1.0]).unwrap();
        let g = loss_grad_wrt_returns(LossKind::RewardNet, Some(&s), &[2.0f64.ln(), 0.0], sm)
            .unwrap();
        assert!((g[0] + 1.0 / 12.0).abs() < 1e-12);
        assert!((g[1] - 1.0 / 12.0).abs() < 1e-12);
        // Stationary at P_J = P_S.
        let g =
            loss_grad_wrt_returns(LossKind::RewardNet, Some(&s), &[3.0f64.ln(), 0.0], sm).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for case in 0..100 {
            let n = rng.gen_range(2..=6);
            let returns: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..4.0)).collect();
            let mut raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..9.0)).collect();
            raw.sort_by(|a, b| b.partial_cmp(a).unwrap());
            raw.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            while raw.len() < n {
                raw.push(raw.last().unwrap() * 0.5);
            }
            let scores = ScoreVector::new(raw).unwrap();
            for t in all_transforms() {
                for kind in [LossKind::RewardNet, LossKind::RewardMle] {
                    let analytic =
                        loss_grad_wrt_returns(kind, Some(&scores), &returns, t).unwrap();
                    let numeric = central_difference_vec(&returns, 1e-5, |j| match kind {
                        LossKind::RewardNet => reward_net_loss(&scores, j, t).unwrap(),
                        LossKind::RewardMle => reward_mle_loss(j, t).unwrap(),
                    });
                    let err = max_relative_error(&analytic, &numeric);
                    assert!(err < 1e-4, "case {case} {kind:?} {t:?}: err {err}");
                }
            }
        }
    }

    #[test]
    fn score_vector_rejects_ties_and_nonpositives() {
        assert!(ScoreVector::new(vec![]).is_err());
        assert!(ScoreVector::new(vec![2.0, 2.0]).is_err());
        assert!(ScoreVector::new(vec![2.0, 3.0]).is_err());
        assert!(ScoreVector::new(vec![2.0, 0.0]).is_err());
        assert!(ScoreVector::new(vec![2.0, 1.0, 0.5]).is_ok());
    }

    #[test]
    fn transform_serde_round_trip() {
        for t in all_transforms() {
            let json = serde_json::to_string(&t).unwrap();
            let back: Transform = serde_json::from_str(&json).unwrap();
            assert_eq!(t, back);
        }
        assert!(serde_json::from_str::<Transform>("{\"escort\":9}").is_err());
        assert!(serde_json::from_str::<Transform>("\"sigmoid\"").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn transforms_are_strictly_increasing(
            a in 0.01f64..50.0,
            delta in 0.01f64..10.0,
        ) {
            for t in all_transforms() {
                let lo = t.apply(a).unwrap();
                let hi = t.apply(a + delta).unwrap();
                prop_assert!(lo < hi);
            }
        }

        #[test]
        fn normalize_yields_a_simplex(xs in prop::collection::vec(0.05f64..20.0, 1..8)) {
            for t in all_transforms() {
                let p = normalize(t, &xs).unwrap();
                let total: f64 = p.iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!(p.iter().all(|v| *v > 0.0 && *v <= 1.0));
            }
        }

        #[test]
        fn softmax_normalize_is_shift_invariant(
            xs in prop::collection::vec(-5.0f64..5.0, 2..8),
            c in -100.0f64..100.0,
        ) {
            let sm = Transform::softmax();
            let base = normalize(sm, &xs).unwrap();
            let shifted_input: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let shifted = normalize(sm, &shifted_input).unwrap();
            for (a, b) in base.iter().zip(&shifted) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn mle_equals_pairwise_for_two_softmax(
            j1 in -8.0f64..8.0,
            j2 in -8.0f64..8.0,
        ) {
            let mle = reward_mle_loss(&[j1, j2], Transform::softmax()).unwrap();
            let bt = bt_pairwise_loss(j1, j2);
            prop_assert!((mle - bt).abs() < 1e-12);
        }

        #[test]
        fn cross_entropy_dominates_entropy(
            raw in prop::collection::vec(0.1f64..9.0, 2..6),
            returns in prop::collection::vec(0.2f64..5.0, 2..6),
        ) {
            let n = raw.len().min(returns.len());
            let mut scores: Vec<f64> = raw[..n].to_vec();
            scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
            scores.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            prop_assume!(scores.len() >= 2);
            let k = scores.len();
            let scores = ScoreVector::new(scores).unwrap();
            for t in all_transforms() {
                let loss = reward_net_loss(&scores, &returns[..k], t).unwrap();
                prop_assert!(loss - scores.entropy() >= -1e-12);
            }
        }
    }
}
