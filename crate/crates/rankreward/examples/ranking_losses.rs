//! Compare the listwise reward-learning losses on a hand-built ranked batch.
//!
//! ```sh
//! cargo run --example ranking_losses
//! ```

use rankreward::ranking::{
    bt_pairwise_loss, loss_grad_wrt_returns, normalize, plackett_luce_prob, reward_mle_loss,
    reward_net_loss, LossKind, ScoreVector, Transform,
};

fn main() {
    // Four trajectories, already sorted by automatic evaluation score,
    // and the returns a half-trained reward model might assign them.
    let scores = ScoreVector::new(vec![182.0, 130.5, 61.0, 9.5]).unwrap();
    let returns = [3.1, 2.9, 2.2, 2.5];

    println!("scores   {:?}", scores.values());
    println!("returns  {:?}  (items 2 and 3 are mis-ordered)", returns);
    println!();

    let transforms = [
        ("softmax", Transform::softmax()),
        ("escort p=1", Transform::escort(1).unwrap()),
        ("escort p=2", Transform::escort(2).unwrap()),
    ];
    println!("{:<12} {:>12} {:>12} {:>14}", "transform", "cross-ent", "rank-mle", "entropy floor");
    for (name, t) in transforms {
        let net = reward_net_loss(&scores, &returns, t).unwrap();
        let mle = reward_mle_loss(&returns, t).unwrap();
        println!("{name:<12} {net:>12.6} {mle:>12.6} {:>14.6}", scores.entropy());
    }
    println!();

    // The rank-MLE loss at N=2 with the softmax transform is exactly the
    // pairwise preference loss.
    let pair = reward_mle_loss(&returns[..2], Transform::softmax()).unwrap();
    let bt = bt_pairwise_loss(returns[0], returns[1]);
    println!("pairwise check: rank-mle(N=2) {pair:.12} == bt {bt:.12}");
    println!();

    let t = Transform::softmax();
    let p = normalize(t, &returns).unwrap();
    println!("return simplex       {p:?}");
    let grad = loss_grad_wrt_returns(LossKind::RewardNet, Some(&scores), &returns, t).unwrap();
    println!("cross-ent gradient   {grad:?}");
    let grad = loss_grad_wrt_returns(LossKind::RewardMle, None, &returns, t).unwrap();
    println!("rank-mle gradient    {grad:?}");
    println!("(positive entries push a return down, negative push it up)");
    println!();

    // The Plackett-Luce probabilities of the observed order vs the corrected
    // order under the current returns.
    let observed = plackett_luce_prob(&[0, 1, 2, 3], &returns, t).unwrap();
    let swapped = plackett_luce_prob(&[0, 1, 3, 2], &returns, t).unwrap();
    println!("P(order as scored)    {observed:.6}");
    println!("P(items 2,3 swapped)  {swapped:.6}");
}
