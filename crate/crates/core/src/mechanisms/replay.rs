//! Non-strategic reference runs on the true market, written independently of
//! the mechanism state machines so the two can be compared.

use crate::market::Instance;
use crate::scalar::Scalar;

/// Perturbed-Greedy: each arriving item goes to the unmatched buyer wanting
/// it with the largest `value · weight` (ties to the lowest id).
pub fn perturbed_greedy_matching<S: Scalar>(
    inst: &Instance<S>,
    weights: &[S],
) -> Vec<Option<usize>> {
    let mut matched = vec![false; inst.num_buyers()];
    (0..inst.num_items)
        .map(|item| {
            let mut pick: Option<(usize, S)> = None;
            for buyer in 0..inst.num_buyers() {
                if matched[buyer] || !inst.wants(buyer, item) {
                    continue;
                }
                let score = inst.value(buyer) * weights[buyer];
                match pick {
                    Some((_, best)) if !score.gt_tol(best) => {}
                    _ => pick = Some((buyer, score)),
                }
            }
            let winner = pick.map(|(b, _)| b);
            if let Some(b) = winner {
                matched[b] = true;
            }
            winner
        })
        .collect()
}

pub fn greedy_matching<S: Scalar>(inst: &Instance<S>) -> Vec<Option<usize>> {
    perturbed_greedy_matching(inst, &vec![S::one(); inst.num_buyers()])
}
