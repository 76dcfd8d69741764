//! Welfare and quasi-linear utility accounting against the true market.

use crate::error::{Error, Result};
use crate::market::Instance;
use crate::outcome::Outcome;
use crate::scalar::Scalar;

fn check_dims<S: Scalar>(inst: &Instance<S>, outcome: &Outcome<S>) -> Result<()> {
    if inst.num_buyers() != outcome.num_buyers() || inst.num_items != outcome.num_items() {
        return Err(Error::DimensionMismatch {
            buyers: inst.num_buyers(),
            items: inst.num_items,
            outcome_buyers: outcome.num_buyers(),
            outcome_items: outcome.num_items(),
        });
    }
    Ok(())
}

/// Sum of values of buyers matched to an item they truly want.
pub fn social_welfare<S: Scalar>(inst: &Instance<S>, outcome: &Outcome<S>) -> Result<S> {
    check_dims(inst, outcome)?;
    Ok(outcome
        .matches
        .iter()
        .enumerate()
        .filter_map(|(item, a)| a.as_ref().map(|a| (item, a.buyer)))
        .filter(|&(item, buyer)| inst.wants(buyer, item))
        .fold(S::zero(), |acc, (_, buyer)| acc + inst.value(buyer)))
}

/// `v_i · 1[matched item desired] − p_i`; negative for buyers who overpaid.
pub fn utility<S: Scalar>(inst: &Instance<S>, buyer: usize, outcome: &Outcome<S>) -> Result<S> {
    check_dims(inst, outcome)?;
    if buyer >= inst.num_buyers() {
        return Err(Error::UnknownBuyer(buyer));
    }
    let value = match outcome.item_of(buyer) {
        Some(item) if inst.wants(buyer, item) => inst.value(buyer),
        _ => S::zero(),
    };
    Ok(value - outcome.payments[buyer])
}

/// Utility attributable to one round: the value won at that round minus
/// whatever price was fixed at that round.
pub fn round_utility<S: Scalar>(
    inst: &Instance<S>,
    buyer: usize,
    outcome: &Outcome<S>,
    round: usize,
) -> Result<S> {
    check_dims(inst, outcome)?;
    if buyer >= inst.num_buyers() {
        return Err(Error::UnknownBuyer(buyer));
    }
    if round >= inst.num_items {
        return Err(Error::RoundOutOfRange {
            round,
            num_items: inst.num_items,
        });
    }
    let mut u = S::zero();
    if outcome.buyer_of(round) == Some(buyer) && inst.wants(buyer, round) {
        u = u + inst.value(buyer);
    }
    if let Some(item) = outcome.item_of(buyer) {
        let a = outcome.matches[item].as_ref().unwrap();
        if a.priced_at == round {
            u = u - a.price;
        }
    }
    Ok(u)
}
