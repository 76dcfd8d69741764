use serde::{Deserialize, Serialize};

use crate::market::ReportProfile;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment<S> {
    pub buyer: usize,
    pub price: S,
    /// Round at which the price became final: the assignment round for prompt
    /// mechanisms, the last round for tardy ones.
    pub priced_at: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Decision<S> {
    /// `price` is `None` when payment is deferred to the end of the run.
    Assign { buyer: usize, price: Option<S> },
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord<S> {
    pub item: usize,
    /// Buyers that declared interest in this item.
    pub interested: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posted_price: Option<S>,
    pub decision: Decision<S>,
    /// The winner's multiplier was zero.
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome<S> {
    /// Indexed by item.
    pub matches: Vec<Option<Assignment<S>>>,
    /// Indexed by buyer.
    pub payments: Vec<S>,
    pub trace: Vec<RoundRecord<S>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutcomeViolation {
    BuyerMatchedTwice { buyer: usize },
    UndeclaredInterest { buyer: usize, item: usize },
    NegativePayment { buyer: usize },
    UnmatchedPays { buyer: usize },
    PaymentMismatch { buyer: usize },
}

impl<S: Scalar> Outcome<S> {
    pub fn empty(num_buyers: usize, num_items: usize) -> Self {
        Outcome {
            matches: vec![None; num_items],
            payments: vec![S::zero(); num_buyers],
            trace: Vec::with_capacity(num_items),
        }
    }

    pub fn num_items(&self) -> usize {
        self.matches.len()
    }

    pub fn num_buyers(&self) -> usize {
        self.payments.len()
    }

    pub fn buyer_of(&self, item: usize) -> Option<usize> {
        self.matches[item].as_ref().map(|a| a.buyer)
    }

    pub fn item_of(&self, buyer: usize) -> Option<usize> {
        self.matches
            .iter()
            .position(|a| a.as_ref().is_some_and(|a| a.buyer == buyer))
    }

    /// The matching as `item -> buyer`.
    pub fn matching(&self) -> Vec<Option<usize>> {
        self.matches.iter().map(|a| a.as_ref().map(|a| a.buyer)).collect()
    }

    pub fn matched_count(&self) -> usize {
        self.matches.iter().flatten().count()
    }

    /// Matching property, interest consistency and payment sanity.
    pub fn violations(&self, reports: &ReportProfile<S>) -> Vec<OutcomeViolation> {
        let mut out = Vec::new();
        let mut matched = vec![false; self.num_buyers()];
        for (item, a) in self.matches.iter().enumerate() {
            let Some(a) = a else { continue };
            if std::mem::replace(&mut matched[a.buyer], true) {
                out.push(OutcomeViolation::BuyerMatchedTwice { buyer: a.buyer });
            }
            if !reports.reports[a.buyer].items.contains(&item) {
                out.push(OutcomeViolation::UndeclaredInterest {
                    buyer: a.buyer,
                    item,
                });
            }
            if a.price != self.payments[a.buyer] {
                out.push(OutcomeViolation::PaymentMismatch { buyer: a.buyer });
            }
        }
        for (buyer, &p) in self.payments.iter().enumerate() {
            if p < S::zero() {
                out.push(OutcomeViolation::NegativePayment { buyer });
            }
            if !matched[buyer] && p != S::zero() {
                out.push(OutcomeViolation::UnmatchedPays { buyer });
            }
        }
        out
    }
}
