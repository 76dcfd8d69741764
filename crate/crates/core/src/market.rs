//! The market: true instances and what buyers declare about them.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A unit-demand buyer with one value for any item in its desired set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Buyer<S> {
    pub id: usize,
    pub value: S,
    pub items: BTreeSet<usize>,
}

/// True market. Items arrive in index order `0, 1, …, num_items - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance<S> {
    pub num_items: usize,
    pub buyers: Vec<Buyer<S>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    ItemOutOfRange { buyer: usize, item: usize },
    DuplicateId { id: usize },
    MissingId { id: usize },
    NegativeValue { buyer: usize },
    NonFiniteValue { buyer: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ItemOutOfRange { buyer, item } => {
                write!(f, "buyer {buyer} references item {item} out of range")
            }
            Violation::DuplicateId { id } => write!(f, "buyer id {id} appears more than once"),
            Violation::MissingId { id } => write!(f, "buyer id {id} is missing"),
            Violation::NegativeValue { buyer } => write!(f, "buyer {buyer} has a negative value"),
            Violation::NonFiniteValue { buyer } => {
                write!(f, "buyer {buyer} has a non-finite value")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Lists every invariant violation; empty iff the instance is well formed.
pub fn validate_instance<S: Scalar>(inst: &Instance<S>) -> ValidationReport {
    let n = inst.buyers.len();
    let mut violations = Vec::new();
    let mut seen = vec![0usize; n];
    for buyer in &inst.buyers {
        if buyer.id < n {
            seen[buyer.id] += 1;
            if seen[buyer.id] == 2 {
                violations.push(Violation::DuplicateId { id: buyer.id });
            }
        }
        if !buyer.value.is_finite_value() {
            violations.push(Violation::NonFiniteValue { buyer: buyer.id });
        } else if buyer.value < S::zero() {
            violations.push(Violation::NegativeValue { buyer: buyer.id });
        }
        for &item in buyer.items.iter().filter(|&&j| j >= inst.num_items) {
            violations.push(Violation::ItemOutOfRange { buyer: buyer.id, item });
        }
    }
    for (id, _) in seen.iter().enumerate().filter(|(_, &c)| c == 0) {
        violations.push(Violation::MissingId { id });
    }
    ValidationReport { violations }
}

impl<S: Scalar> Instance<S> {
    /// Sorts buyers by id and validates.
    pub fn new(num_items: usize, mut buyers: Vec<Buyer<S>>) -> Result<Self> {
        buyers.sort_by_key(|b| b.id);
        let inst = Instance { num_items, buyers };
        let report = validate_instance(&inst);
        if report.is_valid() {
            Ok(inst)
        } else {
            Err(Error::InvalidInstance(report))
        }
    }

    /// Builds an instance from `(value, items)` pairs; buyer ids follow list order.
    pub fn from_pairs<I>(num_items: usize, buyers: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<usize>)>,
    {
        let buyers = buyers
            .into_iter()
            .enumerate()
            .map(|(id, (value, items))| Buyer {
                id,
                value,
                items: items.into_iter().collect(),
            })
            .collect();
        Self::new(num_items, buyers)
    }

    pub fn num_buyers(&self) -> usize {
        self.buyers.len()
    }

    /// `ν = min(m, n)`.
    pub fn nu(&self) -> usize {
        self.num_items.min(self.buyers.len())
    }

    pub fn value(&self, buyer: usize) -> S {
        self.buyers[buyer].value
    }

    pub fn wants(&self, buyer: usize, item: usize) -> bool {
        self.buyers[buyer].items.contains(&item)
    }

    pub fn max_value(&self) -> S {
        self.buyers
            .iter()
            .fold(S::zero(), |acc, b| acc.max_of(b.value))
    }

    pub fn map_values<T: Scalar>(&self, f: impl Fn(S) -> T) -> Instance<T> {
        Instance {
            num_items: self.num_items,
            buyers: self
                .buyers
                .iter()
                .map(|b| Buyer {
                    id: b.id,
                    value: f(b.value),
                    items: b.items.clone(),
                })
                .collect(),
        }
    }
}

impl Instance<f64> {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Instance<f64> = serde_json::from_str(text)?;
        Self::new(raw.num_items, raw.buyers)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances always serialize")
    }
}

/// What one buyer declares: a single value and the items it claims to want.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<S> {
    pub value: S,
    pub items: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportProfile<S> {
    pub reports: Vec<Report<S>>,
}

/// A declared bid on the current item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bid<S> {
    pub buyer: usize,
    pub value: S,
}

impl<S: Scalar> ReportProfile<S> {
    pub fn truthful(inst: &Instance<S>) -> Self {
        ReportProfile {
            reports: inst
                .buyers
                .iter()
                .map(|b| Report {
                    value: b.value,
                    items: b.items.clone(),
                })
                .collect(),
        }
    }

    pub fn num_buyers(&self) -> usize {
        self.reports.len()
    }

    pub fn with_report(&self, buyer: usize, report: Report<S>) -> Self {
        let mut out = self.clone();
        out.reports[buyer] = report;
        out
    }

    pub fn with_value(&self, buyer: usize, value: S) -> Self {
        let mut out = self.clone();
        out.reports[buyer].value = value;
        out
    }

    /// Per-item lists of declared bids, in increasing buyer id. Items at or
    /// beyond `num_items` are ignored.
    pub fn bids_by_item(&self, num_items: usize) -> Vec<Vec<Bid<S>>> {
        let mut rounds = vec![Vec::new(); num_items];
        for (buyer, report) in self.reports.iter().enumerate() {
            for &item in report.items.range(..num_items) {
                rounds[item].push(Bid {
                    buyer,
                    value: report.value,
                });
            }
        }
        rounds
    }
}
