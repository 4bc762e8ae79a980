//! Majority voting across models with a per-crop planting budget.
//!
//! For each object, in order:
//!
//! 1. If every model agrees, that category is the answer.
//! 2. Otherwise, if one crop category holds strictly more than half of the
//!    votes and fewer objects have been assigned to it than were planted, it
//!    is the answer.
//! 3. Otherwise the object is marked unknown.
//!
//! Every crop answer, including unanimous ones, counts against the budget.
//! Counters saturate at the planted total.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{Group, Taxonomy, UNKNOWN_NAME};
use crate::{Error, Result};

/// Planted totals and running assignment counts per category index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropBudget {
    totals: Vec<usize>,
    assigned: Vec<usize>,
}

impl CropBudget {
    /// Builds a budget from `(category name, planted count)` pairs. Crops not
    /// listed get a total of zero.
    pub fn new<S: AsRef<str>>(tax: &Taxonomy, totals: &[(S, usize)]) -> Result<Self> {
        let mut t = vec![0; tax.len()];
        for (name, count) in totals {
            let name = name.as_ref();
            let idx = tax
                .index_of(name)
                .ok_or_else(|| Error::UnknownCategory(name.into()))?;
            if !tax.is_crop(idx) {
                return Err(Error::InvalidParam(alloc::format!(
                    "budget entry '{name}' is not a crop"
                )));
            }
            t[idx] = *count;
        }
        Ok(CropBudget { assigned: vec![0; t.len()], totals: t })
    }

    pub fn total(&self, category: usize) -> usize {
        self.totals.get(category).copied().unwrap_or(0)
    }

    pub fn assigned(&self, category: usize) -> usize {
        self.assigned.get(category).copied().unwrap_or(0)
    }

    pub fn has_gap(&self, category: usize) -> bool {
        self.assigned(category) < self.total(category)
    }

    fn consume(&mut self, category: usize) {
        if self.has_gap(category) {
            self.assigned[category] += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionType {
    Crop,
    Weed,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Act {
    Cultivate,
    Remove,
    Review,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Unanimous,
    CropMajority,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleDecision {
    pub category: usize,
    pub cate: String,
    #[serde(rename = "type")]
    pub kind: DecisionType,
    pub act: Act,
    pub rule_fired: Rule,
}

impl EnsembleDecision {
    fn new(category: usize, tax: &Taxonomy, rule: Rule) -> Self {
        let (kind, act) = match tax.group(category) {
            Some(Group::Crop) => (DecisionType::Crop, Act::Cultivate),
            Some(Group::Weed) => (DecisionType::Weed, Act::Remove),
            None => (DecisionType::Unknown, Act::Review),
        };
        let cate = if kind == DecisionType::Unknown { UNKNOWN_NAME } else { tax.name(category) };
        EnsembleDecision { category, cate: cate.into(), kind, act, rule_fired: rule }
    }
}

/// Policy switches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsemblePolicy {
    /// Require a budget gap for unanimous crop votes as well.
    pub strict: bool,
}

/// Decides one object from its `votes` (category indices, with
/// `tax.unknown_index()` for unknown), updating `budget`.
pub fn ensemble_predict(
    votes: &[usize],
    tax: &Taxonomy,
    budget: &mut CropBudget,
    policy: EnsemblePolicy,
) -> Result<EnsembleDecision> {
    let first = *votes.first().ok_or(Error::Empty("vote list"))?;
    let unknown = tax.unknown_index();
    let mut counts = vec![0usize; unknown + 1];
    for &v in votes {
        if v > unknown {
            return Err(Error::CategoryIndex(v));
        }
        counts[v] += 1;
    }

    if counts[first] == votes.len() && !(policy.strict && tax.is_crop(first) && !budget.has_gap(first)) {
        if tax.is_crop(first) {
            budget.consume(first);
        }
        return Ok(EnsembleDecision::new(first, tax, Rule::Unanimous));
    }
    let majority = tax
        .crops()
        .find(|&c| 2 * counts[c] > votes.len() && budget.has_gap(c));
    if let Some(c) = majority {
        budget.consume(c);
        return Ok(EnsembleDecision::new(c, tax, Rule::CropMajority));
    }
    Ok(EnsembleDecision::new(unknown, tax, Rule::Unknown))
}

/// Decides `N` objects in order. `per_model[j][i]` is model `j`'s vote on
/// object `i`.
pub fn ensemble_run(
    per_model: &[Vec<usize>],
    tax: &Taxonomy,
    budget: &mut CropBudget,
    policy: EnsemblePolicy,
) -> Result<Vec<EnsembleDecision>> {
    let first = per_model.first().ok_or(Error::Empty("model list"))?;
    for (model, preds) in per_model.iter().enumerate() {
        if preds.len() != first.len() {
            return Err(Error::Ragged { model, expected: first.len(), got: preds.len() });
        }
    }
    let mut votes = Vec::with_capacity(per_model.len());
    (0..first.len())
        .map(|i| {
            votes.clear();
            votes.extend(per_model.iter().map(|p| p[i]));
            ensemble_predict(&votes, tax, budget, policy)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // crop1=0, crop2=1, weed1=2, weed2=3, unknown=4
    fn tax() -> Taxonomy {
        Taxonomy::from_groups(&["crop1", "crop2"], &["weed1", "weed2"]).unwrap()
    }

    fn budget(total: usize) -> CropBudget {
        CropBudget::new(&tax(), &[("crop1", total), ("crop2", total)]).unwrap()
    }

    fn decide(votes: &[usize], b: &mut CropBudget) -> EnsembleDecision {
        ensemble_predict(votes, &tax(), b, EnsemblePolicy::default()).unwrap()
    }

    #[test]
    fn documented_vote_cases() {
        let mut b = budget(5);
        let d = decide(&[0, 0, 2], &mut b);
        assert_eq!((d.cate.as_str(), d.act, d.rule_fired), ("crop1", Act::Cultivate, Rule::CropMajority));
        assert_eq!(b.assigned(0), 1);
        let d = decide(&[3, 3, 3], &mut b);
        assert_eq!((d.cate.as_str(), d.kind, d.act), ("weed2", DecisionType::Weed, Act::Remove));
        let d = decide(&[0, 1, 2], &mut b);
        assert_eq!((d.cate.as_str(), d.act), ("unknown", Act::Review));
        let mut full = budget(0);
        assert_eq!(decide(&[0, 0, 2], &mut full).kind, DecisionType::Unknown);
    }

    #[test]
    fn weed_majority_is_unknown() {
        assert_eq!(decide(&[2, 2, 0], &mut budget(3)).rule_fired, Rule::Unknown);
    }

    #[test]
    fn unanimous_crop_bypasses_budget_unless_strict() {
        let mut b = budget(1);
        assert_eq!(decide(&[0, 0, 0], &mut b).cate, "crop1");
        assert_eq!(b.assigned(0), 1);
        assert_eq!(decide(&[0, 0, 0], &mut b).cate, "crop1");
        assert_eq!(b.assigned(0), 1);
        let strict = EnsemblePolicy { strict: true };
        let d = ensemble_predict(&[0, 0, 0], &tax(), &mut b, strict).unwrap();
        assert_eq!(d.kind, DecisionType::Unknown);
    }

    #[test]
    fn run_traces_budget() {
        let t = tax();
        let mut b = CropBudget::new(&t, &[("crop1", 1)]).unwrap();
        let per_model = vec![vec![0, 0], vec![0, 0], vec![2, 2]];
        let out = ensemble_run(&per_model, &t, &mut b, EnsemblePolicy::default()).unwrap();
        assert_eq!(out[0].cate, "crop1");
        assert_eq!(out[1].cate, "unknown");
    }

    #[test]
    fn errors() {
        let t = tax();
        let mut b = budget(1);
        assert!(ensemble_predict(&[], &t, &mut b, EnsemblePolicy::default()).is_err());
        assert!(matches!(
            ensemble_predict(&[0, 5], &t, &mut b, EnsemblePolicy::default()),
            Err(Error::CategoryIndex(5))
        ));
        assert!(matches!(
            ensemble_run(&[vec![0], vec![0, 1]], &t, &mut b, EnsemblePolicy::default()),
            Err(Error::Ragged { model: 1, .. })
        ));
        assert!(CropBudget::new(&t, &[("weed1", 1)]).is_err());
        assert!(CropBudget::new(&t, &[("nope", 1)]).is_err());
    }

    #[test]
    fn decision_serializes_with_type_field() {
        let d = decide(&[2, 2, 2], &mut budget(1));
        let json = serde_json::to_string(&d).unwrap();
        assert!(json.contains("\"type\":\"weed\""), "{json}");
        assert!(json.contains("\"rule_fired\":\"unanimous\""), "{json}");
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_budget_bounded(
            votes in proptest::collection::vec(0usize..5, 1..7),
            total in 0usize..3,
            rot in 0usize..7,
        ) {
            let mut a = budget(total);
            let mut b = budget(total);
            let mut shuffled = votes.clone();
            let n = shuffled.len();
            shuffled.rotate_left(rot % n);
            shuffled.reverse();
            let da = decide(&votes, &mut a);
            let db = decide(&shuffled, &mut b);
            prop_assert_eq!(da, db);
            prop_assert_eq!(&a, &b);
            for c in 0..2 {
                prop_assert!(a.assigned(c) <= a.total(c));
            }
        }
    }
}
