//! Cross-dataset architecture selection.
//!
//! For every model family, a fixed pool of candidate genotypes is drawn from the
//! family's gene space and each candidate is probe-trained on every dataset.
//! The top trials of each dataset are intersected by body key; when the
//! intersection is non-empty its best member (by mean score) is selected,
//! otherwise every trial genotype is scored on every dataset and the best mean
//! across that table wins. Ties always break on the genotype key.
//!
//! Scoring is abstracted behind [`Scorer`] so the selection logic can be driven
//! by hand-built score tables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::Taxonomy;
use crate::nn::{realize, train, Family, Genotype, ImageSet, TrainConfig, PARAM_BUDGET};
use crate::objectives::ObjectiveKind;
use crate::util::{fnv1a, mix_seed, rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub trials_per_dataset: usize,
    pub keep_top_k: usize,
    pub probe_epochs: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            trials_per_dataset: 12,
            keep_top_k: 5,
            probe_epochs: 5,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_dataset == 0 || self.keep_top_k == 0 || self.probe_epochs == 0 {
            return Err(Error::InvalidParam("search counts must be positive".into()));
        }
        if self.keep_top_k > self.trials_per_dataset {
            return Err(Error::InvalidParam(
                "keep_top_k must not exceed trials_per_dataset".into(),
            ));
        }
        Ok(())
    }
}

/// One scored (genotype, dataset) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub family: Family,
    pub genotype: Genotype,
    pub dataset: usize,
    pub score: f64,
    pub seed: u64,
}

/// Which selection path produced the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Common,
    ScoreTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub genotype: Genotype,
    pub dataset: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub family: Family,
    pub genotype: Genotype,
    pub mean_score: f64,
    pub branch: Branch,
    /// Top trials per dataset, in dataset order.
    pub trials: Vec<Vec<Trial>>,
    /// Populated only on the fallback branch.
    pub score_table: Vec<ScoreRow>,
    pub warnings: Vec<String>,
}

/// Scores a genotype on one dataset.
pub trait Scorer {
    fn score(&mut self, genotype: &Genotype, dataset: usize, seed: u64) -> Result<f64>;
}

impl<F> Scorer for F
where
    F: FnMut(&Genotype, usize, u64) -> Result<f64>,
{
    fn score(&mut self, genotype: &Genotype, dataset: usize, seed: u64) -> Result<f64> {
        self(genotype, dataset, seed)
    }
}

/// Seed used for every trial of `genotype` on `dataset`.
pub fn trial_seed(seed: u64, genotype: &Genotype, dataset: usize) -> u64 {
    mix_seed(seed, fnv1a(genotype.key().as_bytes()) ^ dataset as u64)
}

/// Draws up to `cfg.trials_per_dataset` distinct budget-respecting genotypes of
/// `family`, realizable with `max_head` outputs at `input_side`.
pub fn candidates(
    family: Family,
    max_head: usize,
    input_side: usize,
    cfg: &SearchConfig,
) -> (Vec<Genotype>, Vec<String>) {
    let mut pool: Vec<Genotype> = family
        .enumerate()
        .into_iter()
        .filter(|g| matches!(g.param_count(input_side, max_head), Ok(n) if n <= PARAM_BUDGET))
        .collect();
    let mut warnings = Vec::new();
    if pool.len() < cfg.trials_per_dataset {
        warnings.push(alloc::format!(
            "{family} gene space has only {} admissible genotypes; using all of them",
            pool.len()
        ));
        return (pool, warnings);
    }
    let mut r = rng(mix_seed(cfg.seed, fnv1a(family.as_str().as_bytes())));
    let (picked, _) = rand::seq::SliceRandom::partial_shuffle(
        pool.as_mut_slice(),
        &mut r,
        cfg.trials_per_dataset,
    );
    (picked.to_vec(), warnings)
}

fn by_score_then_key(a: &(f64, String), b: &(f64, String)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.1.cmp(&b.1))
}

/// Scores every candidate on `dataset` and keeps the best `keep_top_k`.
pub fn search_trials(
    family: Family,
    candidates: &[Genotype],
    dataset: usize,
    cfg: &SearchConfig,
    scorer: &mut dyn Scorer,
) -> Result<Vec<Trial>> {
    let mut scored = Vec::with_capacity(candidates.len());
    for g in candidates {
        let seed = trial_seed(cfg.seed, g, dataset);
        let score = scorer.score(g, dataset, seed)?;
        scored.push(((score, g.key()), Trial { family, genotype: g.clone(), dataset, score, seed }));
    }
    scored.sort_by(|a, b| by_score_then_key(&a.0, &b.0));
    scored.truncate(cfg.keep_top_k);
    Ok(scored.into_iter().map(|(_, t)| t).collect())
}

/// Selects one genotype from per-dataset trial lists.
///
/// `trials[d]` holds the top trials of dataset `d`. `scorer` is consulted only
/// when the lists share no genotype key.
pub fn select_from_trials(
    family: Family,
    trials: Vec<Vec<Trial>>,
    seed: u64,
    scorer: &mut dyn Scorer,
) -> Result<Selection> {
    if trials.is_empty() {
        return Err(Error::Empty("dataset list"));
    }
    if trials.iter().any(Vec::is_empty) {
        return Err(Error::Empty("trial list"));
    }
    let n = trials.len();
    let mut known: BTreeMap<(String, usize), f64> = BTreeMap::new();
    let mut genotypes: BTreeMap<String, Genotype> = BTreeMap::new();
    for t in trials.iter().flatten() {
        let key = t.genotype.key();
        known.insert((key.clone(), t.dataset), t.score);
        genotypes.entry(key).or_insert_with(|| t.genotype.clone());
    }

    let key_sets: Vec<BTreeSet<String>> = trials
        .iter()
        .map(|list| list.iter().map(|t| t.genotype.key()).collect())
        .collect();
    let common: Vec<String> = key_sets[0]
        .iter()
        .filter(|k| key_sets[1..].iter().all(|s| s.contains(*k)))
        .cloned()
        .collect();

    let mut score_table = Vec::new();
    let (branch, pool) = if common.is_empty() {
        for (key, g) in &genotypes {
            for d in 0..n {
                let score = match known.get(&(key.clone(), d)) {
                    Some(&s) => s,
                    None => {
                        let s = scorer.score(g, d, trial_seed(seed, g, d))?;
                        known.insert((key.clone(), d), s);
                        s
                    }
                };
                score_table.push(ScoreRow { genotype: g.clone(), dataset: d, score });
            }
        }
        (Branch::ScoreTable, genotypes.keys().cloned().collect::<Vec<_>>())
    } else {
        (Branch::Common, common)
    };

    let mut ranked: Vec<(f64, String)> = pool
        .into_iter()
        .map(|k| {
            let mean = (0..n).map(|d| known[&(k.clone(), d)]).sum::<f64>() / n as f64;
            (mean, k)
        })
        .collect();
    ranked.sort_by(by_score_then_key);
    let (mean_score, key) = ranked.swap_remove(0);
    Ok(Selection {
        family,
        genotype: genotypes[&key].clone(),
        mean_score,
        branch,
        trials,
        score_table,
        warnings: Vec::new(),
    })
}

/// Runs the full per-family search against any scorer.
///
/// `head_sizes[d]` is the largest head a model trained on dataset `d` may need;
/// candidates are restricted to genotypes within budget for all of them.
pub fn select_optimal_with(
    families: &[Family],
    head_sizes: &[usize],
    input_side: usize,
    cfg: &SearchConfig,
    scorer: &mut dyn Scorer,
) -> Result<Vec<Selection>> {
    cfg.validate()?;
    if families.is_empty() {
        return Err(Error::Empty("family list"));
    }
    let max_head = *head_sizes.iter().max().ok_or(Error::Empty("dataset list"))?;
    let mut out = Vec::with_capacity(families.len());
    for &family in families {
        let (pool, warnings) = candidates(family, max_head, input_side, cfg);
        if pool.is_empty() {
            return Err(Error::Genotype(alloc::format!(
                "no {family} genotype fits the parameter budget"
            )));
        }
        let mut trials = Vec::with_capacity(head_sizes.len());
        for d in 0..head_sizes.len() {
            trials.push(search_trials(family, &pool, d, cfg, scorer)?);
        }
        let mut sel = select_from_trials(family, trials, cfg.seed, scorer)?;
        sel.warnings = warnings;
        out.push(sel);
    }
    Ok(out)
}

/// A dataset available to the search: decoded train and validation images.
#[derive(Debug, Clone, Copy)]
pub struct SearchDataset<'a> {
    pub taxonomy: &'a Taxonomy,
    pub train: &'a ImageSet,
    pub val: &'a ImageSet,
}

/// Scores by CCE probe training and final validation accuracy.
pub struct ProbeScorer<'a> {
    pub datasets: &'a [SearchDataset<'a>],
    pub train: TrainConfig,
}

impl Scorer for ProbeScorer<'_> {
    fn score(&mut self, genotype: &Genotype, dataset: usize, seed: u64) -> Result<f64> {
        let ds = self.datasets.get(dataset).ok_or_else(|| {
            Error::InvalidParam(alloc::format!("dataset index {dataset} out of range"))
        })?;
        let model = realize(genotype, ds.taxonomy.len(), self.train.input_side, seed)?;
        let cfg = TrainConfig { seed, ..self.train.clone() };
        let (_, history) = train(model, ds.train, ds.val, ds.taxonomy, ObjectiveKind::Cce, &cfg)?;
        Ok(history.last().map_or(0.0, |h| h.accuracy))
    }
}

/// Probe-trains candidates of each family on every dataset and selects one
/// genotype per family.
///
/// Candidates must fit the budget with one extra output beyond each dataset's
/// class count, so the selection can later be trained under any objective.
pub fn select_optimal(
    families: &[Family],
    datasets: &[SearchDataset<'_>],
    cfg: &SearchConfig,
    base: &TrainConfig,
) -> Result<Vec<Selection>> {
    if datasets.is_empty() {
        return Err(Error::Empty("dataset list"));
    }
    let heads: Vec<usize> = datasets.iter().map(|d| d.taxonomy.len() + 1).collect();
    let mut scorer = ProbeScorer {
        datasets,
        train: TrainConfig { epochs: cfg.probe_epochs, ..base.clone() },
    };
    select_optimal_with(families, &heads, base.input_side, cfg, &mut scorer)
}

impl Trial {
    pub fn key(&self) -> String {
        self.genotype.key()
    }
}

impl core::fmt::Display for Branch {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Branch::Common => "common",
            Branch::ScoreTable => "score_table",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn g(key: &str) -> Genotype {
        key.parse().unwrap()
    }

    fn trial(key: &str, dataset: usize, score: f64) -> Trial {
        Trial { family: g(key).family(), genotype: g(key), dataset, score, seed: 0 }
    }

    fn no_scoring(_: &Genotype, _: usize, _: u64) -> Result<f64> {
        panic!("scorer must not be consulted on the common branch")
    }

    #[test]
    fn common_branch_picks_best_mean() {
        let trials = vec![
            vec![trial("conv:8", 0, 0.9), trial("conv:16", 0, 0.8), trial("conv:32", 0, 0.7)],
            vec![trial("conv:16", 1, 0.95), trial("conv:8", 1, 0.6), trial("conv:48", 1, 0.99)],
        ];
        let sel = select_from_trials(Family::Conv, trials, 0, &mut no_scoring).unwrap();
        assert_eq!(sel.branch, Branch::Common);
        assert_eq!(sel.genotype.key(), "conv:16");
        assert!((sel.mean_score - 0.875).abs() < 1e-12);
    }

    #[test]
    fn disjoint_lists_fall_back_to_score_table() {
        let trials = vec![
            vec![trial("conv:8", 0, 0.9)],
            vec![trial("conv:16", 1, 0.7)],
        ];
        let mut calls = Vec::new();
        let mut scorer = |g: &Genotype, d: usize, _: u64| -> Result<f64> {
            calls.push((g.key(), d));
            Ok(match (g.key().as_str(), d) {
                ("conv:8", 1) => 0.2,
                ("conv:16", 0) => 0.8,
                _ => unreachable!(),
            })
        };
        let sel = select_from_trials(Family::Conv, trials, 0, &mut scorer).unwrap();
        assert_eq!(sel.branch, Branch::ScoreTable);
        assert_eq!(sel.genotype.key(), "conv:16");
        assert_eq!(sel.score_table.len(), 4);
        assert_eq!(calls.len(), 2);
    }

    #[test]
    fn single_dataset_is_argmax() {
        let trials = vec![vec![trial("conv:8", 0, 0.5), trial("conv:16", 0, 0.5), trial("conv:32", 0, 0.4)]];
        let sel = select_from_trials(Family::Conv, trials, 0, &mut no_scoring).unwrap();
        assert_eq!(sel.genotype.key(), "conv:16");
    }

    #[test]
    fn top_k_matches_sort_oracle() {
        let cfg = SearchConfig { trials_per_dataset: 20, keep_top_k: 6, seed: 4, ..Default::default() };
        let (pool, warnings) = candidates(Family::Dilated, 5, 64, &cfg);
        assert!(warnings.is_empty());
        assert_eq!(pool.len(), 20);
        let keys: BTreeSet<_> = pool.iter().map(Genotype::key).collect();
        assert_eq!(keys.len(), 20);
        let fixed = |g: &Genotype| (fnv1a(g.key().as_bytes()) % 7) as f64 / 7.0;
        let mut scorer = |g: &Genotype, _: usize, _: u64| Ok(fixed(g));
        let got = search_trials(Family::Dilated, &pool, 0, &cfg, &mut scorer).unwrap();
        let mut oracle: Vec<(f64, String)> = pool.iter().map(|g| (fixed(g), g.key())).collect();
        oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let want: Vec<String> = oracle.into_iter().take(6).map(|x| x.1).collect();
        let got: Vec<String> = got.iter().map(Trial::key).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn small_space_uses_everything() {
        let cfg = SearchConfig { trials_per_dataset: 1000, keep_top_k: 5, ..Default::default() };
        let (pool, warnings) = candidates(Family::Conv, 4, 64, &cfg);
        assert_eq!(warnings.len(), 1);
        assert!(pool.iter().all(|g| g.param_count(64, 4).unwrap() <= PARAM_BUDGET));
        assert!(!pool.is_empty());
    }

    #[test]
    fn end_to_end_with_mock_is_deterministic_and_in_budget() {
        let cfg = SearchConfig { seed: 9, ..Default::default() };
        let run = || {
            let mut scorer = |g: &Genotype, d: usize, s: u64| {
                Ok(((fnv1a(g.key().as_bytes()) ^ s ^ d as u64) % 1000) as f64 / 1000.0)
            };
            select_optimal_with(&Family::ALL, &[4, 9], 64, &cfg, &mut scorer).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        for sel in &a {
            for head in [4, 9] {
                assert!(sel.genotype.param_count(64, head).unwrap() <= PARAM_BUDGET);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig { keep_top_k: 13, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(select_from_trials(Family::Conv, vec![], 0, &mut no_scoring).is_err());
    }

    proptest! {
        #[test]
        fn branch_iff_intersection(lists in proptest::collection::vec(
            proptest::collection::btree_map(0usize..6, 0u32..10, 1..4), 1..4)
        ) {
            let keys = ["conv:8", "conv:16", "conv:32", "conv:48", "conv:8-8", "conv:8-16"];
            let trials: Vec<Vec<Trial>> = lists.iter().enumerate().map(|(d, m)| {
                m.iter().map(|(&k, &s)| trial(keys[k], d, s as f64 / 10.0)).collect()
            }).collect();
            let sets: Vec<BTreeSet<usize>> = lists.iter().map(|m| m.keys().copied().collect()).collect();
            let inter: BTreeSet<usize> = sets.iter().skip(1)
                .fold(sets[0].clone(), |acc, s| acc.intersection(s).copied().collect());
            let mut scorer = |_: &Genotype, _: usize, _: u64| Ok(0.0);
            let sel = select_from_trials(Family::Conv, trials, 0, &mut scorer).unwrap();
            prop_assert_eq!(sel.branch == Branch::Common, !inter.is_empty());
            if !inter.is_empty() {
                prop_assert!(inter.iter().any(|&k| keys[k] == sel.genotype.key()));
            }
        }
    }
}
