//! Labeled sample collections, weed re-sampling and stratified splitting.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize, Serializer};

use crate::util::{mix_seed, rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Crop,
    Weed,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Crop => "crop",
            Group::Weed => "weed",
        }
    }
}

impl core::str::FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crop" => Ok(Group::Crop),
            "weed" => Ok(Group::Weed),
            other => Err(Error::Taxonomy(format!(
                "group must be `crop` or `weed`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    pub group: Group,
}

/// The class universe. Category indices follow insertion order; the synthetic
/// unknown class always takes index `len()`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Taxonomy {
    categories: Vec<Category>,
}

pub const UNKNOWN_NAME: &str = "unknown";

impl Taxonomy {
    pub fn new(categories: Vec<Category>) -> Result<Self> {
        let mut tax = Taxonomy::default();
        for c in categories {
            tax.push(c.name, c.group)?;
        }
        Ok(tax)
    }

    /// Builds a taxonomy from crop and weed name lists (crops first).
    pub fn from_groups<S: AsRef<str>>(crops: &[S], weeds: &[S]) -> Result<Self> {
        let mut tax = Taxonomy::default();
        for c in crops {
            tax.push(c.as_ref().to_string(), Group::Crop)?;
        }
        for w in weeds {
            tax.push(w.as_ref().to_string(), Group::Weed)?;
        }
        tax.require_both_groups()?;
        Ok(tax)
    }

    /// Adds a category, returning its index. Re-adding an existing name with
    /// the same group returns the existing index.
    pub fn push(&mut self, name: String, group: Group) -> Result<usize> {
        if name == UNKNOWN_NAME {
            return Err(Error::Taxonomy(format!("`{UNKNOWN_NAME}` is reserved")));
        }
        if let Some(i) = self.index_of(&name) {
            if self.categories[i].group != group {
                return Err(Error::Taxonomy(format!(
                    "category `{name}` listed as both {} and {}",
                    self.categories[i].group.as_str(),
                    group.as_str()
                )));
            }
            return Ok(i);
        }
        self.categories.push(Category { name, group });
        Ok(self.categories.len() - 1)
    }

    pub fn require_both_groups(&self) -> Result<()> {
        if self.crops().next().is_none() || self.weeds().next().is_none() {
            return Err(Error::Taxonomy(
                "taxonomy needs at least one crop and one weed category".into(),
            ));
        }
        Ok(())
    }

    /// Number of named categories (excluding unknown).
    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn unknown_index(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c.name == name)
    }

    /// Group of a category index; `None` for the unknown class.
    pub fn group(&self, index: usize) -> Option<Group> {
        self.categories.get(index).map(|c| c.group)
    }

    /// Name for any index, including `unknown`.
    pub fn name(&self, index: usize) -> &str {
        self.categories
            .get(index)
            .map(|c| c.name.as_str())
            .unwrap_or(UNKNOWN_NAME)
    }

    pub fn crops(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices_of(Group::Crop)
    }

    pub fn weeds(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices_of(Group::Weed)
    }

    fn indices_of(&self, g: Group) -> impl Iterator<Item = usize> + '_ {
        self.categories
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.group == g)
            .map(|(i, _)| i)
    }

    pub fn is_weed(&self, index: usize) -> bool {
        self.group(index) == Some(Group::Weed)
    }

    pub fn is_crop(&self, index: usize) -> bool {
        self.group(index) == Some(Group::Crop)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub image_path: String,
    /// Index into the owning dataset's taxonomy.
    pub category: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetKind {
    /// Complete data set, as labeled.
    Complete,
    /// Weed classes re-sampled toward a 1:1 weed:crop ratio.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub taxonomy: Taxonomy,
    pub kind: DatasetKind,
}

impl Dataset {
    /// Builds a complete dataset from `(path, category, group)` rows. The
    /// taxonomy is inferred in order of first appearance; `row` numbers in
    /// errors are 1-based data rows.
    pub fn from_rows<I, P, C, G>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, C, G)>,
        P: Into<String>,
        C: AsRef<str>,
        G: AsRef<str>,
    {
        let mut taxonomy = Taxonomy::default();
        let mut samples = Vec::new();
        for (i, (path, cat, group)) in rows.into_iter().enumerate() {
            let row = i + 1;
            let path = path.into();
            let cat = cat.as_ref();
            if path.is_empty() || cat.is_empty() {
                return Err(Error::Manifest {
                    row,
                    message: "empty path or category".into(),
                });
            }
            let group: Group = group.as_ref().parse().map_err(|e: Error| Error::Manifest {
                row,
                message: e.to_string(),
            })?;
            let category = taxonomy
                .push(cat.to_string(), group)
                .map_err(|e| Error::Manifest {
                    row,
                    message: e.to_string(),
                })?;
            samples.push(Sample {
                image_path: path,
                category,
            });
        }
        Ok(Dataset {
            samples,
            taxonomy,
            kind: DatasetKind::Complete,
        })
    }

    /// Rows in manifest order: `(path, category, group)`.
    pub fn rows(&self) -> impl Iterator<Item = (&str, &str, &'static str)> + '_ {
        self.samples.iter().map(|s| {
            let c = &self.taxonomy.categories()[s.category];
            (s.image_path.as_str(), c.name.as_str(), c.group.as_str())
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.category).collect()
    }

    /// Re-expresses the samples against another taxonomy, matching by name.
    pub fn reindexed(&self, target: &Taxonomy) -> Result<Dataset> {
        let map: Vec<usize> = self
            .taxonomy
            .categories()
            .iter()
            .map(|c| {
                let j = target
                    .index_of(&c.name)
                    .ok_or_else(|| Error::UnknownCategory(c.name.clone()))?;
                if target.group(j) != Some(c.group) {
                    return Err(Error::Taxonomy(format!(
                        "category `{}` changes group between taxonomies",
                        c.name
                    )));
                }
                Ok(j)
            })
            .collect::<Result<_>>()?;
        Ok(Dataset {
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    image_path: s.image_path.clone(),
                    category: map[s.category],
                })
                .collect(),
            taxonomy: target.clone(),
            kind: self.kind,
        })
    }

    fn subset(&self, mut keep: Vec<usize>, kind: DatasetKind) -> Dataset {
        keep.sort_unstable();
        Dataset {
            samples: keep.into_iter().map(|i| self.samples[i].clone()).collect(),
            taxonomy: self.taxonomy.clone(),
            kind,
        }
    }

    fn indices_by_category(&self) -> Vec<Vec<usize>> {
        let mut by_cat = vec![Vec::new(); self.taxonomy.len()];
        for (i, s) in self.samples.iter().enumerate() {
            by_cat[s.category].push(i);
        }
        by_cat
    }
}

/// Per-weed-class sampling rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRatePlan {
    pub alpha: f64,
    pub beta: f64,
    /// `(weed category index, rate in [0,1])` in taxonomy order.
    pub rates: Vec<(usize, f64)>,
}

impl SampleRatePlan {
    pub fn rate(&self, category: usize) -> Option<f64> {
        self.rates
            .iter()
            .find(|(c, _)| *c == category)
            .map(|&(_, k)| k)
    }
}

pub const DEFAULT_ALPHA: f64 = 0.7;
pub const DEFAULT_BETA: f64 = 0.3;

/// `k_i = alpha * N_i / N + beta / classes`, clamped to [0,1].
///
/// Weed classes come from the taxonomy, so a weed class with zero samples
/// still counts toward the number of classes.
pub fn compute_sample_rates(ds: &Dataset, alpha: f64, beta: f64) -> Result<SampleRatePlan> {
    let by_cat = ds.indices_by_category();
    let weeds: Vec<usize> = ds.taxonomy.weeds().collect();
    let total: usize = weeds.iter().map(|&w| by_cat[w].len()).sum();
    if total == 0 {
        return Err(Error::NoWeeds);
    }
    let classes = weeds.len() as f64;
    let rates = weeds
        .iter()
        .map(|&w| {
            let k = alpha * (by_cat[w].len() as f64 / total as f64) + beta / classes;
            (w, k.clamp(0.0, 1.0))
        })
        .collect();
    Ok(SampleRatePlan { alpha, beta, rates })
}

/// Keeps every crop sample and `round(k_i * N_i)` samples of each weed class,
/// drawn uniformly without replacement. Output preserves input order.
pub fn build_sampled_dataset(ds: &Dataset, plan: &SampleRatePlan, seed: u64) -> Result<Dataset> {
    if ds.kind != DatasetKind::Complete {
        return Err(Error::InvalidParam(
            "re-sampling expects a complete data set".into(),
        ));
    }
    let mut keep = Vec::with_capacity(ds.len());
    for (cat, mut idx) in ds.indices_by_category().into_iter().enumerate() {
        if ds.taxonomy.is_crop(cat) {
            keep.extend(idx);
            continue;
        }
        let k = plan.rate(cat).unwrap_or(1.0);
        let n = libm::round(k * idx.len() as f64) as usize;
        let mut r = rng(mix_seed(seed, cat as u64));
        let take = n.min(idx.len());
        let (chosen, _) = idx.partial_shuffle(&mut r, take);
        keep.extend_from_slice(chosen);
    }
    Ok(ds.subset(keep, DatasetKind::Sampled))
}

pub const DEFAULT_SPLIT: (f64, f64, f64) = (0.8, 0.1, 0.1);

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    /// Categories too small to stratify, which went entirely to `train`.
    pub warnings: Vec<String>,
}

/// Stratified split: each category is shuffled with `seed` and partitioned by
/// largest-remainder rounding of `fractions`. Sample order is preserved
/// inside each part.
pub fn split(ds: &Dataset, fractions: (f64, f64, f64), seed: u64) -> Result<Split> {
    let f = [fractions.0, fractions.1, fractions.2];
    if f.iter().any(|&x| !(0.0..=1.0).contains(&x)) || libm::fabs(f.iter().sum::<f64>() - 1.0) > 1e-9 {
        return Err(Error::InvalidParam(format!(
            "split fractions must be in [0,1] and sum to 1, got {f:?}"
        )));
    }
    let nonzero = f.iter().filter(|&&x| x > 0.0).count();
    let mut parts: [Vec<usize>; 3] = Default::default();
    let mut warnings = Vec::new();
    for (cat, mut idx) in ds.indices_by_category().into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        if idx.len() < nonzero {
            warnings.push(format!(
                "category `{}` has {} samples for {} partitions; all assigned to train",
                ds.taxonomy.name(cat),
                idx.len(),
                nonzero
            ));
            parts[0].extend(idx);
            continue;
        }
        idx.shuffle(&mut rng(mix_seed(seed, cat as u64)));
        let counts = largest_remainder(idx.len(), &f);
        let mut start = 0;
        for (p, &c) in counts.iter().enumerate() {
            parts[p].extend_from_slice(&idx[start..start + c]);
            start += c;
        }
    }
    let [train, val, test] = parts;
    Ok(Split {
        train: ds.subset(train, ds.kind),
        val: ds.subset(val, ds.kind),
        test: ds.subset(test, ds.kind),
        warnings,
    })
}

fn largest_remainder(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, q) in counts.iter_mut().zip(&quotas) {
        *c = libm::floor(*q) as usize;
    }
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - counts[a] as f64;
        let rb = quotas[b] - counts[b] as f64;
        rb.partial_cmp(&ra).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &p in order.iter().take(n.saturating_sub(assigned)) {
        counts[p] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: String,
    pub group: Group,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub counts: Vec<CategoryCount>,
    pub weeds: usize,
    pub crops: usize,
    /// weeds / crops; infinite when there are weeds but no crops.
    #[serde(serialize_with = "ratio_or_inf")]
    pub weed_crop_ratio: f64,
}

fn ratio_or_inf<S: Serializer>(v: &f64, s: S) -> core::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn class_stats(ds: &Dataset) -> ClassStats {
    let by_cat = ds.indices_by_category();
    let counts: Vec<CategoryCount> = ds
        .taxonomy
        .categories()
        .iter()
        .zip(&by_cat)
        .map(|(c, idx)| CategoryCount {
            category: c.name.clone(),
            group: c.group,
            count: idx.len(),
        })
        .collect();
    let weeds = counts.iter().filter(|c| c.group == Group::Weed).map(|c| c.count).sum();
    let crops = counts.iter().filter(|c| c.group == Group::Crop).map(|c| c.count).sum();
    let weed_crop_ratio = match (weeds, crops) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        (w, c) => w as f64 / c as f64,
    };
    ClassStats {
        counts,
        weeds,
        crops,
        weed_crop_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(counts: &[(&str, &str, usize)]) -> Dataset {
        let mut rows = Vec::new();
        for &(cat, group, n) in counts {
            for i in 0..n {
                rows.push((format!("{cat}/{i}.png"), cat, group));
            }
        }
        Dataset::from_rows(rows).unwrap()
    }

    #[test]
    fn rows_infer_taxonomy() {
        let ds = Dataset::from_rows([
            ("a.png", "potato", "crop"),
            ("b.png", "thistle", "weed"),
            ("c.png", "potato", "crop"),
            ("d.png", "thistle", "weed"),
        ])
        .unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.taxonomy.len(), 2);
        assert_eq!(ds.taxonomy.unknown_index(), 2);
        assert_eq!(ds.taxonomy.name(2), "unknown");
    }

    #[test]
    fn bad_group_names_row() {
        let err = Dataset::from_rows([("a.png", "oak", "crop"), ("b.png", "pine", "tree")]).unwrap_err();
        assert!(matches!(err, Error::Manifest { row: 2, .. }), "{err:?}");
    }

    #[test]
    fn inconsistent_group() {
        let err = Dataset::from_rows([("a.png", "x", "crop"), ("b.png", "x", "weed")]).unwrap_err();
        assert!(matches!(err, Error::Manifest { row: 2, .. }));
    }

    #[test]
    fn rates_two_weeds() {
        let ds = synthetic(&[("p", "crop", 10), ("a", "weed", 600), ("b", "weed", 400)]);
        let plan = compute_sample_rates(&ds, 0.7, 0.3).unwrap();
        assert!((plan.rate(1).unwrap() - 0.57).abs() < 1e-12);
        assert!((plan.rate(2).unwrap() - 0.43).abs() < 1e-12);
    }

    #[test]
    fn rates_single_and_uniform() {
        let ds = synthetic(&[("p", "crop", 10), ("a", "weed", 70)]);
        let plan = compute_sample_rates(&ds, 0.7, 0.3).unwrap();
        assert!((plan.rate(1).unwrap() - 1.0).abs() < 1e-12);
        let ds = synthetic(&[("p", "crop", 10), ("a", "weed", 500), ("b", "weed", 500)]);
        let plan = compute_sample_rates(&ds, 0.7, 0.3).unwrap();
        assert!((plan.rate(1).unwrap() - 0.5).abs() < 1e-12);
        assert!((plan.rate(2).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rates_clamped() {
        let ds = synthetic(&[("p", "crop", 1), ("a", "weed", 100)]);
        let plan = compute_sample_rates(&ds, 0.9, 0.9).unwrap();
        assert_eq!(plan.rate(1), Some(1.0));
    }

    #[test]
    fn no_weeds() {
        let ds = synthetic(&[("p", "crop", 3)]);
        assert_eq!(compute_sample_rates(&ds, 0.7, 0.3), Err(Error::NoWeeds));
    }

    #[test]
    fn sampled_two_to_one_becomes_one_to_one() {
        let ds = synthetic(&[("a", "weed", 600), ("b", "weed", 600), ("p", "crop", 600)]);
        let plan = compute_sample_rates(&ds, DEFAULT_ALPHA, DEFAULT_BETA).unwrap();
        let sd = build_sampled_dataset(&ds, &plan, 7).unwrap();
        let stats = class_stats(&sd);
        assert_eq!(stats.counts[0].count, 300);
        assert_eq!(stats.counts[1].count, 300);
        assert_eq!(stats.crops, 600);
        assert_eq!(stats.weed_crop_ratio, 1.0);
        assert_eq!(sd.kind, DatasetKind::Sampled);
        assert_eq!(sd, build_sampled_dataset(&ds, &plan, 7).unwrap());
        assert_ne!(sd, build_sampled_dataset(&ds, &plan, 8).unwrap());
    }

    #[test]
    fn sampled_balanced_single_weed_is_identity() {
        let ds = synthetic(&[("p", "crop", 40), ("a", "weed", 40)]);
        let plan = compute_sample_rates(&ds, 0.7, 0.3).unwrap();
        let sd = build_sampled_dataset(&ds, &plan, 1).unwrap();
        assert_eq!(sd.samples, ds.samples);
        assert!(build_sampled_dataset(&sd, &plan, 1).is_err());
    }

    #[test]
    fn split_exact() {
        let ds = synthetic(&[("p", "crop", 100), ("a", "weed", 100)]);
        let s = split(&ds, DEFAULT_SPLIT, 3).unwrap();
        for part in [&s.train, &s.val, &s.test] {
            let st = class_stats(part);
            let expected = if core::ptr::eq(part, &s.train) { 80 } else { 10 };
            assert!(st.counts.iter().all(|c| c.count == expected));
        }
        assert_eq!(s, split(&ds, DEFAULT_SPLIT, 3).unwrap());
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn split_tiny_category_goes_to_train() {
        let ds = synthetic(&[("p", "crop", 2), ("a", "weed", 30)]);
        let s = split(&ds, DEFAULT_SPLIT, 0).unwrap();
        assert_eq!(s.warnings.len(), 1);
        assert_eq!(class_stats(&s.train).counts[0].count, 2);
        assert_eq!(class_stats(&s.val).counts[0].count, 0);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let ds = synthetic(&[("p", "crop", 2)]);
        assert!(split(&ds, (0.5, 0.5, 0.5), 0).is_err());
        assert!(split(&ds, (1.2, -0.1, -0.1), 0).is_err());
    }

    #[test]
    fn stats_examples() {
        let ds = synthetic(&[("w", "weed", 1380), ("c", "crop", 688)]);
        let st = class_stats(&ds);
        assert!((st.weed_crop_ratio - 1380.0 / 688.0).abs() < 1e-12);
        assert!((st.weed_crop_ratio - 2.006).abs() < 1e-3);

        let empty = Dataset::from_rows(Vec::<(String, &str, &str)>::new()).unwrap();
        let st = class_stats(&empty);
        assert_eq!((st.weeds, st.crops), (0, 0));

        let crops = synthetic(&[("c", "crop", 5)]);
        assert_eq!(class_stats(&crops).weed_crop_ratio, 0.0);

        let weeds = synthetic(&[("w", "weed", 5)]);
        assert!(class_stats(&weeds).weed_crop_ratio.is_infinite());
    }

    #[test]
    fn reindex_by_name() {
        let a = synthetic(&[("w", "weed", 2), ("c", "crop", 1)]);
        let tax = Taxonomy::from_groups(&["c"], &["w"]).unwrap();
        let b = a.reindexed(&tax).unwrap();
        assert_eq!(b.labels(), vec![1, 1, 0]);
        let other = Taxonomy::from_groups(&["z"], &["w"]).unwrap();
        assert!(a.reindexed(&other).is_err());
    }

    proptest! {
        #[test]
        fn split_disjoint_exhaustive_stratified(
            sizes in proptest::collection::vec(0usize..60, 1..5),
            seed in any::<u64>(),
            a in 1u32..8, b in 1u32..8, c in 1u32..8,
        ) {
            let names: Vec<String> = (0..sizes.len()).map(|i| format!("k{i}")).collect();
            let spec: Vec<(&str, &str, usize)> = names
                .iter()
                .zip(&sizes)
                .enumerate()
                .map(|(i, (n, &s))| (n.as_str(), if i % 2 == 0 { "crop" } else { "weed" }, s))
                .collect();
            let ds = synthetic(&spec);
            let total = f64::from(a + b + c);
            let fr = (f64::from(a) / total, f64::from(b) / total, 1.0 - f64::from(a + b) / total);
            let s = split(&ds, fr, seed).unwrap();

            let mut seen: Vec<&str> = Vec::new();
            for part in [&s.train, &s.val, &s.test] {
                seen.extend(part.samples.iter().map(|x| x.image_path.as_str()));
            }
            let mut all: Vec<&str> = ds.samples.iter().map(|x| x.image_path.as_str()).collect();
            seen.sort_unstable();
            all.sort_unstable();
            prop_assert_eq!(seen, all);

            for (i, &n) in sizes.iter().enumerate() {
                if n < 3 { continue; }
                let cat = ds.taxonomy.index_of(&names[i]).unwrap();
                let targets = [fr.0, fr.1, fr.2];
                for (part, t) in [&s.train, &s.val, &s.test].iter().zip(targets) {
                    let got = part.samples.iter().filter(|x| x.category == cat).count() as f64;
                    prop_assert!((got - t * n as f64).abs() <= 1.0);
                }
            }
        }

        #[test]
        fn sampling_counts(wa in 1usize..300, wb in 0usize..300, crops in 0usize..50, seed in any::<u64>()) {
            let ds = synthetic(&[("p", "crop", crops), ("a", "weed", wa), ("b", "weed", wb)]);
            let plan = compute_sample_rates(&ds, DEFAULT_ALPHA, DEFAULT_BETA).unwrap();
            let sd = build_sampled_dataset(&ds, &plan, seed).unwrap();
            let st = class_stats(&sd);
            prop_assert_eq!(st.crops, crops);
            for (name, n) in [("a", wa), ("b", wb)] {
                let Some(cat) = ds.taxonomy.index_of(name) else { continue };
                let expected = libm::round(plan.rate(cat).unwrap() * n as f64) as usize;
                let got = sd.samples.iter().filter(|s| s.category == cat).count();
                prop_assert_eq!(got, expected);
            }
        }
    }
}
