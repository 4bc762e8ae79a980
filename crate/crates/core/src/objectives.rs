//! Hard indicator objectives, evaluation metrics, their differentiable
//! training surrogates, and the four-way error taxonomy.
//!
//! Labels are category indices into a [`Taxonomy`]; index `tax.len()` is the
//! synthetic unknown class, valid only on the prediction side.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{Group, Taxonomy};
use crate::{Error, Result};

/// Which reading of the no-miss-weed indicator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmwStrictness {
    /// 0 exactly when a crop is predicted as a weed.
    #[default]
    TextIff,
    /// 1 on exact match, same-group confusion, or an unknown prediction.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Cce,
    Nmw(NmwStrictness),
    /// The pair `[accuracy, NMW]`, stepped alternately.
    Dm,
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Cce => "cce",
            ObjectiveKind::Nmw(_) => "nmw",
            ObjectiveKind::Dm => "dm",
        }
    }

    /// NMW and DM models carry an extra output for the unknown class.
    pub fn head_classes(&self, tax: &Taxonomy) -> usize {
        match self {
            ObjectiveKind::Cce => tax.len(),
            _ => tax.len() + 1,
        }
    }
}

impl core::str::FromStr for ObjectiveKind {
    type Err = Error;

    /// Accepts `cce`, `nmw`, `nmw-symmetric` and `dm`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cce" => Ok(ObjectiveKind::Cce),
            "nmw" => Ok(ObjectiveKind::Nmw(NmwStrictness::TextIff)),
            "nmw-symmetric" => Ok(ObjectiveKind::Nmw(NmwStrictness::Symmetric)),
            "dm" => Ok(ObjectiveKind::Dm),
            other => Err(Error::InvalidParam(alloc::format!(
                "unknown objective `{other}` (expected cce, nmw, nmw-symmetric or dm)"
            ))),
        }
    }
}

impl core::fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ObjectiveKind::Nmw(NmwStrictness::Symmetric) => f.write_str("nmw-symmetric"),
            other => f.write_str(other.name()),
        }
    }
}

/// A single differentiable loss used for one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surrogate {
    Cce,
    Nmw(NmwStrictness),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Correct,
    /// Predicted unknown.
    Moderate,
    /// Wrong category inside the right group.
    Minor,
    /// Weed predicted as crop.
    Considerable,
    /// Crop predicted as weed.
    Dangerous,
}

fn check_lengths(y: &[usize], yhat: &[usize]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: yhat.len(),
        });
    }
    Ok(())
}

fn check_labels(y: &[usize], yhat: &[usize], tax: &Taxonomy) -> Result<()> {
    check_lengths(y, yhat)?;
    if let Some(&bad) = y.iter().find(|&&t| t >= tax.len()) {
        return Err(Error::CategoryIndex(bad));
    }
    if let Some(&bad) = yhat.iter().find(|&&p| p > tax.unknown_index()) {
        return Err(Error::CategoryIndex(bad));
    }
    Ok(())
}

pub fn equal_indicator(y: &[usize], yhat: &[usize]) -> Result<Vec<bool>> {
    check_lengths(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| a == b).collect())
}

/// Bit `i` is set iff `target[i]` appears in `template`.
pub fn contain(template: &[usize], target: &[usize]) -> Vec<bool> {
    target.iter().map(|t| template.contains(t)).collect()
}

pub fn nmw_indicator(
    y: &[usize],
    yhat: &[usize],
    tax: &Taxonomy,
    strictness: NmwStrictness,
) -> Result<Vec<bool>> {
    check_labels(y, yhat, tax)?;
    let unknown = tax.unknown_index();
    Ok(y.iter()
        .zip(yhat)
        .map(|(&t, &p)| match strictness {
            NmwStrictness::TextIff => !(tax.is_crop(t) && tax.is_weed(p)),
            NmwStrictness::Symmetric => t == p || p == unknown || tax.group(t) == tax.group(p),
        })
        .collect())
}

pub fn accuracy(y: &[usize], yhat: &[usize]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Empty("label vector"));
    }
    let eq = equal_indicator(y, yhat)?;
    Ok(eq.iter().filter(|&&b| b).count() as f64 / y.len() as f64)
}

/// Crop killing rate: crops predicted as some weed, over all crops.
pub fn ckr(y: &[usize], yhat: &[usize], tax: &Taxonomy) -> Result<f64> {
    check_labels(y, yhat, tax)?;
    let crops = y.iter().filter(|&&t| tax.is_crop(t)).count();
    if crops == 0 {
        return Err(Error::NoCrops);
    }
    let killed = y
        .iter()
        .zip(yhat)
        .filter(|&(&t, &p)| tax.is_crop(t) && tax.is_weed(p))
        .count();
    Ok(killed as f64 / crops as f64)
}

pub fn recall_crop(y: &[usize], yhat: &[usize], tax: &Taxonomy) -> Result<f64> {
    Ok(1.0 - ckr(y, yhat, tax)?)
}

pub fn classify_error(truth: usize, pred: usize, tax: &Taxonomy) -> ErrorClass {
    if truth == pred {
        return ErrorClass::Correct;
    }
    match (tax.group(truth), tax.group(pred)) {
        (_, None) => ErrorClass::Moderate,
        (Some(a), Some(b)) if a == b => ErrorClass::Minor,
        (Some(Group::Weed), Some(Group::Crop)) => ErrorClass::Considerable,
        _ => ErrorClass::Dangerous,
    }
}

/// Numerical floor inside every logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Loss of one sample and its gradient with respect to the probabilities.
///
/// * CCE: `-ln p[y]`
/// * NMW (text iff): `-ln Σ_{j not a weed} p_j` for crops, 0 for weeds
/// * NMW (symmetric): `-ln Σ_{j in group(y) ∪ {unknown}} p_j`
pub fn surrogate_loss(
    kind: Surrogate,
    probs: &[f64],
    truth: usize,
    tax: &Taxonomy,
) -> Result<(f64, Vec<f64>)> {
    if truth >= tax.len() {
        return Err(Error::CategoryIndex(truth));
    }
    let mut grad = vec![0.0; probs.len()];
    let accept: Vec<usize> = match kind {
        Surrogate::Cce => {
            if truth >= probs.len() {
                return Err(Error::CategoryIndex(truth));
            }
            vec![truth]
        }
        Surrogate::Nmw(strictness) => {
            if probs.len() != tax.len() + 1 {
                return Err(Error::HeadMismatch {
                    objective: "nmw",
                    expected: tax.len() + 1,
                    got: probs.len(),
                });
            }
            let unknown = tax.unknown_index();
            match strictness {
                NmwStrictness::TextIff => {
                    if tax.is_weed(truth) {
                        return Ok((0.0, grad));
                    }
                    (0..probs.len()).filter(|&j| !tax.is_weed(j)).collect()
                }
                NmwStrictness::Symmetric => (0..probs.len())
                    .filter(|&j| j == unknown || tax.group(j) == tax.group(truth))
                    .collect(),
            }
        }
    };
    let mass: f64 = accept.iter().map(|&j| probs[j]).sum::<f64>() + PROB_FLOOR;
    for &j in &accept {
        grad[j] = -1.0 / mass;
    }
    Ok((-libm::log(mass), grad))
}

/// Chains a gradient with respect to softmax probabilities back to the logits.
pub fn softmax_backward(probs: &[f64], grad_probs: &[f64]) -> Vec<f64> {
    let dot: f64 = probs.iter().zip(grad_probs).map(|(p, g)| p * g).sum();
    probs
        .iter()
        .zip(grad_probs)
        .map(|(p, g)| p * (g - dot))
        .collect()
}

/// The dual-metric objective alternates surrogates per batch: even batches
/// step CCE, odd batches step NMW.
pub fn dm_schedule(batch_index: u64) -> Surrogate {
    if batch_index % 2 == 0 {
        Surrogate::Cce
    } else {
        Surrogate::Nmw(NmwStrictness::TextIff)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub moderate: usize,
    pub minor: usize,
    pub considerable: usize,
    pub dangerous: usize,
}

impl ErrorCounts {
    pub fn total(&self) -> usize {
        self.moderate + self.minor + self.considerable + self.dangerous
    }

    pub fn get(&self, class: ErrorClass) -> usize {
        match class {
            ErrorClass::Correct => 0,
            ErrorClass::Moderate => self.moderate,
            ErrorClass::Minor => self.minor,
            ErrorClass::Considerable => self.considerable,
            ErrorClass::Dangerous => self.dangerous,
        }
    }
}

/// Error counts as fractions of the evaluated samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub moderate: f64,
    pub minor: f64,
    pub considerable: f64,
    pub dangerous: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// `None` when the truth contains no crops.
    pub ckr: Option<f64>,
    pub recall_crop: Option<f64>,
    pub error_counts: ErrorCounts,
    /// `confusion[truth][prediction]`; the last column is the unknown class.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    pub fn error_rates(&self) -> ErrorRates {
        let n = self.samples.max(1) as f64;
        let c = &self.error_counts;
        ErrorRates {
            moderate: c.moderate as f64 / n,
            minor: c.minor as f64 / n,
            considerable: c.considerable as f64 / n,
            dangerous: c.dangerous as f64 / n,
        }
    }
}

pub fn evaluate(y: &[usize], yhat: &[usize], tax: &Taxonomy) -> Result<EvalReport> {
    if y.is_empty() {
        return Err(Error::Empty("label vector"));
    }
    check_labels(y, yhat, tax)?;
    let mut confusion = vec![vec![0usize; tax.len() + 1]; tax.len()];
    let mut counts = ErrorCounts::default();
    let mut correct = 0;
    let (mut crops, mut killed) = (0usize, 0usize);
    for (&t, &p) in y.iter().zip(yhat) {
        confusion[t][p] += 1;
        match classify_error(t, p, tax) {
            ErrorClass::Correct => correct += 1,
            ErrorClass::Moderate => counts.moderate += 1,
            ErrorClass::Minor => counts.minor += 1,
            ErrorClass::Considerable => counts.considerable += 1,
            ErrorClass::Dangerous => counts.dangerous += 1,
        }
        if tax.is_crop(t) {
            crops += 1;
            if tax.is_weed(p) {
                killed += 1;
            }
        }
    }
    let ckr = (crops > 0).then(|| killed as f64 / crops as f64);
    Ok(EvalReport {
        samples: y.len(),
        correct,
        accuracy: correct as f64 / y.len() as f64,
        ckr,
        recall_crop: ckr.map(|k| 1.0 - k),
        error_counts: counts,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    #[test]
    fn objective_names_round_trip() {
        for k in [
            ObjectiveKind::Cce,
            ObjectiveKind::Nmw(NmwStrictness::TextIff),
            ObjectiveKind::Nmw(NmwStrictness::Symmetric),
            ObjectiveKind::Dm,
        ] {
            assert_eq!(k.to_string().parse::<ObjectiveKind>().unwrap(), k);
        }
        assert!("mse".parse::<ObjectiveKind>().is_err());
    }

    use super::*;
    use proptest::prelude::*;

    // crops 0,1; weeds 2,3; unknown 4
    fn tax() -> Taxonomy {
        Taxonomy::from_groups(&["c1", "c2"], &["w1", "w2"]).unwrap()
    }

    #[test]
    fn equal_examples() {
        assert_eq!(equal_indicator(&[1, 0, 2], &[1, 0, 2]).unwrap(), [true; 3]);
        assert_eq!(equal_indicator(&[1, 0], &[0, 1]).unwrap(), [false; 2]);
        assert!(equal_indicator(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn contain_examples() {
        assert_eq!(contain(&[0, 2], &[1, 0, 2, 1]), [false, true, true, false]);
        assert_eq!(contain(&[], &[1, 0, 2, 1]), [false; 4]);
        assert_eq!(contain(&[0, 1, 2, 3, 4], &[1, 0, 2, 4]), [true; 4]);
    }

    #[test]
    fn nmw_examples() {
        let t = tax();
        for s in [NmwStrictness::TextIff, NmwStrictness::Symmetric] {
            assert_eq!(nmw_indicator(&[0], &[2], &t, s).unwrap(), [false]);
            assert_eq!(nmw_indicator(&[0], &[4], &t, s).unwrap(), [true]);
            assert_eq!(nmw_indicator(&[2], &[3], &t, s).unwrap(), [true]);
        }
        assert_eq!(nmw_indicator(&[2], &[0], &t, NmwStrictness::TextIff).unwrap(), [true]);
        assert_eq!(nmw_indicator(&[2], &[0], &t, NmwStrictness::Symmetric).unwrap(), [false]);
    }

    #[test]
    fn accuracy_examples() {
        let y = [0, 0, 0, 1, 1, 1, 1, 1, 1, 1];
        let mut p = y;
        p[0] = 1;
        p[3] = 0;
        assert_eq!(accuracy(&y, &p).unwrap(), 0.8);
        assert_eq!(accuracy(&y, &y).unwrap(), 1.0);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn ckr_examples() {
        let t = tax();
        let y = [0, 1, 0, 2];
        assert!((ckr(&y, &[0, 1, 3, 2], &t).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ckr(&y, &y, &t).unwrap(), 0.0);
        assert_eq!(recall_crop(&y, &y, &t).unwrap(), 1.0);
        // crop to crop is not a kill; unknown is not a kill
        assert_eq!(ckr(&y, &[1, 0, 4, 2], &t).unwrap(), 0.0);
        assert_eq!(ckr(&[2, 3], &[2, 3], &t), Err(Error::NoCrops));
    }

    #[test]
    fn two_class_worked_example() {
        // 7 weeds and 3 crops; one crop killed, one weed kept as crop
        let t = Taxonomy::from_groups(&["CROP"], &["WEED"]).unwrap();
        let y = [0, 0, 0, 1, 1, 1, 1, 1, 1, 1];
        let p = [1, 0, 0, 0, 1, 1, 1, 1, 1, 1];
        let r = evaluate(&y, &p, &t).unwrap();
        assert_eq!(r.accuracy, 0.8);
        assert!((r.recall_crop.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.ckr.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.error_counts.dangerous, 1);
        assert_eq!(r.error_counts.considerable, 1);
        assert_eq!(r.error_counts.total() + r.correct, 10);
    }

    #[test]
    fn error_classes() {
        let t = tax();
        assert_eq!(classify_error(3, 2, &t), ErrorClass::Minor);
        assert_eq!(classify_error(0, 2, &t), ErrorClass::Dangerous);
        assert_eq!(classify_error(0, 4, &t), ErrorClass::Moderate);
        assert_eq!(classify_error(2, 1, &t), ErrorClass::Considerable);
        assert_eq!(classify_error(1, 1, &t), ErrorClass::Correct);
    }

    #[test]
    fn nmw_text_iff_is_not_dangerous_exhaustive() {
        let t = tax();
        for truth in 0..t.len() {
            for pred in 0..=t.unknown_index() {
                let nmw = nmw_indicator(&[truth], &[pred], &t, NmwStrictness::TextIff).unwrap()[0];
                assert_eq!(nmw, classify_error(truth, pred, &t) != ErrorClass::Dangerous);
            }
        }
    }

    #[test]
    fn cce_perfect_confidence() {
        let t = tax();
        let (loss, _) = surrogate_loss(Surrogate::Cce, &[0.0, 1.0, 0.0, 0.0], 1, &t).unwrap();
        assert!(loss.abs() < 1e-11);
    }

    #[test]
    fn nmw_surrogate_limits() {
        let t = tax();
        let all_weed = [0.0, 0.0, 0.5, 0.5, 0.0];
        let (loss, _) = surrogate_loss(Surrogate::Nmw(NmwStrictness::TextIff), &all_weed, 0, &t).unwrap();
        assert!((loss + libm::log(PROB_FLOOR)).abs() < 1e-9);
        let (loss, grad) =
            surrogate_loss(Surrogate::Nmw(NmwStrictness::TextIff), &[0.2; 5], 2, &t).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
        assert!(surrogate_loss(Surrogate::Nmw(NmwStrictness::TextIff), &[0.25; 4], 0, &t).is_err());
    }

    #[test]
    fn dm_alternates() {
        assert_eq!(dm_schedule(0), Surrogate::Cce);
        assert_eq!(dm_schedule(1), Surrogate::Nmw(NmwStrictness::TextIff));
        let n = 50u64;
        let cce = (0..2 * n).filter(|&b| dm_schedule(b) == Surrogate::Cce).count();
        assert_eq!(cce as u64, n);
    }

    #[test]
    fn evaluate_all_correct() {
        let t = tax();
        let y = [0, 1, 2, 3];
        let r = evaluate(&y, &y, &t).unwrap();
        assert_eq!(r.error_counts, ErrorCounts::default());
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn evaluate_without_crops() {
        let t = tax();
        let r = evaluate(&[2, 3], &[2, 0], &t).unwrap();
        assert_eq!(r.ckr, None);
        assert_eq!(r.recall_crop, None);
    }

    fn softmax(z: &[f64]) -> Vec<f64> {
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| libm::exp(v - m)).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }

    proptest! {
        #[test]
        fn nmw_dominates_equal(pairs in proptest::collection::vec((0usize..4, 0usize..5), 1..40)) {
            let t = tax();
            let (y, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let eq = equal_indicator(&y, &p).unwrap();
            for s in [NmwStrictness::TextIff, NmwStrictness::Symmetric] {
                let nmw = nmw_indicator(&y, &p, &t, s).unwrap();
                prop_assert!(eq.iter().zip(&nmw).all(|(&e, &n)| !e || n));
            }
        }

        #[test]
        fn surrogate_gradient_matches_finite_differences(
            z in proptest::collection::vec(-3.0f64..3.0, 5),
            truth in 0usize..4,
            which in 0usize..3,
        ) {
            let t = tax();
            let kind = [Surrogate::Cce, Surrogate::Nmw(NmwStrictness::TextIff), Surrogate::Nmw(NmwStrictness::Symmetric)][which];
            let loss_at = |z: &[f64]| surrogate_loss(kind, &softmax(z), truth, &t).unwrap().0;
            let p = softmax(&z);
            let (_, gp) = surrogate_loss(kind, &p, truth, &t).unwrap();
            let gz = softmax_backward(&p, &gp);
            let h = 1e-6;
            for j in 0..z.len() {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[j] += h;
                zm[j] -= h;
                let num = (loss_at(&zp) - loss_at(&zm)) / (2.0 * h);
                let rel = (gz[j] - num).abs() / (gz[j].abs() + num.abs()).max(1e-8);
                prop_assert!(rel < 1e-6 || (gz[j] - num).abs() < 1e-9, "j={} analytic={} numeric={}", j, gz[j], num);
            }
        }
    }
}
