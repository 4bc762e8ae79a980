use super::{Gradients, TrainedModel};
use crate::dataset::Taxonomy;
use crate::objectives::Surrogate;
use crate::Result;

const STEP: f64 = 1e-5;

/// Compares analytic gradients against central finite differences on every
/// parameter. Returns the largest `|g_a - g_n| / max(1e-8, |g_a| + |g_n|)`.
pub fn gradient_check(
    model: &TrainedModel,
    x: &[f64],
    truth: usize,
    surrogate: Surrogate,
    tax: &Taxonomy,
) -> Result<f64> {
    let mut analytic = Gradients::zeros_like(model);
    model.loss_and_grad(x, truth, surrogate, tax, &mut analytic)?;

    let mut probe = model.clone();
    let mut scratch = Gradients::zeros_like(model);
    let mut worst: f64 = 0.0;
    for layer in 0..model.weights.len() {
        for bias in [false, true] {
            let len = if bias { model.biases[layer].len() } else { model.weights[layer].len() };
            for j in 0..len {
                let mut eval = |delta: f64| -> Result<f64> {
                    let p = if bias { &mut probe.biases[layer][j] } else { &mut probe.weights[layer][j] };
                    let orig = *p;
                    *p = orig + delta;
                    scratch.clear();
                    let loss = probe.loss_and_grad(x, truth, surrogate, tax, &mut scratch);
                    let p = if bias { &mut probe.biases[layer][j] } else { &mut probe.weights[layer][j] };
                    *p = orig;
                    loss
                };
                let numeric = (eval(STEP)? - eval(-STEP)?) / (2.0 * STEP);
                let a = if bias { analytic.biases[layer][j] } else { analytic.weights[layer][j] };
                let rel = libm::fabs(a - numeric) / (libm::fabs(a) + libm::fabs(numeric)).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{realize, Genotype};
    use crate::objectives::NmwStrictness;
    use crate::util::mix_seed;
    use alloc::vec::Vec;

    fn input(side: usize, seed: u64) -> Vec<f64> {
        (0..side * side * 3)
            .map(|i| (mix_seed(seed, i as u64) % 1000) as f64 / 1000.0)
            .collect()
    }

    fn tax() -> Taxonomy {
        Taxonomy::from_groups(&["maize", "beet"], &["thistle"]).unwrap()
    }

    fn check(key: &str, head: usize, side: usize, truth: usize, s: Surrogate) {
        let g: Genotype = key.parse().unwrap();
        let m = realize(&g, head, side, 11).unwrap();
        let err = gradient_check(&m, &input(side, 3), truth, s, &tax()).unwrap();
        assert!(err < 1e-4, "{key}: {err}");
    }

    #[test]
    fn dense_family() {
        check("vanilla:k3c8/h32", 3, 6, 1, Surrogate::Cce);
    }

    #[test]
    fn conv_and_pool() {
        check("conv:8-8", 3, 8, 2, Surrogate::Cce);
    }

    #[test]
    fn dilated() {
        check("dilated:8d2", 3, 8, 0, Surrogate::Cce);
    }

    #[test]
    fn nmw_crop_sample() {
        check("conv:8", 4, 6, 0, Surrogate::Nmw(NmwStrictness::TextIff));
        check("vanilla:k3c8/h32", 4, 6, 2, Surrogate::Nmw(NmwStrictness::Symmetric));
    }
}
