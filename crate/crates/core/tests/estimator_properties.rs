//! Property tests for the estimation pipeline.

use proptest::prelude::*;

use heteffect::cdf::{fit_cdf, KernelFamily, KernelSpec};
use heteffect::dataset::Dataset;
use heteffect::measures::{estimate_cace_family, McConfig};
use heteffect::rng::rng_from_seed;
use rand::Rng;

fn small_dataset(seed: u64, n: usize) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x
        .iter()
        .zip(&w)
        .map(|(&x, &w)| x * 0.5 + w * 0.2 + rng.random::<f64>())
        .collect();
    Dataset::from_columns(x, y, w, 1, "x", "y", vec!["w1".into()], false).unwrap()
}

fn affine_outcome(data: &Dataset, alpha: f64, beta: f64) -> Dataset {
    Dataset::from_columns(
        data.x().to_vec(),
        data.y().iter().map(|&y| alpha * y + beta).collect(),
        data.w_flat().to_vec(),
        data.dim(),
        data.treatment_name(),
        data.outcome_name(),
        data.covariate_names().to_vec(),
        data.binary_treatment(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Positive affine maps of the outcome scale every measure by the slope:
    /// the kernel ignores y, the indicators are order statistics, and the
    /// integration box transforms along.
    #[test]
    fn outcome_scale_equivariance(
        seed in 0u64..1000,
        alpha in 0.1f64..8.0,
        beta in -5.0f64..5.0,
        mc_seed in 0u64..1000,
    ) {
        let data = small_dataset(seed, 40);
        let mapped = affine_outcome(&data, alpha, beta);
        let kernel = KernelSpec::new(KernelFamily::Epanechnikov, 0.8).unwrap();

        let model = fit_cdf(&data, kernel).unwrap();
        let model_mapped = fit_cdf(&mapped, kernel).unwrap();

        let (a, b) = data.infer_y_bounds(0.0).unwrap();
        let cfg = McConfig::new(4, 64, (a, b), mc_seed).unwrap();
        let cfg_mapped =
            McConfig::new(4, 64, (alpha * a + beta, alpha * b + beta), mc_seed).unwrap();

        let base = estimate_cace_family(&model, &[0.5], 0.5, 1.5, &cfg).unwrap();
        let scaled = estimate_cace_family(&model_mapped, &[0.5], 0.5, 1.5, &cfg_mapped).unwrap();

        let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
        prop_assert!(rel(scaled.positive, alpha * base.positive) < 1e-9);
        prop_assert!(rel(scaled.negative, alpha * base.negative) < 1e-9);
        prop_assert!(rel(scaled.total, alpha * base.total) < 1e-9);
    }

    /// The decomposition identity holds for arbitrary data, arms, and seeds.
    #[test]
    fn decomposition_identity_everywhere(
        seed in 0u64..1000,
        x0 in 0.2f64..1.0,
        shift in 0.1f64..1.0,
        mc_seed in 0u64..1000,
    ) {
        let data = small_dataset(seed, 35);
        let kernel = KernelSpec::new(KernelFamily::Epanechnikov, 0.9).unwrap();
        let model = fit_cdf(&data, kernel).unwrap();
        let (a, b) = data.infer_y_bounds(0.0).unwrap();
        let cfg = McConfig::new(4, 50, (a, b), mc_seed).unwrap();
        if let Ok(fam) = estimate_cace_family(&model, &[0.5], x0, x0 + shift, &cfg) {
            prop_assert!(fam.positive >= 0.0);
            prop_assert!(fam.negative >= 0.0);
            prop_assert!((fam.positive - fam.negative - fam.total).abs() <= 1e-12);
        }
    }
}
