//! Accuracy of the fitted conditional CDF against the closed-form truth of
//! the interaction SCM: `Y | X=x, W=w` is uniform on `+-s/2` around zero
//! with scale `s = 0.5x + 0.1w + 1`, so `P(Y < y | x, w)` is
//! `clamp(0.5 + y/s, 0, 1)`.

use heteffect::bandwidth::{select_bandwidth, DEFAULT_CANDIDATES};
use heteffect::cdf::{fit_cdf, ConditionalCdf, KernelFamily, KernelSpec};
use heteffect::scm::builtin;

fn true_cdf(y: f64, x: f64, w: f64) -> f64 {
    let scale = 0.5 * x + 0.1 * w + 1.0;
    (0.5 + y / scale).clamp(0.0, 1.0)
}

/// Midpoint grids over the variable domains: 10 points per axis.
fn grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..10)
        .map(|i| lo + (i as f64 + 0.5) * (hi - lo) / 10.0)
        .collect()
}

fn max_and_mean_abs_error(n: usize, seed: u64) -> (f64, f64) {
    let scm = builtin("appc_main").unwrap();
    let data = scm.sample_observational(n, seed).unwrap();
    let h = select_bandwidth(&data, KernelFamily::Epanechnikov, &DEFAULT_CANDIDATES, 5, seed)
        .unwrap();
    let model = fit_cdf(&data, KernelSpec::new(KernelFamily::Epanechnikov, h).unwrap()).unwrap();

    let mut max_err: f64 = 0.0;
    let mut sum_err = 0.0;
    let mut count = 0usize;
    for &w in &grid(0.0, 1.0) {
        // The treatment given W=w is supported on [w, w+1]; only there is
        // the conditional CDF estimable rather than an extrapolation.
        for &x in &grid(w, w + 1.0) {
            let curve = model.curve(x, &[w]).unwrap();
            for &y in &grid(-1.05, 1.05) {
                let err = (curve.eval(y) - true_cdf(y, x, w)).abs();
                max_err = max_err.max(err);
                sum_err += err;
                count += 1;
            }
        }
    }
    (max_err, sum_err / count as f64)
}

#[test]
fn grid_error_small_at_large_n() {
    let (max_err, mean_err) = max_and_mean_abs_error(10_000, 424242);
    assert!(
        max_err < 0.05,
        "max |fitted - true| = {max_err:.4} (mean {mean_err:.4})"
    );
}

#[test]
fn mean_error_decreases_with_sample_size() {
    // Averaged over a few draws per size to damp simulation noise; the
    // trend must hold with at most 10% slack between consecutive sizes.
    let mean_at = |n: usize| -> f64 {
        (0..3)
            .map(|r| max_and_mean_abs_error(n, 1000 + r).1)
            .sum::<f64>()
            / 3.0
    };
    let e100 = mean_at(100);
    let e1000 = mean_at(1000);
    let e10000 = mean_at(10_000);
    assert!(
        e1000 < e100 * 1.1 && e10000 < e1000 * 1.1,
        "mean errors did not trend down: {e100:.4} -> {e1000:.4} -> {e10000:.4}"
    );
    assert!(e10000 < e100, "no overall improvement");
}
