//! Monte Carlo point estimators of the heterogeneity measures.
//!
//! With a fitted conditional CDF `alpha(y; x, w)` and outcome bounds
//! `[a, b]`, the atomic-intervention estimators draw `y_1..y_N2` uniformly
//! on `[a, b]` and average
//!
//! - positive part: `(b-a)/N2 * sum_k max{alpha(y_k; x0, w) - alpha(y_k; x1, w), 0}`
//! - negative part: same with the arms swapped
//! - total:         `(b-a)/N2 * sum_k {alpha(y_k; x0, w) - alpha(y_k; x1, w)}`
//!
//! The stochastic-intervention estimators additionally average over `N1`
//! joint policy draws `(x0_j, x1_j)` and normalize by `N1 * N2`.
//!
//! All three parts of a family are computed on shared outcome draws (and
//! shared policy draws), which turns the decomposition
//! `total = positive - negative` into an algebraic identity of every sample
//! instead of a statement about expectations, and removes the coupling
//! variance between the parts.

use crate::cdf::{CdfCurve, ConditionalCdf};
use crate::error::{Error, Result};
use crate::policy::PolicyPair;
use crate::rng::{derive_seed, rng_from_seed, stream};
use rand::Rng;

/// The six reported measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureKind {
    Cace,
    PCace,
    NCace,
    Cpice,
    PCpice,
    NCpice,
}

impl MeasureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasureKind::Cace => "cace",
            MeasureKind::PCace => "p_cace",
            MeasureKind::NCace => "n_cace",
            MeasureKind::Cpice => "cpice",
            MeasureKind::PCpice => "p_cpice",
            MeasureKind::NCpice => "n_cpice",
        }
    }

    pub fn all() -> [MeasureKind; 6] {
        [
            MeasureKind::Cace,
            MeasureKind::PCace,
            MeasureKind::NCace,
            MeasureKind::Cpice,
            MeasureKind::PCpice,
            MeasureKind::NCpice,
        ]
    }
}

impl std::fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cace" => Ok(MeasureKind::Cace),
            "p_cace" => Ok(MeasureKind::PCace),
            "n_cace" => Ok(MeasureKind::NCace),
            "cpice" => Ok(MeasureKind::Cpice),
            "p_cpice" => Ok(MeasureKind::PCpice),
            "n_cpice" => Ok(MeasureKind::NCpice),
            other => Err(Error::Invalid(format!("unknown measure `{other}`"))),
        }
    }
}

/// How the outcome integration points are placed on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum YScheme {
    /// Independent uniform draws.
    #[default]
    Random,
    /// Equally spaced midpoints (a stratified, deterministic grid).
    StratifiedMidpoints,
}

/// Monte Carlo configuration shared by estimators and bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Joint policy draws for the stochastic-intervention family.
    pub n1: usize,
    /// Outcome draws.
    pub n2: usize,
    /// Outcome domain `[a, b]`.
    pub y_bounds: (f64, f64),
    pub seed: u64,
    pub scheme: YScheme,
}

impl McConfig {
    pub fn new(n1: usize, n2: usize, y_bounds: (f64, f64), seed: u64) -> Result<Self> {
        let cfg = McConfig {
            n1,
            n2,
            y_bounds,
            seed,
            scheme: YScheme::Random,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_scheme(mut self, scheme: YScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::Invalid("draw counts must be >= 1".into()));
        }
        let (a, b) = self.y_bounds;
        if a >= b || !a.is_finite() || !b.is_finite() {
            return Err(Error::Invalid(format!(
                "outcome bounds must satisfy a < b, got [{a}, {b}]"
            )));
        }
        Ok(())
    }

    /// The outcome integration points. Identical across the estimators and
    /// bounds that share this configuration.
    pub fn y_draws(&self) -> Vec<f64> {
        let (a, b) = self.y_bounds;
        match self.scheme {
            YScheme::Random => {
                let mut rng = rng_from_seed(derive_seed(self.seed, stream::Y_DRAWS));
                (0..self.n2)
                    .map(|_| a + (b - a) * rng.random::<f64>())
                    .collect()
            }
            YScheme::StratifiedMidpoints => (0..self.n2)
                .map(|k| a + (k as f64 + 0.5) * (b - a) / self.n2 as f64)
                .collect(),
        }
    }

    /// The joint policy draws. Identical across estimators and bounds that
    /// share this configuration.
    pub fn policy_draws(&self, pair: &PolicyPair) -> Vec<(f64, f64)> {
        let mut rng = rng_from_seed(derive_seed(self.seed, stream::POLICY));
        pair.sample_n(self.n1, &mut rng)
    }
}

/// The jointly estimated total / positive / negative values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyEstimate {
    pub total: f64,
    pub positive: f64,
    pub negative: f64,
}

/// Estimates `(CACE, P-CACE, N-CACE)` for the atomic intervention
/// `x0 -> x1` at covariate `w`, on shared outcome draws.
pub fn estimate_cace_family<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    x0: f64,
    x1: f64,
    cfg: &McConfig,
) -> Result<FamilyEstimate> {
    cfg.validate()?;
    let ys = cfg.y_draws();
    let curve0 = model.curve(x0, w)?;
    let curve1 = model.curve(x1, w)?;
    Ok(accumulate(&ys, &[(curve0, curve1)], cfg.y_bounds))
}

/// Estimates `(CPICE, P-CPICE, N-CPICE)` under a policy pair at covariate
/// `w`, on shared outcome and policy draws.
pub fn estimate_cpice_family<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    pair: &PolicyPair,
    cfg: &McConfig,
) -> Result<FamilyEstimate> {
    cfg.validate()?;
    let ys = cfg.y_draws();
    let curves: Vec<(CdfCurve, CdfCurve)> = cfg
        .policy_draws(pair)
        .into_iter()
        .map(|(x0, x1)| Ok((model.curve(x0, w)?, model.curve(x1, w)?)))
        .collect::<Result<_>>()?;
    Ok(accumulate(&ys, &curves, cfg.y_bounds))
}

fn accumulate(ys: &[f64], curves: &[(CdfCurve, CdfCurve)], bounds: (f64, f64)) -> FamilyEstimate {
    let mut pos = 0.0;
    let mut neg = 0.0;
    let mut tot = 0.0;
    for (curve0, curve1) in curves {
        for &y in ys {
            let delta = curve0.eval(y) - curve1.eval(y);
            pos += delta.max(0.0);
            neg += (-delta).max(0.0);
            tot += delta;
        }
    }
    let scale = (bounds.1 - bounds.0) / (curves.len() * ys.len()) as f64;
    FamilyEstimate {
        total: scale * tot,
        positive: scale * pos,
        negative: scale * neg,
    }
}

pub fn estimate_cace<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    x0: f64,
    x1: f64,
    cfg: &McConfig,
) -> Result<f64> {
    Ok(estimate_cace_family(model, w, x0, x1, cfg)?.total)
}

pub fn estimate_p_cace<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    x0: f64,
    x1: f64,
    cfg: &McConfig,
) -> Result<f64> {
    Ok(estimate_cace_family(model, w, x0, x1, cfg)?.positive)
}

pub fn estimate_n_cace<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    x0: f64,
    x1: f64,
    cfg: &McConfig,
) -> Result<f64> {
    Ok(estimate_cace_family(model, w, x0, x1, cfg)?.negative)
}

pub fn estimate_cpice<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    pair: &PolicyPair,
    cfg: &McConfig,
) -> Result<f64> {
    Ok(estimate_cpice_family(model, w, pair, cfg)?.total)
}

pub fn estimate_p_cpice<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    pair: &PolicyPair,
    cfg: &McConfig,
) -> Result<f64> {
    Ok(estimate_cpice_family(model, w, pair, cfg)?.positive)
}

pub fn estimate_n_cpice<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    pair: &PolicyPair,
    cfg: &McConfig,
) -> Result<f64> {
    Ok(estimate_cpice_family(model, w, pair, cfg)?.negative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::FnCdf;
    use crate::policy::Policy;

    /// Arm 0 has CDF y, arm 1 has CDF y^2 on [0, 1]; any other arm shares
    /// the arm-0 curve.
    fn two_arm_stub() -> FnCdf {
        FnCdf::new(|x, _w| {
            if x == 1.0 {
                CdfCurve::from_fn(|y| (y * y).clamp(0.0, 1.0))
            } else {
                CdfCurve::from_fn(|y| y.clamp(0.0, 1.0))
            }
        })
    }

    fn cfg(n2: usize, seed: u64) -> McConfig {
        McConfig::new(10, n2, (0.0, 1.0), seed).unwrap()
    }

    #[test]
    fn closed_form_integral_of_the_positive_part() {
        // int_0^1 max{y - y^2, 0} dy = 1/6; the negative part is zero.
        let model = two_arm_stub();
        let est = estimate_cace_family(&model, &[], 0.0, 1.0, &cfg(40_000, 1)).unwrap();
        assert!((est.positive - 1.0 / 6.0).abs() < 4e-3, "got {}", est.positive);
        assert_eq!(est.negative, 0.0);
        assert_eq!(est.total, est.positive);
    }

    #[test]
    fn identical_arms_give_exact_zero() {
        let model = FnCdf::new(|_x, _w| CdfCurve::from_fn(|y| y.clamp(0.0, 1.0)));
        let est = estimate_cace_family(&model, &[], 0.0, 1.0, &cfg(100, 2)).unwrap();
        assert_eq!(est.positive, 0.0);
        assert_eq!(est.negative, 0.0);
        assert_eq!(est.total, 0.0);
    }

    #[test]
    fn swapping_arms_swaps_positive_and_negative() {
        let model = two_arm_stub();
        let c = cfg(300, 3);
        let fwd = estimate_cace_family(&model, &[], 0.0, 1.0, &c).unwrap();
        let rev = estimate_cace_family(&model, &[], 1.0, 0.0, &c).unwrap();
        assert_eq!(fwd.positive, rev.negative);
        assert_eq!(fwd.negative, rev.positive);
        assert_eq!(fwd.total, -rev.total);
    }

    #[test]
    fn decomposition_is_an_identity() {
        let model = two_arm_stub();
        let est = estimate_cace_family(&model, &[], 0.0, 1.0, &cfg(5000, 4)).unwrap();
        assert!((est.positive - est.negative - est.total).abs() < 1e-12);
    }

    #[test]
    fn dirac_policies_reduce_to_the_atomic_family() {
        let model = two_arm_stub();
        let c = cfg(500, 5);
        let atomic = estimate_cace_family(&model, &[], 0.0, 1.0, &c).unwrap();
        let pair = PolicyPair::dirac(0.0, 1.0);
        let stochastic = estimate_cpice_family(&model, &[], &pair, &c).unwrap();
        assert!((atomic.positive - stochastic.positive).abs() < 1e-12);
        assert!((atomic.negative - stochastic.negative).abs() < 1e-12);
        assert!((atomic.total - stochastic.total).abs() < 1e-12);
    }

    #[test]
    fn coupled_identical_policies_are_exactly_zero() {
        let model = two_arm_stub();
        let pair = PolicyPair::SingleShift {
            base: Policy::Uniform { lo: 0.0, hi: 1.0 },
            shift: 0.0,
        };
        let est = estimate_cpice_family(&model, &[], &pair, &cfg(200, 6)).unwrap();
        assert_eq!(est.positive, 0.0);
        assert_eq!(est.negative, 0.0);
        assert_eq!(est.total, 0.0);
    }

    #[test]
    fn stratified_scheme_is_deterministic_quadrature() {
        let model = two_arm_stub();
        let c = cfg(2000, 7).with_scheme(YScheme::StratifiedMidpoints);
        let est = estimate_cace_family(&model, &[], 0.0, 1.0, &c).unwrap();
        // Midpoint quadrature of a smooth integrand: much tighter than MC.
        assert!((est.positive - 1.0 / 6.0).abs() < 1e-6, "got {}", est.positive);
    }

    #[test]
    fn same_seed_reproduces_bit_for_bit() {
        let model = two_arm_stub();
        let a = estimate_cace_family(&model, &[], 0.0, 1.0, &cfg(777, 8)).unwrap();
        let b = estimate_cace_family(&model, &[], 0.0, 1.0, &cfg(777, 8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mc_variance_shrinks_at_the_parametric_rate() {
        // Variance across seeds of the positive-part estimate should scale
        // like 1/N2: the log-log slope over three decades sits near -1.
        let model = two_arm_stub();
        let mut log_var = Vec::new();
        for &n2 in &[100usize, 1000, 10_000] {
            let vals: Vec<f64> = (0..60)
                .map(|s| {
                    estimate_p_cace(&model, &[], 0.0, 1.0, &cfg(n2, 1000 + s)).unwrap()
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (vals.len() - 1) as f64;
            log_var.push(((n2 as f64).ln(), var.ln()));
        }
        // Least-squares slope through the three points.
        let n = log_var.len() as f64;
        let sx: f64 = log_var.iter().map(|p| p.0).sum();
        let sy: f64 = log_var.iter().map(|p| p.1).sum();
        let sxx: f64 = log_var.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = log_var.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(
            (slope + 1.0).abs() < 0.3,
            "log-log variance slope {slope} is not within 0.3 of -1"
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(McConfig::new(0, 10, (0.0, 1.0), 1).is_err());
        assert!(McConfig::new(10, 0, (0.0, 1.0), 1).is_err());
        assert!(McConfig::new(10, 10, (1.0, 0.0), 1).is_err());
        assert!(McConfig::new(10, 10, (f64::NAN, 1.0), 1).is_err());
    }
}
