//! Partial-identification bounds for the heterogeneity measures.
//!
//! When monotonicity of the potential outcomes in the noise is implausible,
//! the measures are only set-identified. Three bound families are provided:
//!
//! - CDF-only: from the two conditional CDFs alone. The lower bound integrand is
//!   the point-estimator integrand `max{F0 - F1, 0}`; the upper bound
//!   combines the envelope terms `1 - F1` and `F0`.
//! - CDF-with-propensity: binary treatment only; additionally uses the
//!   joint `P(Y < y, X = x | W = w)`, factorized here as
//!   `alpha(y; x, w) * P(X = x | W = w)`, and is never wider than the
//!   CDF-only interval.
//! - Policy-CDF: the policy-pair analogue of the CDF-only family,
//!   integrating the same envelope over joint policy draws.
//!
//! Every bound shares its outcome draws (and policy draws) with the point
//! estimators built from the same [`McConfig`], so the lower bound equals
//! the point estimate bit for bit and `lower <= upper` holds pointwise
//! rather than only stochastically.

use crate::cdf::{ConditionalCdf, TreatedProbability};
use crate::error::{Error, Result};
use crate::measures::{estimate_cace_family, estimate_cpice_family, McConfig};
use crate::policy::PolicyPair;

/// Which information set produced a bound pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundFamily {
    /// The two arm-conditional CDFs alone.
    CdfOnly,
    /// Arm-conditional CDFs plus the treated-arm probability (binary
    /// treatment), which always tightens the interval.
    CdfWithPropensity,
    /// The CDF-only envelope integrated over joint policy draws.
    PolicyCdf,
}

/// A lower/upper interval for one nonnegative measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
    pub family: BoundFamily,
}

/// How the two-term upper-bound integrand is combined.
///
/// `Sharp` takes the pointwise minimum of the envelope terms, the tightest
/// bound the conditional CDFs support. `Conservative` takes their maximum,
/// a wider envelope that never understates the upper bound (the bundled
/// violated-monotonicity study uses it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpperBoundStyle {
    #[default]
    Sharp,
    Conservative,
}

impl UpperBoundStyle {
    #[inline]
    fn combine(self, term_a: f64, term_b: f64) -> f64 {
        match self {
            UpperBoundStyle::Sharp => term_a.min(term_b),
            UpperBoundStyle::Conservative => term_a.max(term_b),
        }
    }
}

impl std::str::FromStr for UpperBoundStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(UpperBoundStyle::Sharp),
            "conservative" => Ok(UpperBoundStyle::Conservative),
            other => Err(Error::Invalid(format!("unknown upper-bound style `{other}`"))),
        }
    }
}

/// Bounds for `(P-CACE, N-CACE)` from the conditional CDFs alone, for the
/// atomic intervention `x0 -> x1`.
pub fn bound_cace<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    x0: f64,
    x1: f64,
    cfg: &McConfig,
    style: UpperBoundStyle,
) -> Result<(BoundPair, BoundPair)> {
    // Lower bounds are the point estimators on the same draws.
    let family = estimate_cace_family(model, w, x0, x1, cfg)?;

    let ys = cfg.y_draws();
    let curve0 = model.curve(x0, w)?;
    let curve1 = model.curve(x1, w)?;
    let mut upper_p = 0.0;
    let mut upper_n = 0.0;
    for &y in &ys {
        let f0 = curve0.eval(y);
        let f1 = curve1.eval(y);
        upper_p += style.combine(1.0 - f1, f0);
        upper_n += style.combine(1.0 - f0, f1);
    }
    let scale = (cfg.y_bounds.1 - cfg.y_bounds.0) / ys.len() as f64;
    Ok((
        BoundPair {
            lower: family.positive,
            upper: scale * upper_p,
            family: BoundFamily::CdfOnly,
        },
        BoundPair {
            lower: family.negative,
            upper: scale * upper_n,
            family: BoundFamily::CdfOnly,
        },
    ))
}

pub fn bound_p_cace<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    x0: f64,
    x1: f64,
    cfg: &McConfig,
    style: UpperBoundStyle,
) -> Result<BoundPair> {
    Ok(bound_cace(model, w, x0, x1, cfg, style)?.0)
}

pub fn bound_n_cace<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    x0: f64,
    x1: f64,
    cfg: &McConfig,
    style: UpperBoundStyle,
) -> Result<BoundPair> {
    Ok(bound_cace(model, w, x0, x1, cfg, style)?.1)
}

/// Bounds for `(P-CACE, N-CACE)` that additionally use the joint law of the
/// outcome and the binary treatment arm, via the factorization
/// `P(Y < y, X = x | w) = alpha(y; x, w) * P(X = x | w)`.
///
/// Both four-term integrands contain the corresponding CDF-only terms, so
/// this interval is contained in the CDF-only interval on shared draws.
/// Only the sharp (min/max) combination exists for this family.
pub fn bound_pn_cace_with_propensity<M, P>(
    cdf: &M,
    propensity: &P,
    w: &[f64],
    cfg: &McConfig,
) -> Result<(BoundPair, BoundPair)>
where
    M: ConditionalCdf + ?Sized,
    P: TreatedProbability + ?Sized,
{
    cfg.validate()?;
    let p1 = propensity.treated_prob(w)?;
    let p0 = 1.0 - p1;
    let ys = cfg.y_draws();
    let curve0 = cdf.curve(0.0, w)?;
    let curve1 = cdf.curve(1.0, w)?;

    let mut lower_p = 0.0;
    let mut upper_p = 0.0;
    let mut lower_n = 0.0;
    let mut upper_n = 0.0;
    for &y in &ys {
        let f0 = curve0.eval(y);
        let f1 = curve1.eval(y);
        // Joint pieces and the covariate-conditional mixture CDF.
        let j0 = f0 * p0;
        let j1 = f1 * p1;
        let fm = j0 + j1;

        lower_p += 0f64.max(f0 - f1).max(f0 - fm).max(fm - f1);
        upper_p += (1.0 - f1)
            .min(f0)
            .min(1.0 - j1 + j0)
            .min(f0 - f1 + j1 + 1.0 - j0);

        lower_n += 0f64.max(f1 - f0).max(f1 - fm).max(fm - f0);
        upper_n += (1.0 - f0)
            .min(f1)
            .min(1.0 - j0 + j1)
            .min(f1 - f0 + j0 + 1.0 - j1);
    }
    let scale = (cfg.y_bounds.1 - cfg.y_bounds.0) / ys.len() as f64;
    Ok((
        BoundPair {
            lower: scale * lower_p,
            upper: scale * upper_p,
            family: BoundFamily::CdfWithPropensity,
        },
        BoundPair {
            lower: scale * lower_n,
            upper: scale * upper_n,
            family: BoundFamily::CdfWithPropensity,
        },
    ))
}

/// Bounds for `(P-CPICE, N-CPICE)` under a policy pair: the CDF-only
/// envelope integrated over shared joint policy draws.
pub fn bound_cpice<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    pair: &PolicyPair,
    cfg: &McConfig,
    style: UpperBoundStyle,
) -> Result<(BoundPair, BoundPair)> {
    let family = estimate_cpice_family(model, w, pair, cfg)?;

    let ys = cfg.y_draws();
    let draws = cfg.policy_draws(pair);
    let mut upper_p = 0.0;
    let mut upper_n = 0.0;
    for &(x0, x1) in &draws {
        let curve0 = model.curve(x0, w)?;
        let curve1 = model.curve(x1, w)?;
        for &y in &ys {
            let f0 = curve0.eval(y);
            let f1 = curve1.eval(y);
            upper_p += style.combine(1.0 - f1, f0);
            upper_n += style.combine(1.0 - f0, f1);
        }
    }
    let scale = (cfg.y_bounds.1 - cfg.y_bounds.0) / (draws.len() * ys.len()) as f64;
    Ok((
        BoundPair {
            lower: family.positive,
            upper: scale * upper_p,
            family: BoundFamily::PolicyCdf,
        },
        BoundPair {
            lower: family.negative,
            upper: scale * upper_n,
            family: BoundFamily::PolicyCdf,
        },
    ))
}

pub fn bound_p_cpice<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    pair: &PolicyPair,
    cfg: &McConfig,
    style: UpperBoundStyle,
) -> Result<BoundPair> {
    Ok(bound_cpice(model, w, pair, cfg, style)?.0)
}

pub fn bound_n_cpice<M: ConditionalCdf + ?Sized>(
    model: &M,
    w: &[f64],
    pair: &PolicyPair,
    cfg: &McConfig,
    style: UpperBoundStyle,
) -> Result<BoundPair> {
    Ok(bound_cpice(model, w, pair, cfg, style)?.1)
}
