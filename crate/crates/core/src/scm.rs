//! Executable structural causal models.
//!
//! An [`ScmSpec`] carries the structural functions `y := f_Y(x, w, u_Y)`,
//! `x := f_X(w, u_X)`, `w := f_W(u_W)` together with the noise laws of the
//! exogenous variables. It can sample observational data and, through the
//! [`crate::oracle`] module, produce brute-force ground truths for every
//! measure. A catalog of named built-ins covers the synthetic settings used
//! throughout the test suite.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Whether the treatment variable is {0,1}-valued or real-valued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreatmentKind {
    Binary,
    Continuous,
}

/// A named exogenous noise distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLaw {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

impl NoiseLaw {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            NoiseLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            NoiseLaw::Normal { mean, sd } => {
                Normal::new(mean, sd).expect("valid normal").sample(rng)
            }
        }
    }

    /// The measure-preserving reflection of a draw about the distribution
    /// center. Used for antithetic pairing in oracle computations.
    pub fn reflect(&self, u: f64) -> f64 {
        match *self {
            NoiseLaw::Uniform { lo, hi } => lo + hi - u,
            NoiseLaw::Normal { mean, .. } => 2.0 * mean - u,
        }
    }
}

type YFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>;
type XFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type WFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// An executable structural causal model.
#[derive(Clone)]
pub struct ScmSpec {
    pub name: String,
    f_y: YFn,
    f_x: XFn,
    f_w: WFn,
    pub u_y_laws: Vec<NoiseLaw>,
    pub u_x_laws: Vec<NoiseLaw>,
    pub u_w_laws: Vec<NoiseLaw>,
    pub treatment: TreatmentKind,
    /// Metadata only: whether `f_Y` is monotone in `u_Y`, which makes the
    /// point-identification estimators consistent.
    pub monotone_in_uy: bool,
    pub covariate_dim: usize,
    /// Known outcome domain, when it can be stated analytically.
    pub y_domain: Option<(f64, f64)>,
}

impl std::fmt::Debug for ScmSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScmSpec")
            .field("name", &self.name)
            .field("treatment", &self.treatment)
            .field("covariate_dim", &self.covariate_dim)
            .field("monotone_in_uy", &self.monotone_in_uy)
            .field("y_domain", &self.y_domain)
            .finish()
    }
}

impl ScmSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        f_y: YFn,
        f_x: XFn,
        f_w: WFn,
        u_y_laws: Vec<NoiseLaw>,
        u_x_laws: Vec<NoiseLaw>,
        u_w_laws: Vec<NoiseLaw>,
        treatment: TreatmentKind,
        monotone_in_uy: bool,
        covariate_dim: usize,
        y_domain: Option<(f64, f64)>,
    ) -> Self {
        ScmSpec {
            name: name.into(),
            f_y,
            f_x,
            f_w,
            u_y_laws,
            u_x_laws,
            u_w_laws,
            treatment,
            monotone_in_uy,
            covariate_dim,
            y_domain,
        }
    }

    /// The potential outcome `Y_x(u)` at covariate value `w`.
    pub fn potential_outcome(&self, x: f64, w: &[f64], u_y: &[f64]) -> f64 {
        (self.f_y)(x, w, u_y)
    }

    pub fn observed_treatment(&self, w: &[f64], u_x: &[f64]) -> f64 {
        (self.f_x)(w, u_x)
    }

    pub fn covariates(&self, u_w: &[f64]) -> Vec<f64> {
        (self.f_w)(u_w)
    }

    pub fn sample_u_y(&self, rng: &mut ChaCha8Rng, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.u_y_laws.iter().map(|law| law.sample(rng)));
    }

    pub fn reflect_u_y(&self, u: &[f64], buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.u_y_laws.iter().zip(u).map(|(law, &v)| law.reflect(v)));
    }

    /// Draws `n` i.i.d. observational records, applying `f_W`, `f_X`, `f_Y`
    /// in order. Deterministic given the seed.
    pub fn sample_observational(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Invalid("sample size must be >= 1".into()));
        }
        let mut rng = rng_from_seed(seed);
        let d = self.covariate_dim;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n * d);
        let mut u_w = Vec::new();
        let mut u_x = Vec::new();
        let mut u_y = Vec::new();
        for _ in 0..n {
            u_w.clear();
            u_w.extend(self.u_w_laws.iter().map(|law| law.sample(&mut rng)));
            let wi = (self.f_w)(&u_w);
            debug_assert_eq!(wi.len(), d);

            u_x.clear();
            u_x.extend(self.u_x_laws.iter().map(|law| law.sample(&mut rng)));
            let xi = (self.f_x)(&wi, &u_x);

            u_y.clear();
            u_y.extend(self.u_y_laws.iter().map(|law| law.sample(&mut rng)));
            let yi = (self.f_y)(xi, &wi, &u_y);

            x.push(xi);
            y.push(yi);
            w.extend(wi);
        }
        let names = (1..=d).map(|j| format!("w{j}")).collect();
        let data = Dataset::from_columns(
            x,
            y,
            w,
            d,
            "x",
            "y",
            names,
            self.treatment == TreatmentKind::Binary,
        )?;
        match self.y_domain {
            Some((a, b)) => data.with_y_bounds(a, b),
            None => Ok(data),
        }
    }
}

/// Names of the built-in SCMs, in catalog order.
pub fn builtin_names() -> &'static [&'static str] {
    &[
        "ex1_additive",
        "ex2_multiplicative",
        "ex3_null",
        "ex4_interaction",
        "appc_main",
        "appc_violated",
        "binary_outcome",
    ]
}

/// Looks up a built-in SCM by name.
pub fn builtin(name: &str) -> Result<ScmSpec> {
    let std_normal = NoiseLaw::Normal { mean: 0.0, sd: 1.0 };
    let unit = NoiseLaw::Uniform { lo: 0.0, hi: 1.0 };
    match name {
        // y := x + u; homogeneous unit effect.
        "ex1_additive" => Ok(ScmSpec::new(
            name,
            Arc::new(|x, _w, u: &[f64]| x + u[0]),
            Arc::new(|_w, u: &[f64]| u[0]),
            Arc::new(|_u: &[f64]| Vec::new()),
            vec![std_normal],
            vec![std_normal],
            vec![],
            TreatmentKind::Continuous,
            true,
            0,
            None,
        )),
        // y := x * u; half the units gain, half lose.
        "ex2_multiplicative" => Ok(ScmSpec::new(
            name,
            Arc::new(|x, _w, u: &[f64]| x * u[0]),
            Arc::new(|_w, u: &[f64]| u[0]),
            Arc::new(|_u: &[f64]| Vec::new()),
            vec![std_normal],
            vec![std_normal],
            vec![],
            TreatmentKind::Continuous,
            true,
            0,
            None,
        )),
        // y := u; the treatment has no effect at all.
        "ex3_null" => Ok(ScmSpec::new(
            name,
            Arc::new(|_x, _w, u: &[f64]| u[0]),
            Arc::new(|_w, u: &[f64]| u[0]),
            Arc::new(|_u: &[f64]| Vec::new()),
            vec![std_normal],
            vec![std_normal],
            vec![],
            TreatmentKind::Continuous,
            true,
            0,
            None,
        )),
        // y := x + 1{x=1} u + 1{x=0} w u; the noise loading flips with the
        // arm, so both affected groups grow with w while their gap stays 1.
        "ex4_interaction" => Ok(ScmSpec::new(
            name,
            Arc::new(|x, w: &[f64], u: &[f64]| {
                let treated = if x == 1.0 { u[0] } else { 0.0 };
                let control = if x == 0.0 { w[0] * u[0] } else { 0.0 };
                x + treated + control
            }),
            Arc::new(|_w, u: &[f64]| if u[0] < 0.5 { 0.0 } else { 1.0 }),
            Arc::new(|u: &[f64]| vec![10.0 * u[0]]),
            vec![std_normal],
            vec![unit],
            vec![unit],
            TreatmentKind::Binary,
            true,
            1,
            None,
        )),
        // y := (0.5x + 0.1w + 1)(0.5 - u); x := w + u_x; all noise Unif(0,1).
        // The treatment scales a centered factor, so effects cancel on
        // average while both affected groups are substantial.
        "appc_main" => Ok(ScmSpec::new(
            name,
            Arc::new(|x, w: &[f64], u: &[f64]| (0.5 * x + 0.1 * w[0] + 1.0) * (0.5 - u[0])),
            Arc::new(|w: &[f64], u: &[f64]| w[0] + u[0]),
            Arc::new(|u: &[f64]| vec![u[0]]),
            vec![unit],
            vec![unit],
            vec![unit],
            TreatmentKind::Continuous,
            true,
            1,
            // |scale| <= 2.1 and the centered factor lies in [-0.5, 0.5].
            Some((-1.05, 1.05)),
        )),
        // appc_main plus an independent additive Unif(0,1) disturbance,
        // which breaks monotonicity of y in the noise vector.
        "appc_violated" => Ok(ScmSpec::new(
            name,
            Arc::new(|x, w: &[f64], u: &[f64]| {
                (0.5 * x + 0.1 * w[0] + 1.0) * (0.5 - u[0]) + u[1]
            }),
            Arc::new(|w: &[f64], u: &[f64]| w[0] + u[0]),
            Arc::new(|u: &[f64]| vec![u[0]]),
            vec![unit, unit],
            vec![unit],
            vec![unit],
            TreatmentKind::Continuous,
            false,
            1,
            Some((-1.05, 2.05)),
        )),
        // y := 1{0.8x + 0.2w + u > 1}; a binary outcome where the positive
        // measure reduces to the benefit rate P(Y0=0, Y1=1 | w).
        "binary_outcome" => Ok(ScmSpec::new(
            name,
            Arc::new(|x, w: &[f64], u: &[f64]| {
                if 0.8 * x + 0.2 * w[0] + u[0] > 1.0 {
                    1.0
                } else {
                    0.0
                }
            }),
            Arc::new(|w: &[f64], u: &[f64]| if u[0] < 0.3 + 0.4 * w[0] { 1.0 } else { 0.0 }),
            Arc::new(|u: &[f64]| vec![u[0]]),
            vec![unit],
            vec![unit],
            vec![unit],
            TreatmentKind::Binary,
            true,
            1,
            Some((0.0, 1.0)),
        )),
        other => Err(Error::UnknownScm(other.to_string())),
    }
}
