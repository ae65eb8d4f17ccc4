//! Local-linear conditional CDF estimation.
//!
//! The estimate of `P(Y < y | X=x, W=w)` is the intercept of the weighted
//! least-squares fit of the indicators `I(Y_i < y)` on
//! `(1, X_i - x, W_i - w)` with product kernel weights
//! `K_h(X_i - x) * prod_l K_h(W_il - w_l)`.
//!
//! Because the weights do not depend on `y`, a query point `(x, w)` yields a
//! vector of effective weights `s_i` with `alpha(y) = sum_{Y_i < y} s_i` for
//! every `y`. [`CdfModel::curve`] materializes that vector once (sorted by
//! outcome, prefix-summed), after which each evaluation is a binary search.
//! Point estimators, bounds, and cross-validation all run against
//! [`CdfCurve`]s.
//!
//! All columns are z-score standardized before kernel evaluation so a single
//! bandwidth is meaningful across the treatment and covariate axes;
//! zero-variance columns are excluded from both the kernel and the design.
//! A rank-deficient local design falls back to the kernel-weighted mean of
//! the indicators (a local-constant fit) and flags the curve.

use std::sync::Arc;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Kernel weight family. The default is Epanechnikov: compactly supported,
/// symmetric, Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Epanechnikov,
    Gaussian,
    Uniform,
}

impl KernelFamily {
    /// Weight at the scaled offset `u = (z_i - z_query) / h`.
    #[inline]
    pub fn weight(self, u: f64) -> f64 {
        match self {
            KernelFamily::Epanechnikov => {
                if u.abs() < 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
            KernelFamily::Gaussian => (-0.5 * u * u).exp(),
            KernelFamily::Uniform => {
                if u.abs() < 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    /// Support radius in scaled units, if compact.
    #[inline]
    pub fn support(self) -> Option<f64> {
        match self {
            KernelFamily::Epanechnikov | KernelFamily::Uniform => Some(1.0),
            KernelFamily::Gaussian => None,
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            "gaussian" => Ok(KernelFamily::Gaussian),
            "uniform" => Ok(KernelFamily::Uniform),
            other => Err(Error::Invalid(format!("unknown kernel family `{other}`"))),
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Uniform => "uniform",
        };
        f.write_str(name)
    }
}

/// Kernel family plus the single bandwidth shared across all axes.
///
/// By default the bandwidth applies in raw data units. With
/// `standardize`, all columns are z-scored before kernel evaluation, which
/// makes one bandwidth meaningful when the treatment and covariates live on
/// very different scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
    pub standardize: bool,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if bandwidth <= 0.0 || !bandwidth.is_finite() {
            return Err(Error::Invalid(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(KernelSpec {
            family,
            bandwidth,
            standardize: false,
        })
    }

    pub fn with_standardization(mut self, standardize: bool) -> Self {
        self.standardize = standardize;
        self
    }
}

/// Per-column z-score parameters; zero-variance columns are inactive.
#[derive(Debug, Clone)]
struct Standardizer {
    means: Vec<f64>,
    inv_sds: Vec<f64>,
    active: Vec<bool>,
}

impl Standardizer {
    /// Computes per-column parameters. Constant columns are marked inactive
    /// regardless of `standardize`; with `standardize` off the transform is
    /// the identity.
    fn fit(columns: &[Vec<f64>], standardize: bool) -> Self {
        let mut means = Vec::with_capacity(columns.len());
        let mut inv_sds = Vec::with_capacity(columns.len());
        let mut active = Vec::with_capacity(columns.len());
        for col in columns {
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd > 0.0 {
                means.push(if standardize { mean } else { 0.0 });
                inv_sds.push(if standardize { 1.0 / sd } else { 1.0 });
                active.push(true);
            } else {
                means.push(0.0);
                inv_sds.push(0.0);
                active.push(false);
            }
        }
        Standardizer { means, inv_sds, active }
    }

    #[inline]
    fn z(&self, col: usize, v: f64) -> f64 {
        (v - self.means[col]) * self.inv_sds[col]
    }
}

/// A reusable evaluator of `y -> P(Y < y | X=x, W=w)` at one query point.
#[derive(Clone)]
pub struct CdfCurve {
    imp: CurveImpl,
}

#[derive(Clone)]
enum CurveImpl {
    Table {
        /// Local outcome values, ascending.
        ys: Arc<[f64]>,
        /// `cum[i]` is the sum of effective weights of the first `i` points.
        cum: Arc<[f64]>,
        fallback: bool,
    },
    Fn(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for CdfCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.imp {
            CurveImpl::Table { ys, fallback, .. } => f
                .debug_struct("CdfCurve")
                .field("points", &ys.len())
                .field("fallback", fallback)
                .finish(),
            CurveImpl::Fn(_) => f.debug_struct("CdfCurve").field("closure", &true).finish(),
        }
    }
}

impl CdfCurve {
    /// Wraps an arbitrary CDF function; used for plugging in alternative
    /// estimators or closed-form references.
    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CdfCurve { imp: CurveImpl::Fn(Arc::new(f)) }
    }

    /// Evaluates the curve, clamped to `[0, 1]`. No monotonicity in `y` is
    /// guaranteed for local-linear weights.
    pub fn eval(&self, y: f64) -> f64 {
        let raw = match &self.imp {
            CurveImpl::Table { ys, cum, .. } => {
                let idx = ys.partition_point(|&yi| yi < y);
                cum[idx]
            }
            CurveImpl::Fn(f) => f(y),
        };
        raw.clamp(0.0, 1.0)
    }

    /// Whether the local-linear solve was rank-deficient and the curve is a
    /// local-constant (kernel-weighted mean) fit.
    pub fn used_fallback(&self) -> bool {
        matches!(self.imp, CurveImpl::Table { fallback: true, .. })
    }
}

/// Anything that can produce a conditional CDF evaluator at a query point.
pub trait ConditionalCdf {
    fn curve(&self, x: f64, w: &[f64]) -> Result<CdfCurve>;
}

type CurveFn = Arc<dyn Fn(f64, &[f64]) -> CdfCurve + Send + Sync>;

/// A closure-backed [`ConditionalCdf`], mainly for reference curves.
pub struct FnCdf {
    f: CurveFn,
}

impl FnCdf {
    pub fn new(f: impl Fn(f64, &[f64]) -> CdfCurve + Send + Sync + 'static) -> Self {
        FnCdf { f: Arc::new(f) }
    }
}

impl ConditionalCdf for FnCdf {
    fn curve(&self, x: f64, w: &[f64]) -> Result<CdfCurve> {
        Ok((self.f)(x, w))
    }
}

/// The fitted local-linear conditional CDF model. Fitting is lazy: the model
/// retains the training data and solves the local weighted least squares at
/// each query.
#[derive(Debug, Clone)]
pub struct CdfModel {
    /// Outcomes ascending; parallel arrays follow this order.
    ys: Vec<f64>,
    /// Standardized treatment, outcome-sorted.
    zx: Vec<f64>,
    /// Standardized covariates, row-major, outcome-sorted. Inactive columns
    /// hold zeros.
    zw: Vec<f64>,
    d: usize,
    active_w: Vec<usize>,
    x_active: bool,
    kernel: KernelSpec,
    std: Standardizer,
    binary_treatment: bool,
}

/// Relative pivot tolerance for declaring the local design rank-deficient.
const PIVOT_TOL: f64 = 1e-10;

impl CdfModel {
    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn binary_treatment(&self) -> bool {
        self.binary_treatment
    }

    pub fn y_min(&self) -> f64 {
        self.ys[0]
    }

    pub fn y_max(&self) -> f64 {
        *self.ys.last().unwrap()
    }
}

/// Fits the model: standardizes, sorts by outcome, and stores the data.
pub fn fit_cdf(data: &Dataset, kernel: KernelSpec) -> Result<CdfModel> {
    let n = data.n();
    let d = data.dim();
    if n < d + 2 {
        return Err(Error::Invalid(format!(
            "need at least d + 2 = {} rows to fit a local-linear model, got {n}",
            d + 2
        )));
    }
    let mut columns = Vec::with_capacity(d + 1);
    columns.push(data.x().to_vec());
    for j in 0..d {
        columns.push((0..n).map(|i| data.w_row(i)[j]).collect());
    }
    let std = Standardizer::fit(&columns, kernel.standardize);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| data.y()[a].total_cmp(&data.y()[b]));

    let x_active = std.active[0];
    let active_w: Vec<usize> = (0..d).filter(|j| std.active[j + 1]).collect();

    let mut ys = Vec::with_capacity(n);
    let mut zx = Vec::with_capacity(n);
    let mut zw = vec![0.0; n * d];
    for (row, &i) in order.iter().enumerate() {
        ys.push(data.y()[i]);
        zx.push(if x_active { std.z(0, data.x()[i]) } else { 0.0 });
        for &j in &active_w {
            zw[row * d + j] = std.z(j + 1, data.w_row(i)[j]);
        }
    }

    Ok(CdfModel {
        ys,
        zx,
        zw,
        d,
        active_w,
        x_active,
        kernel,
        std,
        binary_treatment: data.binary_treatment(),
    })
}

/// Solves `A v = e1` for a symmetric positive semi-definite `A` (row-major,
/// `p x p`) via Cholesky. Returns `None` when a pivot collapses relative to
/// its diagonal entry, signalling a rank-deficient design.
fn solve_spd_e1(a: &mut [f64], p: usize) -> Option<Vec<f64>> {
    let orig_diag: Vec<f64> = (0..p).map(|i| a[i * p + i]).collect();
    // In-place lower Cholesky.
    for j in 0..p {
        let mut diag = a[j * p + j];
        for k in 0..j {
            diag -= a[j * p + k] * a[j * p + k];
        }
        if diag.is_nan() || diag <= PIVOT_TOL * orig_diag[j].max(f64::MIN_POSITIVE) {
            return None;
        }
        let l_jj = diag.sqrt();
        a[j * p + j] = l_jj;
        for i in (j + 1)..p {
            let mut v = a[i * p + j];
            for k in 0..j {
                v -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = v / l_jj;
        }
    }
    // Forward solve L z = e1.
    let mut z = vec![0.0; p];
    for i in 0..p {
        let mut v = if i == 0 { 1.0 } else { 0.0 };
        for k in 0..i {
            v -= a[i * p + k] * z[k];
        }
        z[i] = v / a[i * p + i];
    }
    // Back solve L' v = z.
    let mut v = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = z[i];
        for k in (i + 1)..p {
            s -= a[k * p + i] * v[k];
        }
        v[i] = s / a[i * p + i];
    }
    Some(v)
}

impl ConditionalCdf for CdfModel {
    /// Builds the effective-weight curve at `(x, w)`.
    ///
    /// Errors with [`Error::NoLocalData`] when the total kernel weight at
    /// the query is zero; callers may retry with a larger bandwidth.
    fn curve(&self, x: f64, w: &[f64]) -> Result<CdfCurve> {
        if w.len() != self.d {
            return Err(Error::Invalid(format!(
                "query has {} covariates, model expects {}",
                w.len(),
                self.d
            )));
        }
        let inv_h = 1.0 / self.kernel.bandwidth;
        let family = self.kernel.family;
        let compact = family.support().is_some();

        let zxq = if self.x_active { self.std.z(0, x) } else { 0.0 };
        let zwq: Vec<f64> = self
            .active_w
            .iter()
            .map(|&j| self.std.z(j + 1, w[j]))
            .collect();

        let n = self.ys.len();
        // Basis offsets per retained point: (u_x, u_w...) in bandwidth units.
        let p = 1 + self.x_active as usize + self.active_w.len();
        let mut k_buf: Vec<f64> = Vec::new();
        let mut y_buf: Vec<f64> = Vec::new();
        let mut u_buf: Vec<f64> = Vec::new();

        'points: for j in 0..n {
            let start = u_buf.len();
            let mut k = 1.0;
            if self.x_active {
                let u = (self.zx[j] - zxq) * inv_h;
                if compact && u.abs() >= 1.0 {
                    continue;
                }
                k *= family.weight(u);
                u_buf.push(u);
            }
            let row = &self.zw[j * self.d..(j + 1) * self.d];
            for (slot, &col) in self.active_w.iter().enumerate() {
                let u = (row[col] - zwq[slot]) * inv_h;
                if compact && u.abs() >= 1.0 {
                    u_buf.truncate(start);
                    continue 'points;
                }
                k *= family.weight(u);
                u_buf.push(u);
            }
            // Gaussian products can underflow to zero far from the data.
            if k <= 0.0 {
                u_buf.truncate(start);
                continue;
            }
            k_buf.push(k);
            y_buf.push(self.ys[j]);
        }

        let m = k_buf.len();
        if m == 0 {
            return Err(Error::NoLocalData { x, w: w.to_vec() });
        }

        let dims = p - 1;
        debug_assert_eq!(u_buf.len(), m * dims);

        // Normal-equations matrix A = sum_j k_j z_j z_j', z_j = (1, u_j);
        // only the lower triangle is filled, which is all the solver reads.
        let mut a = vec![0.0; p * p];
        let mut k_total = 0.0;
        for j in 0..m {
            let k = k_buf[j];
            let u = &u_buf[j * dims..(j + 1) * dims];
            k_total += k;
            a[0] += k;
            for r in 0..dims {
                a[(r + 1) * p] += k * u[r];
                for c in 0..=r {
                    a[(r + 1) * p + (c + 1)] += k * u[r] * u[c];
                }
            }
        }

        // Intercept-only designs are local-constant fits by construction.
        let (coef, fallback) = if dims == 0 {
            (Vec::new(), true)
        } else if m >= p {
            match solve_spd_e1(&mut a, p) {
                Some(v) => (v, false),
                None => (Vec::new(), true),
            }
        } else {
            (Vec::new(), true)
        };

        // Effective weights, prefix-summed in outcome order.
        let mut cum = Vec::with_capacity(m + 1);
        cum.push(0.0);
        let mut running = 0.0;
        for j in 0..m {
            let s = if fallback {
                k_buf[j] / k_total
            } else {
                let u = &u_buf[j * dims..(j + 1) * dims];
                let mut basis = coef[0];
                for r in 0..dims {
                    basis += coef[r + 1] * u[r];
                }
                k_buf[j] * basis
            };
            running += s;
            cum.push(running);
        }

        Ok(CdfCurve {
            imp: CurveImpl::Table {
                ys: y_buf.into(),
                cum: cum.into(),
                fallback,
            },
        })
    }
}

/// One-shot evaluation of `P(Y < y | X=x, W=w)`.
pub fn eval_cdf(model: &CdfModel, y: f64, x: f64, w: &[f64]) -> Result<f64> {
    Ok(model.curve(x, w)?.eval(y))
}

/// Anything that can report `P(X=1 | W=w)` for a binary treatment.
pub trait TreatedProbability {
    fn treated_prob(&self, w: &[f64]) -> Result<f64>;
}

/// Kernel-weighted (Nadaraya-Watson) estimator of the treated-arm
/// probability `P(X=1 | W=w)`; the two arms sum to one by construction.
#[derive(Debug, Clone)]
pub struct PropensityModel {
    x: Vec<f64>,
    zw: Vec<f64>,
    d: usize,
    active_w: Vec<usize>,
    kernel: KernelSpec,
    std: Standardizer,
}

pub fn fit_propensity(data: &Dataset, kernel: KernelSpec) -> Result<PropensityModel> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if data.x().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Invalid(
            "propensity model requires a binary {0,1} treatment".into(),
        ));
    }
    let n = data.n();
    let d = data.dim();
    let columns: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..n).map(|i| data.w_row(i)[j]).collect())
        .collect();
    let std = Standardizer::fit(&columns, kernel.standardize);
    let active_w: Vec<usize> = (0..d).filter(|&j| std.active[j]).collect();
    let mut zw = vec![0.0; n * d];
    for i in 0..n {
        for &j in &active_w {
            zw[i * d + j] = std.z(j, data.w_row(i)[j]);
        }
    }
    Ok(PropensityModel {
        x: data.x().to_vec(),
        zw,
        d,
        active_w,
        kernel,
        std,
    })
}

impl TreatedProbability for PropensityModel {
    fn treated_prob(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.d {
            return Err(Error::Invalid(format!(
                "query has {} covariates, model expects {}",
                w.len(),
                self.d
            )));
        }
        let inv_h = 1.0 / self.kernel.bandwidth;
        let family = self.kernel.family;
        let compact = family.support().is_some();
        let zwq: Vec<f64> = self.active_w.iter().map(|&j| self.std.z(j, w[j])).collect();

        let mut num = 0.0;
        let mut den = 0.0;
        'points: for i in 0..self.x.len() {
            let mut k = 1.0;
            let row = &self.zw[i * self.d..(i + 1) * self.d];
            for (slot, &col) in self.active_w.iter().enumerate() {
                let u = (row[col] - zwq[slot]) * inv_h;
                if compact && u.abs() >= 1.0 {
                    continue 'points;
                }
                k *= family.weight(u);
            }
            num += k * self.x[i];
            den += k;
        }
        if den <= 0.0 {
            return Err(Error::NoLocalData { x: f64::NAN, w: w.to_vec() });
        }
        Ok((num / den).clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn toy_dataset() -> Dataset {
        // x on a grid, one covariate, outcomes increasing with x.
        let n = 40;
        let mut rng = rng_from_seed(5);
        let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x
            .iter()
            .zip(&w)
            .map(|(&x, &w)| x + 0.3 * w + 0.1 * ((x * 37.0).sin()))
            .collect();
        Dataset::from_columns(x, y, w, 1, "x", "y", vec!["w1".into()], false).unwrap()
    }

    fn spec(h: f64) -> KernelSpec {
        KernelSpec::new(KernelFamily::Epanechnikov, h).unwrap()
    }

    #[test]
    fn extreme_outcomes_hit_zero_and_one() {
        let data = toy_dataset();
        let model = fit_cdf(&data, spec(0.8)).unwrap();
        let lo = eval_cdf(&model, -10.0, 0.5, &[0.5]).unwrap();
        let hi = eval_cdf(&model, 10.0, 0.5, &[0.5]).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 1.0).abs() < 1e-9, "weights sum to one: {hi}");
    }

    #[test]
    fn all_local_indicators_one_gives_one() {
        // Queries near small x see only outcomes below the threshold.
        let data = toy_dataset();
        let model = fit_cdf(&data, spec(0.3)).unwrap();
        let v = eval_cdf(&model, 0.9, 0.05, &[0.5]).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn outputs_always_in_unit_interval() {
        let data = toy_dataset();
        let model = fit_cdf(&data, spec(0.4)).unwrap();
        for i in 0..60 {
            let y = -0.5 + i as f64 * 0.05;
            let v = eval_cdf(&model, y, 0.3, &[0.4]).unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn zero_local_weight_errors() {
        let data = toy_dataset();
        let model = fit_cdf(&data, spec(0.05)).unwrap();
        let err = model.curve(25.0, &[0.5]).unwrap_err();
        assert!(matches!(err, Error::NoLocalData { .. }));
    }

    #[test]
    fn too_few_rows_rejected() {
        let data = Dataset::from_columns(
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![0.5, 0.5],
            1,
            "x",
            "y",
            vec!["w1".into()],
            false,
        )
        .unwrap();
        assert!(fit_cdf(&data, spec(1.0)).is_err());
    }

    #[test]
    fn local_linear_matches_independent_normal_equations() {
        // Independent route: assemble the weighted normal equations with
        // nalgebra and take the intercept of the solved coefficients.
        use nalgebra::{DMatrix, DVector};

        let mut rng = rng_from_seed(17);
        for trial in 0..40 {
            let n = 8 + (trial % 13);
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let data = Dataset::from_columns(
                x.clone(),
                y.clone(),
                w.clone(),
                1,
                "x",
                "y",
                vec!["w1".into()],
                false,
            )
            .unwrap();
            let h = 0.6 + 0.4 * rng.random::<f64>();
            let model = fit_cdf(&data, spec(h)).unwrap();

            let xq = 0.5 + rng.random::<f64>();
            let wq = rng.random::<f64>();
            let yq = rng.random::<f64>();
            let Ok(curve) = model.curve(xq, &[wq]) else {
                continue;
            };
            if curve.used_fallback() {
                continue;
            }
            let ours = curve.eval(yq);

            // Independent route: raw-unit offsets, explicit normal equations.
            let mut rows = Vec::new();
            let mut weights = Vec::new();
            let mut resp = Vec::new();
            for i in 0..n {
                let ux = (x[i] - xq) / h;
                let uw = (w[i] - wq) / h;
                if ux.abs() >= 1.0 || uw.abs() >= 1.0 {
                    continue;
                }
                let k = 0.75 * (1.0 - ux * ux) * 0.75 * (1.0 - uw * uw);
                rows.push([1.0, ux, uw]);
                weights.push(k);
                resp.push(if y[i] < yq { 1.0 } else { 0.0 });
            }
            if rows.len() < 3 {
                continue;
            }
            let m = rows.len();
            let z = DMatrix::from_fn(m, 3, |r, c| rows[r][c]);
            let k = DMatrix::from_diagonal(&DVector::from_vec(weights.clone()));
            let r = DVector::from_vec(resp.clone());
            let a = z.transpose() * &k * &z;
            let b = z.transpose() * &k * r;
            let Some(sol) = a.lu().solve(&b) else { continue };
            let reference = sol[0].clamp(0.0, 1.0);

            assert!(
                (ours - reference).abs() < 1e-10,
                "trial {trial}: {ours} vs {reference}"
            );
        }
    }

    #[test]
    fn rank_deficient_design_falls_back_to_weighted_mean() {
        // Constant treatment and covariate: the linear terms are degenerate.
        let n = 10;
        let x = vec![1.0; n];
        let w = vec![0.3; n];
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let data =
            Dataset::from_columns(x, y, w, 1, "x", "y", vec!["w1".into()], false).unwrap();
        let model = fit_cdf(&data, spec(0.5)).unwrap();
        let curve = model.curve(1.0, &[0.3]).unwrap();
        assert!(curve.used_fallback());
        // Independent Nadaraya-Watson value: all weights equal, so the
        // estimate is the plain fraction of outcomes below y.
        assert!((curve.eval(4.5) - 0.5).abs() < 1e-12);
        assert_eq!(curve.eval(0.0), 0.0);
        assert!((curve.eval(100.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_kernel_covers_the_whole_sample() {
        let data = toy_dataset();
        let model = fit_cdf(&data, KernelSpec::new(KernelFamily::Gaussian, 0.5).unwrap()).unwrap();
        // Queries outside the sample range still see data under a Gaussian
        // kernel (until the weight product underflows).
        let v = eval_cdf(&model, 0.7, 3.0, &[0.5]).unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn propensity_all_treated_is_one() {
        let n = 20;
        let data = Dataset::from_columns(
            vec![1.0; n],
            vec![0.0; n],
            (0..n).map(|i| i as f64 / n as f64).collect(),
            1,
            "x",
            "y",
            vec!["w1".into()],
            true,
        )
        .unwrap();
        let model = fit_propensity(&data, spec(0.5)).unwrap();
        assert_eq!(model.treated_prob(&[0.5]).unwrap(), 1.0);
    }

    #[test]
    fn propensity_independent_treatment_near_half() {
        let n = 4000;
        let mut rng = rng_from_seed(23);
        let x: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() < 0.5) as u8 as f64).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        // Independent brute-force frequency at the query window.
        let freq = {
            let (mut c, mut t) = (0usize, 0usize);
            for i in 0..n {
                if (w[i] - 0.5).abs() < 0.1 {
                    t += 1;
                    c += (x[i] == 1.0) as usize;
                }
            }
            c as f64 / t as f64
        };
        let data = Dataset::from_columns(
            x,
            vec![0.0; n],
            w,
            1,
            "x",
            "y",
            vec!["w1".into()],
            true,
        )
        .unwrap();
        let model = fit_propensity(&data, spec(0.35)).unwrap();
        let p = model.treated_prob(&[0.5]).unwrap();
        assert!((p - 0.5).abs() < 0.05, "p = {p}");
        assert!((p - freq).abs() < 0.05, "p = {p}, local frequency = {freq}");
    }

    #[test]
    fn propensity_tracks_a_sharp_boundary() {
        let n = 2000;
        let mut rng = rng_from_seed(29);
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let x: Vec<f64> = w.iter().map(|&v| (v > 0.5) as u8 as f64).collect();
        let data = Dataset::from_columns(
            x,
            vec![0.0; n],
            w,
            1,
            "x",
            "y",
            vec!["w1".into()],
            true,
        )
        .unwrap();
        let model = fit_propensity(&data, spec(0.2)).unwrap();
        let p = model.treated_prob(&[0.9]).unwrap();
        assert!(p > 0.98, "p = {p}");
    }

    #[test]
    fn propensity_requires_binary_treatment() {
        let data = toy_dataset();
        assert!(fit_propensity(&data, spec(0.5)).is_err());
    }
}
