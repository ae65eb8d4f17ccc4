//! Resolution of estimation settings from flags, an optional TOML file, and
//! defaults, plus the small parsers for policy, stratum, and grid syntax.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use heteffect::bandwidth::DEFAULT_CANDIDATES;
use heteffect::bounds::UpperBoundStyle;
use heteffect::cdf::KernelFamily;
use heteffect::dataset::{Constraint, Dataset, RowFilter};
use heteffect::measures::MeasureKind;
use heteffect::policy::{Policy, PolicyPair};

use crate::args::EstimateArgs;

/// Optional file-level settings; any key may be omitted.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub stratum: Option<String>,
    pub w: Option<String>,
    pub measures: Option<String>,
    pub x0: Option<f64>,
    pub x1: Option<f64>,
    pub pi0: Option<String>,
    pub pi1: Option<String>,
    pub bounds: Option<bool>,
    pub upper_style: Option<String>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub y_bounds: Option<String>,
    pub bandwidth: Option<f64>,
    pub candidates: Option<String>,
    pub folds: Option<usize>,
    pub kernel: Option<String>,
    pub standardize: Option<bool>,
    pub bootstrap: Option<usize>,
    pub reselect_h: Option<bool>,
    pub seed: Option<u64>,
}

/// Fully resolved estimation settings.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub stratum: Option<String>,
    pub w: Option<Vec<f64>>,
    pub measures: Vec<MeasureKind>,
    pub x0: f64,
    pub x1: f64,
    pub pi0: Option<String>,
    pub pi1: Option<String>,
    pub bounds: bool,
    pub upper_style: UpperBoundStyle,
    pub n1: usize,
    pub n2: usize,
    pub y_bounds: Option<(f64, f64)>,
    pub bandwidth: Option<f64>,
    pub candidates: Vec<f64>,
    pub folds: usize,
    pub kernel: KernelFamily,
    pub standardize: bool,
    pub bootstrap: usize,
    pub reselect_h: bool,
    pub seed: u64,
}

impl ResolvedRun {
    /// Flags take precedence over file keys, which take precedence over the
    /// defaults (N1=10, N2=100, B=100, 5 folds, Epanechnikov kernel,
    /// candidates {1, 0.1, 0.01, 0.001}).
    pub fn from_args(args: &EstimateArgs, force_bounds: bool) -> Result<Self> {
        let file: RunFile = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                toml::from_str(&text).with_context(|| "parsing config file")?
            }
            None => RunFile::default(),
        };

        let measures_text = args
            .measures
            .clone()
            .or(file.measures)
            .unwrap_or_else(|| "all".to_string());
        let measures = parse_measures(&measures_text)?;

        let kernel_text = args
            .kernel
            .clone()
            .or(file.kernel)
            .unwrap_or_else(|| "epanechnikov".to_string());
        let upper_text = args
            .upper_style
            .clone()
            .or(file.upper_style)
            .unwrap_or_else(|| "sharp".to_string());

        let candidates = match args.candidates.clone().or(file.candidates) {
            Some(text) => parse_f64_list(&text)?,
            None => DEFAULT_CANDIDATES.to_vec(),
        };

        let w = match args.w.clone().or(file.w) {
            Some(text) if !text.is_empty() => Some(parse_f64_list(&text)?),
            _ => None,
        };
        let y_bounds = match args.y_bounds.clone().or(file.y_bounds) {
            Some(text) => {
                let v = parse_f64_list(&text)?;
                if v.len() != 2 {
                    bail!("--y-bounds expects `a,b`");
                }
                Some((v[0], v[1]))
            }
            None => None,
        };

        Ok(ResolvedRun {
            stratum: args.stratum.clone().or(file.stratum),
            w,
            measures,
            x0: args.x0.or(file.x0).unwrap_or(0.0),
            x1: args.x1.or(file.x1).unwrap_or(1.0),
            pi0: args.pi0.clone().or(file.pi0),
            pi1: args.pi1.clone().or(file.pi1),
            bounds: force_bounds || args.bounds || file.bounds.unwrap_or(false),
            upper_style: upper_text
                .parse::<UpperBoundStyle>()
                .map_err(|e| anyhow!("{e}"))?,
            n1: args.n1.or(file.n1).unwrap_or(10),
            n2: args.n2.or(file.n2).unwrap_or(100),
            y_bounds,
            bandwidth: args.bandwidth.or(file.bandwidth),
            candidates,
            folds: args.folds.or(file.folds).unwrap_or(5),
            kernel: kernel_text
                .parse::<KernelFamily>()
                .map_err(|e| anyhow!("{e}"))?,
            standardize: args.standardize || file.standardize.unwrap_or(false),
            bootstrap: args.bootstrap.or(file.bootstrap).unwrap_or(100),
            reselect_h: args.reselect_h || file.reselect_h.unwrap_or(false),
            seed: args.seed.or(file.seed).unwrap_or(0),
        })
    }

    /// The `# key = value` lines embedded at the top of emitted CSVs.
    pub fn comment_header(&self, source: &str) -> String {
        let mut lines = vec![format!("# source = {source}")];
        if let Some(s) = &self.stratum {
            lines.push(format!("# stratum = {s}"));
        }
        if let Some(w) = &self.w {
            lines.push(format!(
                "# w = {}",
                w.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
            ));
        }
        lines.push(format!(
            "# measures = {}",
            self.measures
                .iter()
                .map(|m| m.as_str())
                .collect::<Vec<_>>()
                .join(",")
        ));
        lines.push(format!("# arms = {},{}", self.x0, self.x1));
        if let Some(p) = &self.pi0 {
            lines.push(format!("# pi0 = {p}"));
        }
        if let Some(p) = &self.pi1 {
            lines.push(format!("# pi1 = {p}"));
        }
        lines.push(format!("# bounds = {}", self.bounds));
        lines.push(format!("# upper_style = {:?}", self.upper_style));
        lines.push(format!("# n1 = {}, n2 = {}", self.n1, self.n2));
        if let Some((a, b)) = self.y_bounds {
            lines.push(format!("# y_bounds = {a},{b}"));
        }
        match self.bandwidth {
            Some(h) => lines.push(format!("# bandwidth = {h}")),
            None => lines.push(format!(
                "# candidates = {}; folds = {}",
                self.candidates
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
                self.folds
            )),
        }
        lines.push(format!(
            "# kernel = {}; standardize = {}",
            self.kernel, self.standardize
        ));
        lines.push(format!(
            "# bootstrap = {}; reselect_h = {}",
            self.bootstrap, self.reselect_h
        ));
        lines.push(format!("# seed = {}", self.seed));
        lines.join("\n")
    }
}

pub fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("parsing number `{t}`"))
        })
        .collect()
}

pub fn parse_measures(text: &str) -> Result<Vec<MeasureKind>> {
    if text == "all" {
        return Ok(MeasureKind::all().to_vec());
    }
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<MeasureKind>().map_err(|e| anyhow!("{e}")))
        .collect()
}

/// `start:stop:step` inclusive grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("grid must be `start:stop:step`, got `{text}`");
    }
    let start: f64 = parts[0].trim().parse()?;
    let stop: f64 = parts[1].trim().parse()?;
    let step: f64 = parts[2].trim().parse()?;
    if step <= 0.0 || step.is_nan() || stop < start {
        bail!("grid needs step > 0 and stop >= start");
    }
    let mut grid = Vec::new();
    let mut v = start;
    while v <= stop + 1e-12 {
        grid.push(v);
        v += step;
    }
    Ok(grid)
}

/// Policy grammar: `dirac:X`, `uniform:LO,HI`, `normal:MEAN,SD`,
/// `empirical` (resamples the dataset's treatment column).
pub fn parse_policy(text: &str, data: &Dataset) -> Result<Policy> {
    let (kind, params) = match text.split_once(':') {
        Some((k, p)) => (k, p),
        None => (text, ""),
    };
    let nums = parse_f64_list(params)?;
    match (kind, nums.as_slice()) {
        ("dirac", [x]) => Ok(Policy::Dirac(*x)),
        ("uniform", [lo, hi]) => Ok(Policy::Uniform { lo: *lo, hi: *hi }),
        ("normal", [mean, sd]) => Ok(Policy::Normal {
            mean: *mean,
            sd: *sd,
        }),
        ("empirical", []) => Policy::empirical(data.x()).map_err(|e| anyhow!("{e}")),
        _ => bail!("unknown policy `{text}`"),
    }
}

/// Builds the joint policy pair. The second policy may couple to the first
/// via `shift:D` (x1 = x0 + D) or `double_shift:D` ((x0-D, x0+D)).
pub fn parse_policy_pair(pi0: &str, pi1: &str, data: &Dataset) -> Result<PolicyPair> {
    if let Some((kind, param)) = pi1.split_once(':') {
        if kind == "shift" {
            return Ok(PolicyPair::SingleShift {
                base: parse_policy(pi0, data)?,
                shift: param.trim().parse()?,
            });
        }
        if kind == "double_shift" {
            return Ok(PolicyPair::DoubleShift {
                base: parse_policy(pi0, data)?,
                shift: param.trim().parse()?,
            });
        }
    }
    Ok(PolicyPair::Independent {
        pi0: parse_policy(pi0, data)?,
        pi1: parse_policy(pi1, data)?,
    })
}

/// Stratum grammar: comma-separated `column=value` (numeric or categorical
/// label) and `column=lo..hi` range clauses.
pub fn parse_stratum(text: &str, data: &Dataset) -> Result<RowFilter> {
    let mut filter = RowFilter::new();
    for clause in text.split(',').filter(|t| !t.trim().is_empty()) {
        let (column, value) = clause
            .split_once('=')
            .ok_or_else(|| anyhow!("stratum clause `{clause}` is not `column=value`"))?;
        let column = column.trim();
        let value = value.trim();
        if let Some((lo, hi)) = value.split_once("..") {
            filter
                .clauses
                .push((column.into(), Constraint::Between(lo.parse()?, hi.parse()?)));
        } else if let Ok(v) = value.parse::<f64>() {
            filter.clauses.push((column.into(), Constraint::Equal(v)));
        } else {
            let code = data.code_for(column, value).ok_or_else(|| {
                anyhow!("`{value}` is not a declared category of column `{column}`")
            })?;
            filter.clauses.push((column.into(), Constraint::Equal(code)));
        }
    }
    Ok(filter)
}

/// The covariate point pinned by the stratum's equality clauses, when every
/// covariate is pinned.
pub fn stratum_point(filter: &RowFilter, data: &Dataset) -> Option<Vec<f64>> {
    let mut point = Vec::with_capacity(data.dim());
    for name in data.covariate_names() {
        let pinned = filter.clauses.iter().find_map(|(col, c)| match c {
            Constraint::Equal(v) if col == name => Some(*v),
            _ => None,
        })?;
        point.push(pinned);
    }
    Some(point)
}
