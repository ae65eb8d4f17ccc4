//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use heteffect::bandwidth::select_bandwidth;
use heteffect::bounds::{bound_cace, bound_cpice, BoundPair};
use heteffect::cdf::{fit_cdf, CdfModel, KernelSpec};
use heteffect::dataset::{load_csv, Dataset, SchemaConfig};
use heteffect::inference::{bootstrap, MeasureReport};
use heteffect::measures::{
    estimate_cace_family, estimate_cpice_family, FamilyEstimate, McConfig, MeasureKind,
};
use heteffect::oracle::{oracle_cace_parts, oracle_cpice_parts, oracle_thr_tbr_integrals};
use heteffect::policy::PolicyPair;
use heteffect::rng::derive_seed;
use heteffect::scm::builtin;
use heteffect::study::{run_study, StudyConfig};
use heteffect::Error;

use crate::args::{Cli, Command, EstimateArgs, OracleArgs, ReproduceArgs, SimulateArgs, SweepArgs};
use crate::config::{
    parse_grid, parse_policy_pair, parse_stratum, stratum_point, ResolvedRun,
};

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Estimate(args) => cmd_estimate(args, false),
        Command::Bounds(args) => cmd_estimate(args, true),
        Command::Sweep(args) => cmd_sweep(args),
        Command::ReproduceTables(args) => cmd_reproduce(args),
    }
}

/// Writes the finished content in one shot via a sibling temp file, so a
/// failed run never leaves a partial output.
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, content)
        .with_context(|| format!("writing {}", tmp.display()))?;
    if let Err(e) = std::fs::rename(&tmp, path) {
        let _ = std::fs::remove_file(&tmp);
        return Err(e).with_context(|| format!("moving output into {}", path.display()));
    }
    Ok(())
}

fn join_w(w: &[f64]) -> String {
    if w.is_empty() {
        "-".to_string()
    } else {
        w.iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let scm = builtin(&args.scm)?;
    let data = scm.sample_observational(args.n, args.seed)?;
    let mut out = String::new();
    writeln!(out, "# scm = {}", args.scm)?;
    writeln!(out, "# n = {}", args.n)?;
    writeln!(out, "# seed = {}", args.seed)?;
    write!(out, "{},{}", data.treatment_name(), data.outcome_name())?;
    for name in data.covariate_names() {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for i in 0..data.n() {
        write!(out, "{},{}", data.x()[i], data.y()[i])?;
        for v in data.w_row(i) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    write_atomic(&args.out, &out)
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let scm = builtin(&args.scm)?;
    let w = crate::config::parse_f64_list(&args.w)?;
    if w.len() != scm.covariate_dim {
        bail!(
            "--w has {} values but `{}` has {} covariates",
            w.len(),
            args.scm,
            scm.covariate_dim
        );
    }
    let mut out = String::new();
    writeln!(out, "# scm = {}", args.scm)?;
    writeln!(out, "# w = {}", join_w(&w))?;
    writeln!(out, "# arms = {},{}", args.x0, args.x1)?;
    writeln!(out, "# mc = {}", args.mc)?;
    writeln!(out, "# seed = {}", args.seed)?;
    writeln!(out, "measure,w,value,std_error,draws")?;

    let parts = oracle_cace_parts(&scm, &w, args.x0, args.x1, args.mc, args.seed);
    for r in [&parts.total, &parts.positive, &parts.negative] {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.measure,
            join_w(&w),
            r.value,
            r.mc_std_error,
            r.mc_draws
        )?;
    }

    match (&args.pi0, &args.pi1) {
        (Some(pi0), Some(pi1)) => {
            // Policies never depend on the data here; parse against an
            // empty placeholder so `empirical` is rejected cleanly.
            let placeholder = Dataset::from_columns(
                vec![0.0],
                vec![0.0],
                vec![],
                0,
                "x",
                "y",
                vec![],
                false,
            )
            .map_err(|e| anyhow!("{e}"))?;
            let pair = parse_policy_pair(pi0, pi1, &placeholder)?;
            let parts = oracle_cpice_parts(&scm, &w, &pair, args.mc, args.seed);
            for r in [&parts.total, &parts.positive, &parts.negative] {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.measure,
                    join_w(&w),
                    r.value,
                    r.mc_std_error,
                    r.mc_draws
                )?;
            }
        }
        (None, None) => {}
        _ => bail!("--pi0 and --pi1 must be given together"),
    }

    if let Some(c_max) = args.c_max {
        let t = oracle_thr_tbr_integrals(&scm, &w, c_max, args.mc, args.c_grid, args.seed)?;
        writeln!(
            out,
            "tbr_integral,{},{},{},{}",
            join_w(&w),
            t.benefit_integral,
            t.benefit_std_error,
            t.mc_draws
        )?;
        writeln!(
            out,
            "thr_integral,{},{},{},{}",
            join_w(&w),
            t.harm_integral,
            t.harm_std_error,
            t.mc_draws
        )?;
    }
    write_atomic(&args.out, &out)
}

/// Which rows the estimate command emits.
#[derive(Debug, Clone, Copy)]
enum Quantity {
    Point(MeasureKind),
    Upper(MeasureKind),
}

impl Quantity {
    fn label(self) -> String {
        match self {
            Quantity::Point(m) => m.as_str().to_string(),
            Quantity::Upper(m) => format!("{}_upper", m.as_str()),
        }
    }
}

struct Pipeline<'a> {
    run: &'a ResolvedRun,
    w: Vec<f64>,
    pair: Option<PolicyPairSpec<'a>>,
}

/// Policy text is re-parsed per dataset so the empirical policy resamples
/// the treatment values of each bootstrap replicate.
struct PolicyPairSpec<'a> {
    pi0: &'a str,
    pi1: &'a str,
}

struct PipelineValues {
    atomic: Option<FamilyEstimate>,
    stochastic: Option<FamilyEstimate>,
    atomic_bounds: Option<(BoundPair, BoundPair)>,
    stochastic_bounds: Option<(BoundPair, BoundPair)>,
    bandwidth: f64,
}

impl Pipeline<'_> {
    fn needs_atomic(&self) -> bool {
        self.run
            .measures
            .iter()
            .any(|m| matches!(m, MeasureKind::Cace | MeasureKind::PCace | MeasureKind::NCace))
    }

    fn needs_stochastic(&self) -> bool {
        self.run.measures.iter().any(|m| {
            matches!(
                m,
                MeasureKind::Cpice | MeasureKind::PCpice | MeasureKind::NCpice
            )
        })
    }

    fn kernel(&self, h: f64) -> Result<KernelSpec> {
        Ok(KernelSpec::new(self.run.kernel, h)
            .map_err(|e| anyhow!("{e}"))?
            .with_standardization(self.run.standardize))
    }

    /// Bandwidths to try: the selected one, then every larger candidate.
    fn ladder(&self, h: f64) -> Vec<f64> {
        let mut ladder: Vec<f64> = self
            .run
            .candidates
            .iter()
            .copied()
            .filter(|&c| c > h)
            .collect();
        ladder.sort_by(f64::total_cmp);
        ladder.insert(0, h);
        ladder
    }

    fn select_bandwidth(&self, data: &Dataset) -> Result<f64> {
        match self.run.bandwidth {
            Some(h) => Ok(h),
            None => Ok(select_bandwidth(
                data,
                self.run.kernel,
                &self.run.candidates,
                self.run.folds,
                derive_seed(self.run.seed, 0xbd),
            )?),
        }
    }

    /// Re-runs the selection with the same folds, returning the trace.
    fn bandwidth_trace(&self, data: &Dataset) -> Result<Vec<heteffect::bandwidth::CvTrace>> {
        let (_, trace) = heteffect::bandwidth::select_bandwidth_trace(
            data,
            self.run.kernel,
            &self.run.candidates,
            self.run.folds,
            derive_seed(self.run.seed, 0xbd),
        )?;
        Ok(trace)
    }

    /// Runs the full pipeline on a dataset. With `fixed_h` the bandwidth
    /// selection is skipped (bootstrap replicates hold it fixed by default)
    /// but escalation through larger candidates still applies.
    fn evaluate(&self, data: &Dataset, fixed_h: Option<f64>) -> Result<PipelineValues> {
        let h0 = match fixed_h {
            Some(h) => h,
            None => self.select_bandwidth(data)?,
        };
        let y_bounds = match self.run.y_bounds {
            Some(b) => b,
            None => data.infer_y_bounds(0.0)?,
        };
        let mc = McConfig::new(
            self.run.n1,
            self.run.n2,
            y_bounds,
            derive_seed(self.run.seed, 0x3c),
        )?;
        let pair = match &self.pair {
            Some(spec) => Some(parse_policy_pair(spec.pi0, spec.pi1, data)?),
            None => None,
        };

        let mut last_err: Option<anyhow::Error> = None;
        for h in self.ladder(h0) {
            let model = fit_cdf(data, self.kernel(h)?)?;
            match self.attempt(&model, &mc, pair.as_ref(), h) {
                Ok(values) => return Ok(values),
                Err(e) if is_no_local_data(&e) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_err.unwrap_or_else(|| anyhow!("no bandwidth candidate could evaluate")))
    }

    fn attempt(
        &self,
        model: &CdfModel,
        mc: &McConfig,
        pair: Option<&PolicyPair>,
        bandwidth: f64,
    ) -> Result<PipelineValues> {
        let atomic = if self.needs_atomic() {
            Some(estimate_cace_family(
                model, &self.w, self.run.x0, self.run.x1, mc,
            )?)
        } else {
            None
        };
        let stochastic = if self.needs_stochastic() {
            let pair = pair.ok_or_else(|| {
                anyhow!("stochastic measures require --pi0 and --pi1")
            })?;
            Some(estimate_cpice_family(model, &self.w, pair, mc)?)
        } else {
            None
        };
        let atomic_bounds = if self.run.bounds && atomic.is_some() {
            Some(bound_cace(
                model,
                &self.w,
                self.run.x0,
                self.run.x1,
                mc,
                self.run.upper_style,
            )?)
        } else {
            None
        };
        let stochastic_bounds = if self.run.bounds && stochastic.is_some() {
            let pair = pair.expect("checked above");
            Some(bound_cpice(
                model,
                &self.w,
                pair,
                mc,
                self.run.upper_style,
            )?)
        } else {
            None
        };
        Ok(PipelineValues {
            atomic,
            stochastic,
            atomic_bounds,
            stochastic_bounds,
            bandwidth,
        })
    }
}

fn is_no_local_data(err: &anyhow::Error) -> bool {
    err.downcast_ref::<Error>()
        .map(|e| matches!(e, Error::NoLocalData { .. }))
        .unwrap_or(false)
}

fn quantity_value(values: &PipelineValues, q: Quantity) -> Result<f64> {
    let missing = || anyhow!("measure not computed");
    Ok(match q {
        Quantity::Point(m) => {
            let fam = match m {
                MeasureKind::Cace | MeasureKind::PCace | MeasureKind::NCace => {
                    values.atomic.as_ref().ok_or_else(missing)?
                }
                _ => values.stochastic.as_ref().ok_or_else(missing)?,
            };
            match m {
                MeasureKind::Cace | MeasureKind::Cpice => fam.total,
                MeasureKind::PCace | MeasureKind::PCpice => fam.positive,
                MeasureKind::NCace | MeasureKind::NCpice => fam.negative,
            }
        }
        Quantity::Upper(m) => match m {
            MeasureKind::PCace => values.atomic_bounds.ok_or_else(missing)?.0.upper,
            MeasureKind::NCace => values.atomic_bounds.ok_or_else(missing)?.1.upper,
            MeasureKind::PCpice => values.stochastic_bounds.ok_or_else(missing)?.0.upper,
            MeasureKind::NCpice => values.stochastic_bounds.ok_or_else(missing)?.1.upper,
            MeasureKind::Cace | MeasureKind::Cpice => bail!("totals have no upper bound row"),
        },
    })
}

fn load_source(args: &EstimateArgs, run: &ResolvedRun) -> Result<(Dataset, String)> {
    match (&args.input, &args.scm) {
        (Some(path), None) => {
            let schema_path = args
                .schema
                .as_ref()
                .ok_or_else(|| anyhow!("--input requires --schema"))?;
            let text = std::fs::read_to_string(schema_path)
                .with_context(|| format!("reading schema {}", schema_path.display()))?;
            let schema = SchemaConfig::from_toml_str(&text)?;
            let data = load_csv(path, &schema)?;
            if data.dropped_rows() > 0 {
                eprintln!(
                    "warning: dropped {} rows with missing or unparsable cells",
                    data.dropped_rows()
                );
            }
            Ok((data, path.display().to_string()))
        }
        (None, Some(name)) => {
            let n = args.n.ok_or_else(|| anyhow!("--scm requires --n"))?;
            let scm = builtin(name)?;
            let data = scm.sample_observational(n, derive_seed(run.seed, 0x5a))?;
            Ok((data, format!("{name} (n={n})")))
        }
        _ => bail!("give exactly one data source: --input CSV or --scm NAME"),
    }
}

fn cmd_estimate(args: EstimateArgs, force_bounds: bool) -> Result<()> {
    let run = ResolvedRun::from_args(&args, force_bounds)?;
    let (full_data, source) = load_source(&args, &run)?;

    let data = match &run.stratum {
        Some(text) => {
            let filter = parse_stratum(text, &full_data)?;
            let stratum = full_data.filter_covariates(&filter)?;
            if stratum.n() == 0 {
                bail!("the stratum `{text}` matches no rows");
            }
            stratum
        }
        None => full_data.clone(),
    };

    let w = match &run.w {
        Some(w) => w.clone(),
        None => match &run.stratum {
            Some(text) => {
                let filter = parse_stratum(text, &full_data)?;
                stratum_point(&filter, &full_data).ok_or_else(|| {
                    anyhow!("--w is required unless the stratum pins every covariate")
                })?
            }
            None if data.dim() == 0 => Vec::new(),
            None => bail!("--w is required (no stratum pins the covariates)"),
        },
    };
    if w.len() != data.dim() {
        bail!("--w has {} values, the data has {} covariates", w.len(), data.dim());
    }

    let pair_spec = match (&run.pi0, &run.pi1) {
        (Some(pi0), Some(pi1)) => Some(PolicyPairSpec { pi0, pi1 }),
        (None, None) => None,
        _ => bail!("--pi0 and --pi1 must be given together"),
    };
    let pipeline = Pipeline {
        run: &run,
        w: w.clone(),
        pair: pair_spec,
    };
    if pipeline.needs_stochastic() && pipeline.pair.is_none() {
        bail!("stochastic measures requested without --pi0/--pi1");
    }

    let point = pipeline.evaluate(&data, None)?;

    if let Some(trace_path) = &args.bandwidth_trace {
        let mut trace_out = String::from("bandwidth,cv_score,failed_evals\n");
        for t in pipeline.bandwidth_trace(&data)? {
            writeln!(trace_out, "{},{},{}", t.bandwidth, t.score, t.failed_evals)?;
        }
        write_atomic(trace_path, &trace_out)?;
    }

    let mut quantities: Vec<Quantity> =
        run.measures.iter().map(|&m| Quantity::Point(m)).collect();
    if run.bounds {
        for &m in &run.measures {
            if !matches!(m, MeasureKind::Cace | MeasureKind::Cpice) {
                quantities.push(Quantity::Upper(m));
            }
        }
    }

    let mut out = String::new();
    writeln!(out, "{}", run.comment_header(&source))?;
    writeln!(out, "# rows = {}; bandwidth = {}", data.n(), point.bandwidth)?;
    writeln!(out, "{}", MeasureReport::csv_header())?;

    for (idx, &q) in quantities.iter().enumerate() {
        let value = quantity_value(&point, q)?;
        let (lower, upper) = match q {
            Quantity::Point(MeasureKind::PCace) => point
                .atomic_bounds
                .map(|(p, _)| (Some(p.lower), Some(p.upper)))
                .unwrap_or((None, None)),
            Quantity::Point(MeasureKind::NCace) => point
                .atomic_bounds
                .map(|(_, n)| (Some(n.lower), Some(n.upper)))
                .unwrap_or((None, None)),
            Quantity::Point(MeasureKind::PCpice) => point
                .stochastic_bounds
                .map(|(p, _)| (Some(p.lower), Some(p.upper)))
                .unwrap_or((None, None)),
            Quantity::Point(MeasureKind::NCpice) => point
                .stochastic_bounds
                .map(|(_, n)| (Some(n.lower), Some(n.upper)))
                .unwrap_or((None, None)),
            _ => (None, None),
        };

        let report = if run.bootstrap > 0 {
            let fixed_h = if run.reselect_h {
                None
            } else {
                Some(point.bandwidth)
            };
            let boot = bootstrap(
                &data,
                run.bootstrap,
                derive_seed(run.seed, 0x100 + idx as u64),
                |resampled| {
                    let values = pipeline
                        .evaluate(resampled, fixed_h)
                        .map_err(|e| Error::Invalid(e.to_string()))?;
                    quantity_value(&values, q).map_err(|e| Error::Invalid(e.to_string()))
                },
            )?;
            MeasureReport {
                measure: q.label(),
                w_label: join_w(&w),
                point: value,
                lower_bound: lower,
                upper_bound: upper,
                boot_mean: boot.mean,
                ci_low: boot.ci_low,
                ci_high: boot.ci_high,
                replicates: boot.effective,
                seed: run.seed,
            }
        } else {
            MeasureReport {
                measure: q.label(),
                w_label: join_w(&w),
                point: value,
                lower_bound: lower,
                upper_bound: upper,
                boot_mean: value,
                ci_low: value,
                ci_high: value,
                replicates: 0,
                seed: run.seed,
            }
        };
        writeln!(out, "{}", report.to_csv_row())?;
    }

    write_atomic(&args.out, &out)
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let scm = builtin(&args.scm)?;
    if scm.covariate_dim != 1 {
        bail!("sweep requires a one-covariate SCM, `{}` has {}", args.scm, scm.covariate_dim);
    }
    let grid = parse_grid(&args.w_grid)?;
    let mut out = String::new();
    writeln!(out, "# scm = {}", args.scm)?;
    writeln!(out, "# grid = {}", args.w_grid)?;
    writeln!(out, "# mode = {}", args.mode)?;
    writeln!(out, "# arms = {},{}", args.x0, args.x1)?;
    writeln!(out, "# seed = {}", args.seed)?;

    match (args.mode.as_str(), args.tail_integrals) {
        ("oracle", true) => {
            writeln!(out, "w,tbr_integral,thr_integral")?;
            for (i, &w) in grid.iter().enumerate() {
                let t = oracle_thr_tbr_integrals(
                    &scm,
                    &[w],
                    args.c_max,
                    args.mc,
                    1000,
                    derive_seed(args.seed, i as u64),
                )?;
                writeln!(out, "{w},{},{}", t.benefit_integral, t.harm_integral)?;
            }
        }
        ("oracle", false) => {
            writeln!(out, "w,cace,p_cace,n_cace")?;
            for (i, &w) in grid.iter().enumerate() {
                let parts = oracle_cace_parts(
                    &scm,
                    &[w],
                    args.x0,
                    args.x1,
                    args.mc,
                    derive_seed(args.seed, i as u64),
                );
                writeln!(
                    out,
                    "{w},{},{},{}",
                    parts.total.value, parts.positive.value, parts.negative.value
                )?;
            }
        }
        ("estimate", false) => {
            let data = scm.sample_observational(args.n, derive_seed(args.seed, 0x5a))?;
            let candidates = match &args.candidates {
                Some(text) => crate::config::parse_f64_list(text)?,
                None => heteffect::bandwidth::DEFAULT_CANDIDATES.to_vec(),
            };
            let h = select_bandwidth(
                &data,
                heteffect::cdf::KernelFamily::Epanechnikov,
                &candidates,
                args.folds,
                derive_seed(args.seed, 0xbd),
            )?;
            let y_bounds = data.infer_y_bounds(0.0)?;
            writeln!(out, "# bandwidth = {h}")?;
            writeln!(out, "w,cace,p_cace,n_cace")?;
            let mut ladder: Vec<f64> =
                candidates.iter().copied().filter(|&c| c > h).collect();
            ladder.sort_by(f64::total_cmp);
            ladder.insert(0, h);
            for &w in &grid {
                let mc = McConfig::new(1, args.n2, y_bounds, derive_seed(args.seed, 0x3c))?;
                let mut result = None;
                let mut last: Option<heteffect::Error> = None;
                for &hh in &ladder {
                    let model = fit_cdf(
                        &data,
                        KernelSpec::new(heteffect::cdf::KernelFamily::Epanechnikov, hh)
                            .map_err(|e| anyhow!("{e}"))?,
                    )?;
                    match estimate_cace_family(&model, &[w], args.x0, args.x1, &mc) {
                        Ok(fam) => {
                            result = Some(fam);
                            break;
                        }
                        Err(e @ Error::NoLocalData { .. }) => last = Some(e),
                        Err(e) => return Err(e.into()),
                    }
                }
                let fam = result.ok_or_else(|| {
                    anyhow!("no bandwidth candidate evaluates at w={w}: {:?}", last)
                })?;
                writeln!(out, "{w},{},{},{}", fam.total, fam.positive, fam.negative)?;
            }
        }
        ("estimate", true) => bail!("--tail-integrals is oracle-only"),
        (mode, _) => bail!("unknown sweep mode `{mode}`"),
    }
    write_atomic(&args.out, &out)
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<()> {
    let mut cfg = match args.table.as_str() {
        "main" => StudyConfig::table_main(args.seed),
        "violated" => StudyConfig::table_violated(args.seed),
        other => bail!("unknown table `{other}` (use `main` or `violated`)"),
    };
    cfg.simulations = args.sims;
    cfg.sizes = args
        .sizes
        .split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("size `{t}`")))
        .collect::<Result<_>>()?;
    if let Some(style) = &args.upper_style {
        cfg.upper_style = style.parse().map_err(|e| anyhow!("{e}"))?;
    }

    let out_study = run_study(&cfg)?;
    let mut out = String::new();
    writeln!(out, "# table = {}", args.table)?;
    writeln!(out, "# scm = {}", cfg.scm_name)?;
    writeln!(out, "# simulations = {}", cfg.simulations)?;
    writeln!(out, "# upper_style = {:?}", cfg.upper_style)?;
    writeln!(out, "# seed = {}", args.seed)?;
    if out_study.failures > 0 {
        writeln!(out, "# dropped_simulations = {}", out_study.failures)?;
    }
    writeln!(out, "measure,n,mean,band_low,band_high,truth")?;
    for cell in &out_study.cells {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            cell.label,
            cell.n,
            cell.mean,
            cell.band_low,
            cell.band_high,
            cell.truth.map(|t| t.to_string()).unwrap_or_default()
        )?;
    }
    write_atomic(&args.out, &out)
}
