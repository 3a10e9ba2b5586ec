use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ltebounds::diagnostics::AmplificationReport;
use ltebounds::estimation::plug_in_from_moments;
use ltebounds::{
    amplification_report, empirical_moments, luc_trivial_mean_check, manski_formula_bounds, misspecification_distance,
    oracle_compare, solve_bounds, AssumptionSpec, BoundsResult, Direction, Interval, ProblemMoments, Scope,
    SolveStatus, SolverConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::files::{read_custom, read_dgp, read_moments};
use crate::report::{
    bounds_json, bounds_text, caveats, fmt_interval, fmt_num, interval_json, render, scope_label, status_label,
    Format, LOCAL_SEARCH_CAVEAT,
};
use crate::samples::{load_samples, write_samples, BinMode, DiscretizationSpec, LoadedSamples};

#[derive(Debug, Parser)]
#[command(name = "ltebounds", version)]
#[command(about = "Sharp bounds on long-term treatment effects from experimental and observational data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Population bounds from a moments file
    Bounds {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Plug-in bounds from observational and experimental samples
    Estimate(EstimateArgs),
    /// Worst-case formulas and what each data source contributes
    Diagnose {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Reference effect for misspecification distances
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<f64>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Certify solver bounds against lattice enumeration (k <= 4)
    Oracle {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 400)]
        resolution: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Draw synthetic samples from a process file
    Simulate {
        #[arg(long)]
        dgp: PathBuf,
        /// Observational records
        #[arg(long)]
        n: usize,
        /// Experimental records; defaults to `n`
        #[arg(long)]
        n_exp: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for observational.csv and experimental.csv
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    #[default]
    Combined,
    #[value(alias = "observational-only")]
    Observational,
}

impl From<ScopeArg> for Scope {
    fn from(s: ScopeArg) -> Scope {
        match s {
            ScopeArg::Combined => Scope::Combined,
            ScopeArg::Observational => Scope::ObservationalOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    #[default]
    Increasing,
    Decreasing,
}

#[derive(Debug, Args)]
pub struct AssumptionArgs {
    /// worst-case, liv, liv-decreasing, ti, liv-ti, liv-ti-decreasing, luc or custom
    #[arg(long)]
    pub assumption: String,
    /// Linear restrictions for `--assumption custom`
    #[arg(long)]
    pub custom: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub scope: ScopeArg,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub moments: PathBuf,
    #[command(flatten)]
    pub assumption: AssumptionArgs,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 32)]
    pub multistarts: usize,
    #[arg(long, default_value_t = 20)]
    pub grid_refinements: usize,
    #[arg(long, default_value_t = 0.25)]
    pub step_init: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_obj: f64,
    /// Seed for random multistarts
    #[arg(long, default_value_t = 1729)]
    pub solver_seed: u64,
}

impl SolverArgs {
    fn config(&self, scope: Scope) -> SolverConfig {
        SolverConfig {
            multistarts: self.multistarts,
            grid_refinements: self.grid_refinements,
            step_init: self.step_init,
            tol_obj: self.tol_obj,
            seed: self.solver_seed,
            scope,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub obs: PathBuf,
    #[arg(long)]
    pub exp: PathBuf,
    #[command(flatten)]
    pub assumption: AssumptionArgs,
    /// Interior bin edges for the short-term outcome
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "quantiles")]
    pub edges: Option<Vec<f64>>,
    /// Number of pooled-quantile bins for the short-term outcome
    #[arg(long)]
    pub quantiles: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub order: OrderArg,
    /// Covariate columns defining strata
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// CSV of stratum weights: the covariate columns and `weight`
    #[arg(long, requires = "covariates")]
    pub weights: Option<PathBuf>,
    /// Outcome range LOW,HIGH; defaults to the observed range
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y_range: Option<Vec<f64>>,
    /// Clip outcomes outside the range instead of rejecting them
    #[arg(long)]
    pub clip: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

/// Rendered output and the exit code it implies.
#[derive(Debug)]
pub struct Outcome {
    pub output: String,
    pub code: i32,
}

pub fn parse_assumption(name: &str, custom: Option<&Path>, k: usize) -> Result<AssumptionSpec> {
    let a = match name.trim().to_ascii_lowercase().as_str() {
        "worst-case" | "wc" | "none" => AssumptionSpec::WorstCase,
        "liv" => AssumptionSpec::Liv { direction: Direction::Increasing },
        "liv-decreasing" => AssumptionSpec::Liv { direction: Direction::Decreasing },
        "ti" => AssumptionSpec::Ti,
        "liv-ti" => AssumptionSpec::LivAndTi { direction: Direction::Increasing },
        "liv-ti-decreasing" => AssumptionSpec::LivAndTi { direction: Direction::Decreasing },
        "luc" => AssumptionSpec::Luc,
        "custom" => {
            let path = custom.ok_or_else(|| CliError::Domain("--assumption custom needs --custom FILE".into()))?;
            return read_custom(path, k);
        }
        other => return Err(CliError::Domain(format!("unknown assumption '{other}'"))),
    };
    if custom.is_some() {
        log::warn!("--custom is ignored for --assumption {name}");
    }
    Ok(a)
}

fn infeasible_code(r: &BoundsResult) -> i32 {
    if r.is_infeasible() {
        2
    } else {
        0
    }
}

fn load_problem(p: &ProblemArgs) -> Result<(ProblemMoments, AssumptionSpec)> {
    let pm = read_moments(&p.moments)?;
    let a = parse_assumption(&p.assumption.assumption, p.assumption.custom.as_deref(), pm.k())?;
    Ok((pm, a))
}

fn bounds(problem: &ProblemArgs, solver: &SolverArgs, format: Format) -> Result<Outcome> {
    let (pm, a) = load_problem(problem)?;
    let r = solve_bounds(&pm, &a, &solver.config(problem.assumption.scope.into()))?;
    Ok(Outcome {
        output: render(format, "bounds", &bounds_text(&r), bounds_json(&r), &caveats(&r), &[]),
        code: infeasible_code(&r),
    })
}

fn involves_invariance(a: &AssumptionSpec) -> bool {
    matches!(a, AssumptionSpec::Luc | AssumptionSpec::Ti | AssumptionSpec::LivAndTi { .. })
}

fn discretization_note(samples: &LoadedSamples, a: &AssumptionSpec) -> Option<String> {
    (samples.discretization.coarsens && involves_invariance(a)).then(|| {
        format!(
            "the short-term outcome was discretized; {} is imposed on the discretized outcome, \
             which the same assumption on the original outcome does not imply",
            a.name()
        )
    })
}

fn read_weights(path: &Path, covariates: &[String]) -> Result<BTreeMap<Vec<String>, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::parse(path, None, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| CliError::parse(path, Some(1), e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::schema(path, format!("missing column '{name}'")))
    };
    let cols: Vec<usize> = covariates.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let wcol = find("weight")?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::parse(path, e.position().map(|p| p.line()), e.to_string()))?;
        let line = rec.position().map(|p| p.line());
        let key: Vec<String> = cols.iter().map(|&i| rec.get(i).unwrap_or("").to_string()).collect();
        let raw = rec.get(wcol).unwrap_or("");
        let w: f64 = raw
            .parse()
            .map_err(|_| CliError::parse(path, line, format!("weight '{raw}' is not a number")))?;
        if !(w >= 0.0) || !w.is_finite() {
            return Err(CliError::schema(path, format!("weight {w} must be nonnegative")));
        }
        if out.insert(key.clone(), w).is_some() {
            return Err(CliError::schema(path, format!("duplicate weight for stratum {key:?}")));
        }
    }
    Ok(out)
}

fn stratum_label(key: &[String], covariates: &[String]) -> String {
    covariates.iter().zip(key).map(|(c, v)| format!("{c}={v}")).collect::<Vec<_>>().join(", ")
}

struct Stratum {
    key: Vec<String>,
    weight: f64,
    result: BoundsResult,
}

fn estimate(args: &EstimateArgs) -> Result<Outcome> {
    let mode = match (&args.edges, args.quantiles) {
        (Some(edges), _) => BinMode::Edges(edges.clone()),
        (None, Some(q)) => BinMode::Quantile(q),
        (None, None) => BinMode::Identity,
    };
    let order = match args.order {
        OrderArg::Increasing => Direction::Increasing,
        OrderArg::Decreasing => Direction::Decreasing,
    };
    let y_range = match args.y_range.as_deref() {
        None => None,
        Some(&[lo, hi]) => Some((lo, hi)),
        Some(_) => return Err(CliError::Domain("--y-range takes exactly LOW,HIGH".into())),
    };
    let samples = load_samples(&args.obs, &args.exp, &DiscretizationSpec { mode, order }, &args.covariates, y_range)?;
    let a = parse_assumption(&args.assumption.assumption, args.assumption.custom.as_deref(), samples.support.k)?;
    let scope: Scope = args.assumption.scope.into();
    let cfg = args.solver.config(scope);

    let total = samples.total_observational() as f64;
    let weights: BTreeMap<Vec<String>, f64> = match &args.weights {
        Some(path) => {
            let given = read_weights(path, &args.covariates)?;
            let mut w = BTreeMap::new();
            for key in samples.cells.keys() {
                let v = given.get(key).copied().ok_or_else(|| {
                    CliError::schema(path, format!("no weight for stratum {}", stratum_label(key, &args.covariates)))
                })?;
                w.insert(key.clone(), v);
            }
            let sum: f64 = w.values().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CliError::schema(path, format!("weights of the observed strata sum to {sum}, not 1")));
            }
            w
        }
        None => samples.cells.iter().map(|(k, c)| (k.clone(), c.obs.len() as f64 / total)).collect(),
    };

    let runs: Vec<Result<Stratum>> = samples
        .cells
        .par_iter()
        .map(|(key, cell)| {
            if cell.exp.is_empty() && scope == Scope::Combined {
                log::warn!(
                    "stratum {} has no experimental records; its bounds use observational moments only",
                    stratum_label(key, &args.covariates)
                );
            }
            let pm = empirical_moments(&cell.obs, &cell.exp, &samples.support, args.clip)?;
            let result = plug_in_from_moments(&pm, &a, &cfg)?;
            Ok(Stratum { key: key.clone(), weight: weights[key], result })
        })
        .collect();
    let strata: Vec<Stratum> = runs.into_iter().collect::<Result<_>>()?;

    let mut notes = Vec::new();
    notes.extend(discretization_note(&samples, &a));
    let d = &samples.discretization;
    let disc_json = json!({
        "k": d.k,
        "edges": d.edges,
        "order": match d.order { Direction::Increasing => "increasing", Direction::Decreasing => "decreasing" },
        "instrument_labels": samples.z_labels,
    });
    let disc_text = if d.edges.is_empty() {
        format!("support: k = {}", d.k)
    } else {
        format!(
            "support: k = {} bins, edges ({}), {} order",
            d.k,
            d.edges.iter().map(|e| fmt_num(*e)).collect::<Vec<_>>().join(", "),
            if d.order == Direction::Increasing { "increasing" } else { "decreasing" }
        )
    };

    if args.covariates.is_empty() {
        let r = &strata[0].result;
        let mut body = bounds_json(r);
        body["discretization"] = disc_json;
        let text = format!("{}\n{disc_text}", bounds_text(r));
        return Ok(Outcome {
            output: render(args.format, "estimate", &text, body, &caveats(r), &notes),
            code: infeasible_code(r),
        });
    }

    let any_infeasible = strata.iter().any(|s| s.result.is_infeasible());
    let interval = if any_infeasible {
        Interval::empty()
    } else {
        Interval::new(
            strata.iter().map(|s| s.weight * s.result.interval.lo).sum(),
            strata.iter().map(|s| s.weight * s.result.interval.hi).sum(),
        )
    };
    let mut cav: Vec<String> = Vec::new();
    for s in &strata {
        for c in caveats(&s.result) {
            let c = if c == LOCAL_SEARCH_CAVEAT {
                c
            } else {
                format!("{}: {c}", stratum_label(&s.key, &args.covariates))
            };
            if !cav.contains(&c) {
                cav.push(c);
            }
        }
    }
    let mut lines = vec![
        format!("bounds: {}", fmt_interval(&interval)),
        format!("aggregation: weighted endpoint sums over {} strata", strata.len()),
        format!("assumption: {}", a.name()),
        format!("scope: {}", scope_label(scope)),
        disc_text,
    ];
    for s in &strata {
        lines.push(format!(
            "stratum {} (weight {}): {} [{}]",
            stratum_label(&s.key, &args.covariates),
            fmt_num(s.weight),
            fmt_interval(&s.result.interval),
            status_label(s.result.status)
        ));
    }
    let cells: Vec<Value> = strata
        .iter()
        .map(|s| {
            let covs: BTreeMap<&String, &String> = args.covariates.iter().zip(&s.key).collect();
            json!({ "covariates": covs, "weight": s.weight, "bounds": bounds_json(&s.result) })
        })
        .collect();
    let body = json!({
        "interval": interval_json(&interval),
        "assumption": a.name(),
        "scope": scope_label(scope),
        "status": if any_infeasible { "infeasible" } else { "aggregated" },
        "strata": cells,
        "discretization": disc_json,
    });
    Ok(Outcome {
        output: render(args.format, "estimate", &lines.join("\n"), body, &cav, &notes),
        code: if any_infeasible { 2 } else { 0 },
    })
}

fn nesting_line(name: &str, combined: &BoundsResult, observational: &BoundsResult) -> String {
    let (c, o) = (&combined.interval, &observational.interval);
    if c.is_empty() || o.is_empty() {
        return format!("{name}: identified set is empty in at least one scope");
    }
    if (c.lo - o.lo).abs() <= 1e-9 && (c.hi - o.hi).abs() <= 1e-9 {
        format!("{name}: combined = observational-only")
    } else if o.width() > 0.0 {
        format!("{name}: combined inside observational-only, width ratio {:.6}", c.width() / o.width())
    } else {
        format!("{name}: combined inside observational-only")
    }
}

fn diagnose(problem: &ProblemArgs, tau: Option<f64>, solver: &SolverArgs, format: Format) -> Result<Outcome> {
    let (pm, a) = load_problem(problem)?;
    let cfg = solver.config(Scope::Combined);
    let formula = manski_formula_bounds(&pm.obs);
    let rep: AmplificationReport = amplification_report(&pm, &a, &cfg)?;
    let scale = pm.support.y_range();
    let mean_check = luc_trivial_mean_check(&pm.obs, 1e-9);

    let name = a.name();
    let mut lines = vec![
        format!("assumption: {name}"),
        format!(
            "worst-case formula: {} (swapped probability terms: {})",
            fmt_interval(&formula.derived.scale(scale)),
            fmt_interval(&formula.swapped.scale(scale))
        ),
        format!("formula note: {}", formula.note()),
        format!("worst-case, observational-only: {}", fmt_interval(&rep.worst_observational.interval)),
        format!("worst-case, combined: {}", fmt_interval(&rep.worst_combined.interval)),
    ];
    if a != AssumptionSpec::WorstCase {
        lines.push(format!("{name}, observational-only: {}", fmt_interval(&rep.assumed_observational.interval)));
        lines.push(format!("{name}, combined: {}", fmt_interval(&rep.assumed_combined.interval)));
    }
    lines.push(nesting_line("worst-case", &rep.worst_combined, &rep.worst_observational));
    if a != AssumptionSpec::WorstCase {
        lines.push(nesting_line(&name, &rep.assumed_combined, &rep.assumed_observational));
    }
    lines.push(format!("nesting: {}", if rep.nesting_ok { "ok" } else { "VIOLATED" }));
    lines.push(format!("amplification: {}", if rep.amplification { "yes" } else { "no" }));
    lines.push(match (mean_check.holds, mean_check.tau) {
        (true, Some(t)) => format!(
            "constant observed means: yes; latent unconfoundedness gives the effect {} without the experiment",
            fmt_num(t * scale)
        ),
        (true, None) => "constant observed means: yes".into(),
        (false, _) => "constant observed means: no".into(),
    });
    let mut distances = Value::Null;
    if let Some(t) = tau {
        let t_norm = t / scale;
        let d = |r: &BoundsResult| misspecification_distance(&r.normalized, t_norm).ok().map(|x| x * scale);
        let (dobs, dc) = (d(&rep.assumed_observational), d(&rep.assumed_combined));
        let show = |x: Option<f64>| x.map(fmt_num).unwrap_or_else(|| "undefined".into());
        lines.push(format!(
            "distance to tau = {}: observational-only {}, combined {}",
            fmt_num(t),
            show(dobs),
            show(dc)
        ));
        distances = json!({ "tau": t, "observational_only": dobs, "combined": dc });
    }

    let mut cav = Vec::new();
    for r in [&rep.worst_observational, &rep.worst_combined, &rep.assumed_observational, &rep.assumed_combined] {
        for c in caveats(r) {
            if !cav.contains(&c) {
                cav.push(c);
            }
        }
    }
    let body = json!({
        "assumption": name,
        "formula": {
            "derived": interval_json(&formula.derived.scale(scale)),
            "swapped": interval_json(&formula.swapped.scale(scale)),
            "contains_zero": formula.contains_zero,
            "note": formula.note(),
        },
        "worst_observational": bounds_json(&rep.worst_observational),
        "worst_combined": bounds_json(&rep.worst_combined),
        "assumed_observational": bounds_json(&rep.assumed_observational),
        "assumed_combined": bounds_json(&rep.assumed_combined),
        "nesting_ok": rep.nesting_ok,
        "experiment_neutral_without_assumption": rep.experiment_neutral_without_assumption,
        "amplification": rep.amplification,
        "width_ratio": rep.width_ratio,
        "constant_means": { "holds": mean_check.holds, "tau": mean_check.tau.map(|t| t * scale) },
        "misspecification": distances,
    });
    let code = infeasible_code(&rep.assumed_combined);
    Ok(Outcome { output: render(format, "diagnose", &lines.join("\n"), body, &cav, &[]), code })
}

fn oracle(problem: &ProblemArgs, resolution: usize, solver: &SolverArgs, format: Format) -> Result<Outcome> {
    let (pm, a) = load_problem(problem)?;
    let r = oracle_compare(&pm, &a, &solver.config(problem.assumption.scope.into()), resolution)?;
    let text = [
        format!("assumption: {}", r.assumption),
        format!("scope: {}", scope_label(r.solver.scope)),
        format!("resolution: {resolution}"),
        format!("solver: {} ({})", fmt_interval(&r.solver.normalized), status_label(r.solver.status)),
        format!(
            "lattice: {} over {} points, largest gap between attained values {:.3e}",
            fmt_interval(&r.oracle.interval),
            r.oracle.lattice_points,
            r.oracle.max_gap
        ),
        format!("endpoint gaps: lower {:.3e}, upper {:.3e} (tolerance {:.3e})", r.gap_lo, r.gap_hi, r.tolerance),
        format!("lattice density: {}", if r.density_ok { "ok" } else { "too coarse" }),
        format!("verdict: {}", r.verdict()),
    ]
    .join("\n");
    let body = json!({
        "assumption": r.assumption,
        "scope": scope_label(r.solver.scope),
        "resolution": resolution,
        "solver": bounds_json(&r.solver),
        "oracle": {
            "interval": interval_json(&r.oracle.interval),
            "lattice_points": r.oracle.lattice_points.to_string(),
            "max_gap": r.oracle.max_gap,
        },
        "gap_lo": r.gap_lo,
        "gap_hi": r.gap_hi,
        "tolerance": r.tolerance,
        "density_ok": r.density_ok,
        "verdict": r.verdict(),
    });
    let code = if r.solver.status == SolveStatus::Infeasible {
        2
    } else if r.pass {
        0
    } else {
        1
    };
    Ok(Outcome { output: render(format, "oracle", &text, body, &[], &[]), code })
}

fn simulate(dgp_path: &Path, n: usize, n_exp: Option<usize>, seed: u64, out: &Path, format: Format) -> Result<Outcome> {
    let dgp = read_dgp(dgp_path)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obs = dgp.sample_observational(n, &mut rng);
    let exp = dgp.sample_experimental(n_exp.unwrap_or(n), &mut rng);
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let (obs_path, exp_path) = write_samples(out, &obs, &exp)?;
    let text = [
        format!("observational: {} records -> {}", obs.len(), obs_path.display()),
        format!("experimental: {} records -> {}", exp.len(), exp_path.display()),
        format!("true effect: {}", fmt_num(dgp.tau())),
    ]
    .join("\n");
    let body = json!({
        "observational": { "path": obs_path, "records": obs.len() },
        "experimental": { "path": exp_path, "records": exp.len() },
        "tau": dgp.tau(),
        "seed": seed,
    });
    Ok(Outcome { output: render(format, "simulate", &text, body, &[], &[]), code: 0 })
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Bounds { problem, solver, format } => bounds(problem, solver, *format),
        Command::Estimate(args) => estimate(args),
        Command::Diagnose { problem, tau, solver, format } => diagnose(problem, *tau, solver, *format),
        Command::Oracle { problem, resolution, solver, format } => oracle(problem, *resolution, solver, *format),
        Command::Simulate { dgp, n, n_exp, seed, out, format } => simulate(dgp, *n, *n_exp, *seed, out, *format),
    }
}

/// Runs a parsed command, writing the report to `out` and errors to stderr.
pub fn run(cli: &Cli, out: &mut dyn Write) -> i32 {
    match execute(cli) {
        Ok(o) => {
            if let Err(e) = out.write_all(o.output.as_bytes()) {
                eprintln!("error: {e}");
                return 1;
            }
            o.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
