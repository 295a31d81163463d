//! The `sparsephase` command line: batch Monte Carlo runs, analyses of
//! record and z-score files, oracle cross-checks and plot-data export.
//!
//! Every command writes its tables to a caller-supplied writer so it can be
//! driven from tests as well as from the binary. Defaults may come from a
//! `key = value` file given with `--config`; each key names a long flag of
//! the chosen subcommand and flags on the command line take precedence.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::ensembles::{sample_matrix, Suite};
use crate::experiment::{
    merge_records, n_grid, read_records, run_slice, write_records, TrialRecord,
};
use crate::inference::{
    compare_suites, displaced_ld50_model, fit_group_shifts, fit_mean_shift, format_zscores,
    hc_counts, mean_shift_anova, parse_zscores, pp_plot_data, scaling_exponent_fit, ShiftKind,
    ShiftScaling, ZMethod, ZScoreRecord, GAMMA_GRID,
};
use crate::lp::solve_standard;
use crate::oracle::{
    exact_spark, face_recovery_check, lp_enumeration_optimum, random_bounded_lp, spark_plus,
    PolytopeKind, SolutionHook, DEFAULT_BUDGET,
};
use crate::phase::{
    extrapolate_reference, glm_fit_slice, load_reference_curve, slices_from_records, summarize,
    width_scaling_table, ReferenceCurve, TransitionSummary,
};
use crate::rng::CounterRng;
use crate::stats::glm::LinkKind;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Comma-separated list flag value.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<T>().map_err(|e| format!("`{t}`: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .and_then(|v| {
                if v.is_empty() {
                    Err("empty list".to_string())
                } else {
                    Ok(List(v))
                }
            })
    }
}

/// `lo:hi:steps` equally spaced δ values, or a single δ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaGrid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl FromStr for DeltaGrid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let real = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let grid = match parts.as_slice() {
            [d] => DeltaGrid {
                lo: real(d)?,
                hi: real(d)?,
                steps: 1,
            },
            [lo, hi, steps] => DeltaGrid {
                lo: real(lo)?,
                hi: real(hi)?,
                steps: steps.trim().parse().map_err(|e| format!("`{steps}`: {e}"))?,
            },
            _ => return Err(format!("expected lo:hi:steps or a single delta, got `{s}`")),
        };
        if !(grid.lo > 0.0 && grid.lo <= grid.hi && grid.hi < 1.0) || grid.steps == 0 {
            return Err(format!("delta grid `{s}` must satisfy 0 < lo <= hi < 1 and steps >= 1"));
        }
        Ok(grid)
    }
}

#[derive(Parser, Debug)]
#[command(name = "sparsephase", version, about = "Phase transitions of sparse recovery by linear programming")]
pub struct Cli {
    /// File of `key = value` defaults for the chosen subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Locate each transition and run Monte Carlo trials across it.
    #[command(args_override_self = true)]
    Run(RunArgs),
    /// Build an empirical reference curve by extrapolating LD50 in 1/N.
    #[command(args_override_self = true)]
    Reference(ReferenceArgs),
    /// Tables computed from record or z-score files.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Cross-check solvers against exhaustive oracles on small instances.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// Write level-curve, heatmap and PP-plot CSV files.
    #[command(args_override_self = true)]
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Suite codes, e.g. `1,2`.
    #[arg(long)]
    pub suites: List<u32>,
    /// Problem sizes N.
    #[arg(long = "N", value_name = "N")]
    pub big_ns: List<usize>,
    /// δ grid `lo:hi:steps`.
    #[arg(long)]
    pub deltas: DeltaGrid,
    /// Trials per cell.
    #[arg(long = "M", value_name = "M", default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Record file; existing slices in it are kept and skipped.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Trials per probe while locating the transition.
    #[arg(long = "pilot-M", value_name = "M", default_value_t = 40)]
    pub pilot_trials: u64,
}

#[derive(Args, Debug, Clone)]
pub struct ReferenceArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Output curve file.
    #[arg(long = "curve")]
    pub curve: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Analyze {
    /// LD50, width and reference gap per slice.
    #[command(args_override_self = true)]
    Ld50(RecordInput),
    /// √N-scaled widths and median N^γ-scaled reference gaps.
    #[command(args_override_self = true)]
    Width(WidthArgs),
    /// Two-sample z-scores against a baseline record file.
    #[command(args_override_self = true)]
    Zscores(ZscoreArgs),
    /// Binomial GLM fits per slice.
    #[command(args_override_self = true)]
    Glm(GlmArgs),
    /// Mean-shift regressions and their nested F-test.
    #[command(args_override_self = true)]
    Meanshift(MeanshiftArgs),
    /// Per-group shifts and the scaling-exponent grid.
    #[command(args_override_self = true)]
    Scaling(ZInput),
    /// Counts of |z| below thresholds against their null expectation.
    #[command(args_override_self = true)]
    Hc(HcArgs),
    /// Displaced-LD50 model fitted per slice.
    #[command(args_override_self = true)]
    Displaced(DisplacedArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RecordInput {
    /// Record files (`E N n k M S`).
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Reference curve (`delta rhoT rhoC`).
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct WidthArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ZscoreArgs {
    /// Alternative-suite record files.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Baseline record file.
    #[arg(long)]
    pub baseline: PathBuf,
    /// Baseline suite code; by default the Gaussian suite of matching sign.
    #[arg(long = "baseline-suite")]
    pub baseline_suite: Option<u32>,
    /// Use the unpooled variance estimate.
    #[arg(long)]
    pub unpooled: bool,
    /// Z-score export; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// PP-plot points; defaults to the export path with `.pp.csv`.
    #[arg(long)]
    pub pp: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct GlmArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Link functions to fit.
    #[arg(long, default_value = "logit,probit,cauchit")]
    pub link: List<LinkKind>,
}

#[derive(Args, Debug, Clone)]
pub struct ZInput {
    /// Z-score exports.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MeanshiftArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Add the hinge term at δ = ½.
    #[arg(long)]
    pub hinged: bool,
}

#[derive(Args, Debug, Clone)]
pub struct HcArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "1,2,3")]
    pub thresholds: List<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct DisplacedArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Width model `w = coef/√N`.
    #[arg(long = "width-coef", default_value_t = 0.65)]
    pub width_coef: f64,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long = "N", value_name = "N", default_value_t = 8)]
    pub big_n: usize,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Face dimensions to check.
    #[arg(long, default_value = "0,1,2")]
    pub k: List<usize>,
    /// Matrix suite code.
    #[arg(long, default_value_t = 2)]
    pub suite: u32,
    #[arg(long, default_value_t = 3)]
    pub matrices: usize,
    /// Faces drawn per matrix and dimension.
    #[arg(long, default_value_t = 400)]
    pub draws: u64,
    /// Random LPs compared with basis enumeration.
    #[arg(long, default_value_t = 200)]
    pub lps: usize,
    /// Maximum number of column subsets any oracle may enumerate.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Tolerance for the Monte Carlo comparison, in standard deviations.
    #[arg(long, default_value_t = 4.0)]
    pub sds: f64,
    /// Corrupt solver output before checking (exercises the failure path).
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ReportArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Baseline records; enables the PP-plot file.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

/// Validated parameters of a batch run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub suites: Vec<u32>,
    pub big_ns: Vec<usize>,
    pub deltas: DeltaGrid,
    pub trials: u64,
    pub master_seed: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub pilot_trials: u64,
}

impl From<&RunArgs> for RunConfig {
    fn from(a: &RunArgs) -> Self {
        Self {
            suites: a.suites.0.clone(),
            big_ns: a.big_ns.0.clone(),
            deltas: a.deltas,
            trials: a.trials,
            master_seed: a.seed,
            out: a.out.clone(),
            workers: a.workers,
            pilot_trials: a.pilot_trials,
        }
    }
}

impl RunConfig {
    /// Every `(suite, N, n)` slice of the run, after checking counts and
    /// each ensemble's shape constraints.
    pub fn slices(&self) -> Result<Vec<(Suite, usize, usize)>> {
        if self.trials == 0 || self.pilot_trials == 0 {
            return Err(Error::Config("M and pilot M must be positive".into()));
        }
        if self.suites.is_empty() || self.big_ns.is_empty() {
            return Err(Error::Config("at least one suite and one N are required".into()));
        }
        let mut out = Vec::new();
        for &id in &self.suites {
            let suite = Suite::from_id(id)?;
            for &big_n in &self.big_ns {
                if big_n == 0 {
                    return Err(Error::Config("N must be positive".into()));
                }
                for n in n_grid(big_n, self.deltas.lo, self.deltas.hi, self.deltas.steps)? {
                    suite.ensemble.check_shape(n, big_n)?;
                    out.push((suite, big_n, n));
                }
            }
        }
        Ok(out)
    }
}

/// Exit status for an error: configuration problems are usage errors,
/// everything else is a data error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Runs every slice not already present in the output file, rewriting the
/// merged file after each slice. Returns the merged records.
pub fn cmd_run(config: &RunConfig, log: &mut dyn Write) -> Result<Vec<TrialRecord>> {
    let plan = config.slices()?;
    let mut records = if config.out.exists() {
        read_records(&config.out)?
    } else {
        Vec::new()
    };
    let done: BTreeSet<(u32, usize, usize)> = records.iter().map(|r| (r.suite, r.big_n, r.n)).collect();
    for (suite, big_n, n) in plan {
        let delta = n as f64 / big_n as f64;
        if done.contains(&(suite.id, big_n, n)) {
            writeln!(log, "E{} N={big_n} n={n} (delta {delta:.3}): present, skipped", suite.id)?;
            continue;
        }
        let run = run_slice(
            &suite,
            big_n,
            n,
            config.trials,
            config.pilot_trials,
            config.master_seed,
            config.workers,
        )?;
        writeln!(
            log,
            "E{} N={big_n} n={n} (delta {delta:.3}): {} cells, k {}..{}, {} solver failures",
            suite.id,
            run.records.len(),
            run.records.first().map_or(0, |r| r.k),
            run.records.last().map_or(0, |r| r.k),
            run.failures.len()
        )?;
        records = merge_records(records.into_iter().chain(run.records));
        write_records(&config.out, &records)?;
    }
    if !config.out.exists() {
        write_records(&config.out, &records)?;
    }
    Ok(records)
}

/// Runs (or resumes) the record file next to the curve, summarizes every
/// slice and writes the extrapolated curve.
pub fn cmd_reference(args: &ReferenceArgs, log: &mut dyn Write) -> Result<ReferenceCurve> {
    let config = RunConfig::from(&args.run);
    let records = cmd_run(&config, log)?;
    let summaries = located_summaries(&records, None, log)?;
    let curve = extrapolate_reference(&summaries)?;
    let ns: Vec<String> = config.big_ns.iter().map(ToString::to_string).collect();
    let text = format!(
        "# empirical: LD50 = a + c/N least-squares limit over N = {}, M = {}, seed = {}\n{}",
        ns.join(","),
        config.trials,
        config.master_seed,
        curve.format()
    );
    std::fs::write(&args.curve, text)?;
    writeln!(log, "wrote {} knots to {}", curve.knots().len(), args.curve.display())?;
    Ok(curve)
}

fn read_all_records(paths: &[PathBuf]) -> Result<Vec<TrialRecord>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(read_records(p)?);
    }
    Ok(merge_records(all))
}

fn read_all_zscores(paths: &[PathBuf]) -> Result<Vec<ZScoreRecord>> {
    let mut all = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(p)?;
        all.extend(parse_zscores(&text, Some(p))?);
    }
    if all.is_empty() {
        return Err(Error::Empty("no z-scores in input".into()));
    }
    Ok(all)
}

fn optional_reference(path: Option<&Path>) -> Result<Option<ReferenceCurve>> {
    path.map(load_reference_curve).transpose()
}

/// Summaries of every slice whose LD50 is located; slices without a 50%
/// crossing are reported to `log` and skipped.
fn located_summaries(
    records: &[TrialRecord],
    reference: Option<&ReferenceCurve>,
    log: &mut dyn Write,
) -> Result<Vec<TransitionSummary>> {
    let mut out = Vec::new();
    for slice in slices_from_records(records)? {
        match summarize(&slice, reference) {
            Ok(s) => out.push(s),
            Err(Error::NoCrossing(_)) => writeln!(
                log,
                "E{} N={} n={}: no 50% crossing",
                slice.suite, slice.big_n, slice.n
            )?,
            Err(e) => return Err(e),
        }
    }
    if out.is_empty() {
        return Err(Error::NoTransition("no slice crosses 50% success".into()));
    }
    Ok(out)
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.digits$}"))
}

pub fn cmd_analyze(which: &Analyze, out: &mut dyn Write, log: &mut dyn Write) -> Result<()> {
    match which {
        Analyze::Ld50(a) => {
            let records = read_all_records(&a.inputs)?;
            let reference = optional_reference(a.reference.as_deref())?;
            let rows = located_summaries(&records, reference.as_ref(), log)?;
            writeln!(out, "E N n delta ld50 width gap")?;
            for s in rows {
                writeln!(
                    out,
                    "{} {} {} {:.4} {:.6} {} {}",
                    s.suite,
                    s.big_n,
                    s.n,
                    s.delta(),
                    s.ld50,
                    opt(s.width, 6),
                    opt(s.reference_gap, 6)
                )?;
            }
        }
        Analyze::Width(a) => {
            let records = read_all_records(&a.inputs)?;
            let reference = load_reference_curve(&a.reference)?;
            let slices = slices_from_records(&records)?;
            write!(out, "{}", width_scaling_table(&slices, &reference, a.gamma)?)?;
        }
        Analyze::Zscores(a) => {
            let alt = read_all_records(&a.inputs)?;
            let base = read_records(&a.baseline)?;
            let method = if a.unpooled { ZMethod::Unpooled } else { ZMethod::Pooled };
            let zs = compare_suites(&alt, &base, a.baseline_suite, method)?;
            let table = format_zscores(&zs);
            let defined: Vec<f64> = zs.iter().filter_map(|r| r.z).collect();
            let pp = pp_csv(&defined)?;
            match (&a.out, &a.pp) {
                (Some(path), pp_path) => {
                    std::fs::write(path, table)?;
                    let pp_path = pp_path.clone().unwrap_or_else(|| path.with_extension("pp.csv"));
                    std::fs::write(&pp_path, pp)?;
                    writeln!(
                        out,
                        "{} cells ({} defined) -> {}, PP points -> {}",
                        zs.len(),
                        defined.len(),
                        path.display(),
                        pp_path.display()
                    )?;
                }
                (None, Some(pp_path)) => {
                    write!(out, "{table}")?;
                    std::fs::write(pp_path, pp)?;
                }
                (None, None) => {
                    write!(out, "{table}")?;
                    writeln!(out)?;
                    write!(out, "{pp}")?;
                }
            }
        }
        Analyze::Glm(a) => {
            let records = read_all_records(&a.inputs)?;
            writeln!(out, "E N n delta link a se_a b se_b deviance ld50 converged")?;
            for slice in slices_from_records(&records)? {
                for &link in &a.link.0 {
                    match glm_fit_slice(&slice, link) {
                        Ok(f) => writeln!(
                            out,
                            "{} {} {} {:.4} {} {:.6} {:.6} {:.6} {:.6} {:.4} {:.6} {}",
                            slice.suite,
                            slice.big_n,
                            slice.n,
                            slice.delta(),
                            link.name(),
                            f.a,
                            f.se_a,
                            f.b,
                            f.se_b,
                            f.deviance,
                            f.ld50(),
                            f.converged
                        )?,
                        Err(e) => writeln!(
                            log,
                            "E{} N={} n={} {}: {e}",
                            slice.suite,
                            slice.big_n,
                            slice.n,
                            link.name()
                        )?,
                    }
                }
            }
        }
        Analyze::Meanshift(a) => {
            let zs = read_all_zscores(&a.inputs)?;
            let kind = if a.hinged { ShiftKind::Hinged } else { ShiftKind::Linear };
            let full = fit_mean_shift(&zs, kind, ShiftScaling::FreeConstant)?;
            let nested = fit_mean_shift(&zs, kind, ShiftScaling::RootNOnly)?;
            writeln!(out, "== free constant ==\n{}", full.fit)?;
            writeln!(out, "== 1/sqrt(N) only ==\n{}", nested.fit)?;
            writeln!(out, "E alpha0 alpha1 beta0 beta1 kappa0 kappa1")?;
            for c in full.ensembles() {
                writeln!(
                    out,
                    "{} {:.5} {:.5} {:.5} {:.5} {:.5} {:.5}",
                    c.suite, c.alpha0, c.alpha1, c.beta0, c.beta1, c.kappa0, c.kappa1
                )?;
            }
            writeln!(out, "\n== nested comparison ==\n{}", mean_shift_anova(&nested, &full)?)?;
        }
        Analyze::Scaling(a) => {
            let zs = read_all_zscores(&a.inputs)?;
            let groups = fit_group_shifts(&zs)?;
            writeln!(out, "E N cells alpha beta")?;
            for g in &groups {
                writeln!(out, "{} {} {} {:.5} {:.5}", g.suite, g.big_n, g.cells, g.alpha, g.beta)?;
            }
            for (label, pick) in [("alpha", 0usize), ("beta", 1)] {
                let values: Vec<(u32, usize, f64)> = groups
                    .iter()
                    .map(|g| (g.suite, g.big_n, if pick == 0 { g.alpha } else { g.beta }))
                    .collect();
                let fit = scaling_exponent_fit(&values, &GAMMA_GRID)?;
                writeln!(out, "\n{label}: gamma R2")?;
                for &(gamma, r2) in &fit.rows {
                    let flag = if gamma == fit.best_gamma { " *" } else { "" };
                    writeln!(out, "{gamma:.4} {r2:.5}{flag}")?;
                }
            }
        }
        Analyze::Hc(a) => {
            let zs = read_all_zscores(&a.inputs)?;
            let mut groups: BTreeMap<Option<usize>, Vec<f64>> = BTreeMap::new();
            for r in &zs {
                if let Some(z) = r.z {
                    groups.entry(Some(r.big_n)).or_default().push(z);
                    groups.entry(None).or_default().push(z);
                }
            }
            writeln!(out, "N c total observed expected")?;
            for (big_n, values) in &groups {
                let label = big_n.map_or_else(|| "all".to_string(), |n| n.to_string());
                for row in hc_counts(values, &a.thresholds.0) {
                    writeln!(
                        out,
                        "{label} {} {} {} {:.2}",
                        row.threshold, row.total, row.observed, row.expected
                    )?;
                }
            }
        }
        Analyze::Displaced(a) => {
            let zs = read_all_zscores(&a.inputs)?;
            let reference = load_reference_curve(&a.reference)?;
            let mut slices: BTreeMap<(u32, usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
            for r in &zs {
                if let Some(z) = r.z {
                    slices.entry((r.e_alt, r.big_n, r.n)).or_default().push((r.rho(), z));
                }
            }
            writeln!(out, "E N n delta rho_dagger width amplitude rms_before rms_after")?;
            for ((suite, big_n, n), points) in slices {
                let delta = n as f64 / big_n as f64;
                let width = a.width_coef / (big_n as f64).sqrt();
                let rho_ref = reference.rho_for(suite, delta)?;
                match displaced_ld50_model(&points, rho_ref, width) {
                    Ok(f) => writeln!(
                        out,
                        "{suite} {big_n} {n} {delta:.4} {:.5} {:.5} {:.5} {:.4} {:.4}",
                        f.rho_dagger, f.width, f.amplitude, f.rms_before, f.rms_after
                    )?,
                    Err(e) => writeln!(log, "E{suite} N={big_n} n={n}: {e}")?,
                }
            }
        }
    }
    Ok(())
}

fn pp_csv(zs: &[f64]) -> Result<String> {
    let mut s = String::from("upper_tail,fraction_at_least\n");
    for (p, f) in pp_plot_data(zs)? {
        s.push_str(&format!("{p:.6},{f:.6}\n"));
    }
    Ok(s)
}

/// Outcome of `verify`: each check's line and the totals.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub lines: Vec<String>,
    pub passed: usize,
    pub failed: usize,
}

impl VerifyReport {
    fn record(&mut self, ok: bool, line: String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        self.lines.push(format!("{} {line}", if ok { "PASS" } else { "FAIL" }));
    }

    pub fn success(&self) -> bool {
        self.failed == 0
    }
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<VerifyReport> {
    if a.n == 0 || a.n > a.big_n || a.matrices == 0 || a.draws == 0 {
        return Err(Error::Config("verify needs 0 < n <= N and positive counts".into()));
    }
    let suite = Suite::from_id(a.suite)?;
    suite.ensemble.check_shape(a.n, a.big_n)?;
    let mut report = VerifyReport::default();
    let mut rng = CounterRng::new(a.seed);
    let bump = |x: &mut [f64]| x[0] += 1.0;
    let corrupt: Option<SolutionHook<'_>> = if a.inject_fault { Some(&bump) } else { None };

    for i in 0..a.matrices {
        let matrix = sample_matrix(&suite.ensemble, a.n, a.big_n, rng.next_word())?;
        for &k in &a.k.0 {
            if k + 1 > a.n {
                continue;
            }
            for (label, kind) in [("simplex", PolytopeKind::Simplex), ("cross-polytope", PolytopeKind::CrossPolytope)] {
                let c = face_recovery_check(&matrix, kind, k, a.draws, rng.next_word(), a.budget, corrupt)?;
                let dev = c.deviation_sds();
                report.record(
                    dev <= a.sds,
                    format!(
                        "recovery {label} matrix {i} k={k}: exact {}/{} = {:.4}, observed {}/{} ({dev:.2} sd)",
                        c.exact.survived,
                        c.exact.total,
                        c.exact.value(),
                        c.successes,
                        c.draws
                    ),
                );
            }
        }
        let spark = exact_spark(&matrix, a.budget)?;
        let upper = match spark_plus(&matrix) {
            Ok(p) => Some(p),
            Err(Error::AllColumnsFailed) => None,
            Err(e) => return Err(e),
        };
        let ok = match (spark, upper) {
            (Some(s), Some(p)) => p >= s,
            (None, None) => true,
            _ => false,
        };
        report.record(
            ok,
            format!("spark matrix {i}: exact {spark:?}, heuristic upper bound {upper:?}"),
        );
    }

    let mut mismatches = 0;
    let mut compared = 0;
    for t in 0..a.lps {
        let m = 1 + t % a.n.clamp(1, 6);
        let cols = m + 1 + (t % 5);
        let lp = random_bounded_lp(m, cols, &mut rng)?;
        let Some((opt, _)) = lp_enumeration_optimum(&lp, a.budget)? else {
            continue;
        };
        compared += 1;
        let mut obj = solve_standard(&lp).map(|s| s.objective).unwrap_or(f64::NAN);
        if a.inject_fault {
            obj += 1e-3;
        }
        if !((obj - opt).abs() <= 1e-8 * (1.0 + opt.abs())) {
            mismatches += 1;
        }
    }
    report.record(
        mismatches == 0,
        format!("simplex vs basis enumeration: {mismatches} mismatches in {compared} LPs"),
    );
    Ok(report)
}

/// Writes the CSV files and returns their paths.
pub fn cmd_report(a: &ReportArgs, log: &mut dyn Write) -> Result<Vec<PathBuf>> {
    let records = read_all_records(&a.inputs)?;
    let reference = optional_reference(a.reference.as_deref())?;
    let summaries = located_summaries(&records, reference.as_ref(), log)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let mut written = Vec::new();

    let mut levels: BTreeMap<u32, String> = BTreeMap::new();
    for s in &summaries {
        let rho_ref = match &reference {
            Some(r) => format!("{:.6}", r.rho_for(s.suite, s.delta())?),
            None => String::new(),
        };
        levels
            .entry(s.suite)
            .or_insert_with(|| "N,delta,ld50,width,rho_ref\n".to_string())
            .push_str(&format!(
                "{},{:.6},{:.6},{},{}\n",
                s.big_n,
                s.delta(),
                s.ld50,
                s.width.map_or_else(String::new, |w| format!("{w:.6}")),
                rho_ref
            ));
    }
    let mut heat: BTreeMap<u32, String> = BTreeMap::new();
    for r in &records {
        heat.entry(r.suite)
            .or_insert_with(|| "N,delta,rho,success_fraction\n".to_string())
            .push_str(&format!(
                "{},{:.6},{:.6},{:.6}\n",
                r.big_n,
                r.delta(),
                r.rho(),
                r.success_fraction()
            ));
    }
    for (suite, text) in levels {
        let p = a.out_dir.join(format!("level_E{suite}.csv"));
        std::fs::write(&p, text)?;
        written.push(p);
    }
    for (suite, text) in heat {
        let p = a.out_dir.join(format!("heatmap_E{suite}.csv"));
        std::fs::write(&p, text)?;
        written.push(p);
    }
    if let Some(base) = &a.baseline {
        let zs = compare_suites(&records, &read_records(base)?, None, ZMethod::Pooled)?;
        let defined: Vec<f64> = zs.iter().filter_map(|r| r.z).collect();
        let p = a.out_dir.join("pp.csv");
        std::fs::write(&p, pp_csv(&defined)?)?;
        written.push(p);
    }
    for p in &written {
        writeln!(log, "wrote {}", p.display())?;
    }
    Ok(written)
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("config line {}: expected key = value", i + 1)));
        };
        let key = k.trim().trim_start_matches('-');
        if key.is_empty() {
            return Err(Error::Config(format!("config line {}: empty key", i + 1)));
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Inserts config entries as flags right after the subcommand words so
/// that later command-line flags override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            config = it.next();
        } else if let Some(path) = s.strip_prefix("--config=") {
            config = Some(path.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("config file {}: {e}", Path::new(&path).display())))?;
    let mut injected = Vec::new();
    for (k, v) in parse_config(&text)? {
        match v.as_str() {
            "true" => injected.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                injected.push(format!("--{k}").into());
                injected.push(v.into());
            }
        }
    }
    let split = 1 + rest
        .iter()
        .skip(1)
        .take_while(|a| !a.to_string_lossy().starts_with('-'))
        .count();
    let tail = rest.split_off(split.min(rest.len()));
    rest.extend(injected);
    rest.extend(tail);
    Ok(rest)
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Tables go to `out`, progress and errors to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match expand_config(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(&RunConfig::from(a), err).map(|r| {
            let _ = writeln!(out, "{} cells in {}", r.len(), a.out.display());
            EXIT_OK
        }),
        Command::Reference(a) => cmd_reference(a, err).map(|c| {
            let _ = write!(out, "{}", c.format());
            EXIT_OK
        }),
        Command::Analyze(which) => cmd_analyze(which, out, err).map(|()| EXIT_OK),
        Command::Verify(a) => cmd_verify(a).map(|report| {
            for line in &report.lines {
                let _ = writeln!(out, "{line}");
            }
            let _ = writeln!(out, "{} passed, {} failed", report.passed, report.failed);
            if report.success() {
                EXIT_OK
            } else {
                let _ = writeln!(err, "verification failed: {} checks", report.failed);
                EXIT_VERIFY
            }
        }),
        Command::Report(a) => cmd_report(a, err).map(|_| EXIT_OK),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        exit_code(&e)
    })
}
