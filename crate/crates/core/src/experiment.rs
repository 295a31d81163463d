//! Monte Carlo recovery trials, adaptive placement of the k-grid over the
//! transition region, and the `E N n k M S` record file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::ensembles::{make_instance, CoefficientSign, Suite};
use crate::linalg::norm_inf;
use crate::lp::{solve_l1, solve_nonneg, LpStatus};
use crate::{Error, Result};

/// Relative ℓ∞ tolerance of the exact-recovery criterion (six digits).
pub const RECOVERY_TOL: f64 = 1e-6;
/// Nominal transition width prior, `WIDTH_PRIOR / √N` in ρ units.
pub const WIDTH_PRIOR: f64 = 0.65;
/// Half-span of the emitted k-grid in nominal widths.
pub const GRID_HALF_SPAN: f64 = 3.0;
pub const GRID_POINTS: usize = 15;

/// One aggregated cell: `S` successes out of `M` trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrialRecord {
    pub suite: u32,
    pub big_n: usize,
    pub n: usize,
    pub k: usize,
    pub trials: u64,
    pub successes: u64,
}

impl TrialRecord {
    pub fn key(&self) -> CellKey {
        CellKey {
            suite: self.suite,
            big_n: self.big_n,
            n: self.n,
            k: self.k,
        }
    }

    pub fn delta(&self) -> f64 {
        self.n as f64 / self.big_n as f64
    }

    pub fn rho(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn success_fraction(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.successes > self.trials {
            return Err(format!("S = {} exceeds M = {}", self.successes, self.trials));
        }
        if self.k == 0 || self.k > self.n || self.n > self.big_n {
            return Err(format!(
                "need 0 < k <= n <= N, got k = {}, n = {}, N = {}",
                self.k, self.n, self.big_n
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub suite: u32,
    pub big_n: usize,
    pub n: usize,
    pub k: usize,
}

/// Returns whether `x1` matches `x0` to six digits relative to `‖x0‖_∞`.
pub fn exact_recon(x1: &[f64], x0: &[f64]) -> Result<bool> {
    if x1.len() != x0.len() {
        return Err(Error::DimensionMismatch(format!(
            "solution of length {} vs truth of length {}",
            x1.len(),
            x0.len()
        )));
    }
    let scale = norm_inf(x0);
    if scale == 0.0 {
        return Err(Error::ZeroTruth);
    }
    let err = x1.iter().zip(x0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(err <= RECOVERY_TOL * scale)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialFailure {
    pub k: usize,
    pub replicate: u64,
    pub trial_seed: u64,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub success: bool,
    pub failure: Option<TrialFailure>,
}

/// Draws one instance and reports whether the suite's program recovers it.
/// Solver errors count as failures and are reported alongside.
pub fn run_trial(suite: &Suite, big_n: usize, n: usize, k: usize, replicate: u64, master_seed: u64) -> TrialOutcome {
    let fail = |seed: u64, message: String| TrialOutcome {
        success: false,
        failure: Some(TrialFailure {
            k,
            replicate,
            trial_seed: seed,
            message,
        }),
    };
    let inst = match make_instance(suite, big_n, n, k, replicate, master_seed) {
        Ok(i) => i,
        Err(e) => return fail(0, e.to_string()),
    };
    let solved = match suite.sign {
        CoefficientSign::NonNegative => solve_nonneg(&inst.a, &inst.y),
        CoefficientSign::Signed => solve_l1(&inst.a, &inst.y),
    };
    match solved {
        Ok(sol) if sol.status == LpStatus::Optimal => match exact_recon(&sol.x, &inst.x0) {
            Ok(ok) => TrialOutcome {
                success: ok,
                failure: None,
            },
            Err(e) => fail(inst.seeds.trial, e.to_string()),
        },
        Ok(sol) => fail(inst.seeds.trial, format!("solver status {:?}", sol.status)),
        Err(e) => fail(inst.seeds.trial, e.to_string()),
    }
}

/// Trials for one `(suite, N, n)` over a list of sparsity levels.
#[derive(Clone, Debug)]
pub struct CellPlan {
    pub suite: Suite,
    pub big_n: usize,
    pub n: usize,
    pub k_grid: Vec<usize>,
    pub trials: u64,
    pub master_seed: u64,
}

impl CellPlan {
    pub fn validate(&self) -> Result<()> {
        self.suite.ensemble.check_shape(self.n, self.big_n)?;
        if self.trials == 0 {
            return Err(Error::Config("M must be positive".into()));
        }
        if self.k_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("k grid must be strictly increasing".into()));
        }
        if let (Some(&first), Some(&last)) = (self.k_grid.first(), self.k_grid.last()) {
            if first == 0 || last > self.n {
                return Err(Error::Config(format!("k grid must lie in [1, {}]", self.n)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct CellRun {
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
}

/// Runs every `(k, replicate)` trial of the plan on `workers` threads
/// (0 = rayon's default). Results do not depend on the worker count.
pub fn run_cell(plan: &CellPlan, workers: usize) -> Result<CellRun> {
    plan.validate()?;
    let jobs: Vec<(usize, u64)> = plan
        .k_grid
        .iter()
        .flat_map(|&k| (0..plan.trials).map(move |r| (k, r)))
        .collect();
    let work = || -> Vec<(usize, TrialOutcome)> {
        jobs.par_iter()
            .map(|&(k, r)| (k, run_trial(&plan.suite, plan.big_n, plan.n, k, r, plan.master_seed)))
            .collect()
    };
    let outcomes = with_workers(workers, work)?;
    let mut by_k: BTreeMap<usize, u64> = plan.k_grid.iter().map(|&k| (k, 0)).collect();
    let mut failures = Vec::new();
    for (k, o) in outcomes {
        if o.success {
            *by_k.get_mut(&k).expect("k in grid") += 1;
        }
        if let Some(f) = o.failure {
            failures.push(f);
        }
    }
    let records = by_k
        .into_iter()
        .map(|(k, s)| TrialRecord {
            suite: plan.suite.id,
            big_n: plan.big_n,
            n: plan.n,
            k,
            trials: plan.trials,
            successes: s,
        })
        .collect();
    Ok(CellRun { records, failures })
}

pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Brackets the 50% point of a success curve over `k ∈ [1, n]` by bisection
/// on `success(k)`, then returns up to [`GRID_POINTS`] distinct, equally
/// spaced k values spanning `±GRID_HALF_SPAN` nominal widths around it.
pub fn locate_transition_with(
    n: usize,
    big_n: usize,
    mut success: impl FnMut(usize) -> Result<f64>,
) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidShape("n must be positive".into()));
    }
    let s_lo = success(1)?;
    if s_lo <= 0.05 {
        return Err(Error::NoTransition(format!(
            "success {s_lo:.3} already at k = 1"
        )));
    }
    let s_hi = success(n)?;
    if s_hi >= 0.95 {
        return Err(Error::NoTransition(format!(
            "success {s_hi:.3} still at k = n = {n}"
        )));
    }
    let (mut lo, mut hi, mut f_lo, mut f_hi) = (1usize, n, s_lo, s_hi);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let s = success(mid)?;
        if s >= 0.5 {
            lo = mid;
            f_lo = s;
        } else {
            hi = mid;
            f_hi = s;
        }
    }
    let k50 = if f_lo > f_hi {
        lo as f64 + (f_lo - 0.5) / (f_lo - f_hi) * (hi - lo) as f64
    } else {
        lo as f64 + 0.5
    };
    Ok(grid_around(k50, n, big_n))
}

fn grid_around(k50: f64, n: usize, big_n: usize) -> Vec<usize> {
    let half = GRID_HALF_SPAN * WIDTH_PRIOR / (big_n as f64).sqrt() * n as f64;
    let lo = (k50 - half).max(1.0);
    let hi = (k50 + half).min(n as f64);
    let mut grid: Vec<usize> = (0..GRID_POINTS)
        .map(|i| {
            let t = i as f64 / (GRID_POINTS - 1) as f64;
            (lo + t * (hi - lo)).round().clamp(1.0, n as f64) as usize
        })
        .collect();
    grid.dedup();
    grid
}

/// Pilot-based transition search for a real suite. Pilot trials use
/// replicate indices disjoint from those of the main run.
pub fn locate_transition(
    suite: &Suite,
    big_n: usize,
    n: usize,
    pilot_trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<usize>> {
    if n < 10 {
        return Err(Error::InvalidShape(format!("transition search needs n >= 10, got {n}")));
    }
    suite.ensemble.check_shape(n, big_n)?;
    if pilot_trials == 0 {
        return Err(Error::Config("pilot M must be positive".into()));
    }
    let probe = |k: usize| -> Result<f64> {
        let ok = with_workers(workers, || {
            (0..pilot_trials)
                .into_par_iter()
                .filter(|&r| run_trial(suite, big_n, n, k, PILOT_REPLICATE_BASE + r, master_seed).success)
                .count()
        })?;
        Ok(ok as f64 / pilot_trials as f64)
    };
    locate_transition_with(n, big_n, probe)
}

/// Locates the transition of one constant-δ slice with a pilot run, then
/// runs `trials` replicates at every grid point.
pub fn run_slice(
    suite: &Suite,
    big_n: usize,
    n: usize,
    trials: u64,
    pilot_trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<CellRun> {
    let k_grid = locate_transition(suite, big_n, n, pilot_trials, master_seed, workers)?;
    let plan = CellPlan {
        suite: *suite,
        big_n,
        n,
        k_grid,
        trials,
        master_seed,
    };
    run_cell(&plan, workers)
}

/// `n` values for `steps` equally spaced δ in `[lo, hi]`, rounded to the
/// nearest integer and deduplicated.
pub fn n_grid(big_n: usize, lo: f64, hi: f64, steps: usize) -> Result<Vec<usize>> {
    if !(0.0 < lo && lo <= hi && hi <= 1.0) || steps == 0 {
        return Err(Error::Config(format!(
            "delta range {lo}:{hi}:{steps} must satisfy 0 < lo <= hi <= 1, steps >= 1"
        )));
    }
    let mut ns: Vec<usize> = (0..steps)
        .map(|i| {
            let t = if steps == 1 { 0.0 } else { i as f64 / (steps - 1) as f64 };
            let delta = lo + t * (hi - lo);
            ((delta * big_n as f64).round() as usize).clamp(1, big_n)
        })
        .collect();
    ns.dedup();
    Ok(ns)
}

/// Offset that keeps pilot replicates apart from production replicates.
pub const PILOT_REPLICATE_BASE: u64 = 1 << 40;

pub const RECORD_HEADER: &str = "E N n k M S";

pub fn format_records(records: &[TrialRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{} {} {} {} {} {}", r.suite, r.big_n, r.n, r.k, r.trials, r.successes);
    }
    out
}

pub fn parse_records(text: &str, path: Option<&Path>) -> Result<Vec<TrialRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.map(Path::to_path_buf),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.split_whitespace().eq(RECORD_HEADER.split_whitespace()) => {}
        Some((_, h)) => return Err(err(1, format!("expected header `{RECORD_HEADER}`, found `{h}`"))),
        None => return Err(err(1, "missing header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(err(lineno, format!("expected 6 fields, found {}", fields.len())));
        }
        let mut v = [0u64; 6];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| err(lineno, format!("`{f}` is not a nonnegative integer")))?;
        }
        let rec = TrialRecord {
            suite: u32::try_from(v[0]).map_err(|_| err(lineno, "suite code too large".into()))?,
            big_n: v[1] as usize,
            n: v[2] as usize,
            k: v[3] as usize,
            trials: v[4],
            successes: v[5],
        };
        rec.validate().map_err(|m| err(lineno, m))?;
        out.push(rec);
    }
    Ok(out)
}

/// Sums `M` and `S` over records sharing `(E, N, n, k)`; output sorted by
/// that key.
pub fn merge_records(records: impl IntoIterator<Item = TrialRecord>) -> Vec<TrialRecord> {
    let mut map: BTreeMap<CellKey, (u64, u64)> = BTreeMap::new();
    for r in records {
        let e = map.entry(r.key()).or_default();
        e.0 += r.trials;
        e.1 += r.successes;
    }
    map.into_iter()
        .map(|(k, (m, s))| TrialRecord {
            suite: k.suite,
            big_n: k.big_n,
            n: k.n,
            k: k.k,
            trials: m,
            successes: s,
        })
        .collect()
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = std::fs::read_to_string(path)?;
    parse_records(&text, Some(path))
}

pub fn write_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    std::fs::write(path, format_records(records))?;
    Ok(())
}

/// Merges `records` into the file at `path`, creating it if needed.
pub fn append_records(path: &Path, records: &[TrialRecord]) -> Result<Vec<TrialRecord>> {
    let mut all = if path.exists() { read_records(path)? } else { Vec::new() };
    all.extend_from_slice(records);
    let merged = merge_records(all);
    write_records(path, &merged)?;
    Ok(merged)
}
