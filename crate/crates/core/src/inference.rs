//! Two-sample Z-scores between suites and the models fitted to them:
//! linear and hinged mean-shift regressions, scaling-exponent selection,
//! Higher-Criticism counts and the displaced-LD50 model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::ensembles::Suite;
use crate::experiment::TrialRecord;
use crate::linalg::{DenseMatrix, FitResult};
use crate::stats::regression::{f_test_rss, ols, FTest};
use crate::stats::special::{norm_cdf, norm_pdf, norm_sf};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ZMethod {
    /// Pooled-proportion standard error (the two-sample test under p₀ = p₁).
    #[default]
    Pooled,
    Unpooled,
}

/// Z-score of one `(N, n, k)` cell: baseline proportion `p0` out of `m0`
/// trials against alternative `p1` out of `m1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZScoreRecord {
    pub e_alt: u32,
    pub e_base: u32,
    pub big_n: usize,
    pub n: usize,
    pub k: usize,
    pub p0: f64,
    pub p1: f64,
    pub m0: u64,
    pub m1: u64,
    /// `None` when the standard error vanishes.
    pub z: Option<f64>,
}

impl ZScoreRecord {
    pub fn delta(&self) -> f64 {
        self.n as f64 / self.big_n as f64
    }

    pub fn rho(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn is_defined(&self) -> bool {
        self.z.is_some()
    }
}

/// `z = (p̂₀ − p̂₁) / SD`.
pub fn z_score(s0: u64, m0: u64, s1: u64, m1: u64, method: ZMethod) -> Result<Option<f64>> {
    if m0 == 0 || m1 == 0 || s0 > m0 || s1 > m1 {
        return Err(Error::Domain(format!(
            "invalid counts S0={s0} M0={m0} S1={s1} M1={m1}"
        )));
    }
    let (m0f, m1f) = (m0 as f64, m1 as f64);
    let (p0, p1) = (s0 as f64 / m0f, s1 as f64 / m1f);
    let var = match method {
        ZMethod::Pooled => {
            let p = (s0 + s1) as f64 / (m0f + m1f);
            p * (1.0 - p) * (1.0 / m0f + 1.0 / m1f)
        }
        ZMethod::Unpooled => p0 * (1.0 - p0) / m0f + p1 * (1.0 - p1) / m1f,
    };
    Ok((var > 0.0).then(|| (p0 - p1) / var.sqrt()))
}

/// Inner join of alternative and baseline records on `(N, n, k)`. Each
/// alternative suite is matched with `baseline`, or when `None`, with the
/// Gaussian suite of the same coefficient sign.
pub fn compare_suites(
    alt: &[TrialRecord],
    base: &[TrialRecord],
    baseline: Option<u32>,
    method: ZMethod,
) -> Result<Vec<ZScoreRecord>> {
    let base_cells: BTreeMap<(u32, usize, usize, usize), (u64, u64)> =
        crate::experiment::merge_records(base.iter().cloned())
            .into_iter()
            .map(|r| ((r.suite, r.big_n, r.n, r.k), (r.successes, r.trials)))
            .collect();
    let mut out = Vec::new();
    for a in crate::experiment::merge_records(alt.iter().cloned()) {
        let e_base = match baseline {
            Some(b) => b,
            None => Suite::from_id(a.suite)?.baseline_id(),
        };
        let Some(&(s0, m0)) = base_cells.get(&(e_base, a.big_n, a.n, a.k)) else {
            continue;
        };
        out.push(ZScoreRecord {
            e_alt: a.suite,
            e_base,
            big_n: a.big_n,
            n: a.n,
            k: a.k,
            p0: s0 as f64 / m0 as f64,
            p1: a.successes as f64 / a.trials as f64,
            m0,
            m1: a.trials,
            z: z_score(s0, m0, a.successes, a.trials, method)?,
        });
    }
    if out.is_empty() {
        return Err(Error::NoCommonCells);
    }
    Ok(out)
}

pub const Z_HEADER: &str = "E_alt E_base N n k p0 p1 z defined";

/// Text export, one cell per line. Undefined cells print `NA` and `0`.
pub fn format_zscores(zs: &[ZScoreRecord]) -> String {
    let mut out = format!("{Z_HEADER}\n");
    for r in zs {
        let (z, d) = match r.z {
            Some(z) => (format!("{z:.6}"), 1),
            None => ("NA".to_string(), 0),
        };
        let _ = writeln!(
            out,
            "{} {} {} {} {} {:.6} {:.6} {} {}",
            r.e_alt, r.e_base, r.big_n, r.n, r.k, r.p0, r.p1, z, d
        );
    }
    out
}

/// Inverse of [`format_zscores`]; trial counts are not part of the format
/// and are read back as zero.
pub fn parse_zscores(text: &str, path: Option<&Path>) -> Result<Vec<ZScoreRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.map(Path::to_path_buf),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.split_whitespace().collect::<Vec<_>>().join(" ") == Z_HEADER => {}
        Some((i, _)) => return Err(err(i + 1, format!("expected header `{Z_HEADER}`"))),
        None => return Err(err(0, "empty z-score file".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 9 {
            return Err(err(i + 1, format!("expected 9 fields, found {}", f.len())));
        }
        let int = |t: &str| t.parse::<u64>().map_err(|e| err(i + 1, format!("`{t}`: {e}")));
        let real = |t: &str| t.parse::<f64>().map_err(|e| err(i + 1, format!("`{t}`: {e}")));
        let defined = int(f[8])? == 1;
        let z = if defined { Some(real(f[7])?) } else { None };
        out.push(ZScoreRecord {
            e_alt: int(f[0])? as u32,
            e_base: int(f[1])? as u32,
            big_n: int(f[2])? as usize,
            n: int(f[3])? as usize,
            k: int(f[4])? as usize,
            p0: real(f[5])?,
            p1: real(f[6])?,
            m0: 0,
            m1: 0,
            z,
        });
    }
    Ok(out)
}

/// `(Φ̄(t), fraction of z ≥ t)` at each observed z, sorted by threshold.
pub fn pp_plot_data(zs: &[f64]) -> Result<Vec<(f64, f64)>> {
    if zs.is_empty() {
        return Err(Error::Empty("no defined z-scores".into()));
    }
    let mut sorted = zs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .map(|&t| {
            let at_least = sorted.len() - sorted.partition_point(|&v| v < t);
            (norm_sf(t), at_least as f64 / n)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftKind {
    /// `μ = α + β (δ − ½)`.
    Linear,
    /// Adds `κ (½ − δ)₊`.
    Hinged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftScaling {
    /// Each coefficient is `c₀(E) + c₁(E)/√N`.
    FreeConstant,
    /// Each coefficient is `c₁(E)/√N`; no constant terms.
    RootNOnly,
}

/// Per-ensemble coefficients assembled from the fitted design columns.
/// Aliased columns contribute zero.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleCoefficients {
    pub suite: u32,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub kappa0: f64,
    pub kappa1: f64,
}

#[derive(Clone, Debug)]
pub struct MeanShiftModel {
    pub kind: ShiftKind,
    pub scaling: ShiftScaling,
    /// Ensemble levels in ascending suite order; the first is the
    /// reference level of the treatment contrasts.
    pub levels: Vec<u32>,
    pub fit: FitResult,
}

impl MeanShiftModel {
    pub fn ensembles(&self) -> Vec<EnsembleCoefficients> {
        let c = |name: &str| self.fit.coefficient(name).unwrap_or(0.0);
        self.levels
            .iter()
            .map(|&e| {
                let sum = |base: &str, inter: &str| c(base) + c(&inter.replace("{E}", &format!("E{e}")));
                EnsembleCoefficients {
                    suite: e,
                    alpha0: sum("(Intercept)", "{E}"),
                    alpha1: sum("probSize", "probSize:{E}"),
                    beta0: sum("de", "{E}:de"),
                    beta1: sum("probSize:de", "probSize:{E}:de"),
                    kappa0: sum("dea2", "{E}:dea2"),
                    kappa1: sum("probSize:dea2", "probSize:{E}:dea2"),
                }
            })
            .collect()
    }
}

/// Covariates of one defined z-score.
struct Obs {
    z: f64,
    suite: u32,
    prob_size: f64,
    de: f64,
    dea2: f64,
}

fn defined_obs(zs: &[ZScoreRecord]) -> Vec<Obs> {
    zs.iter()
        .filter_map(|r| {
            r.z.map(|z| Obs {
                z,
                suite: r.e_alt,
                prob_size: 1.0 / (r.big_n as f64).sqrt(),
                de: r.delta() - 0.5,
                dea2: (0.5 - r.delta()).max(0.0),
            })
        })
        .collect()
}

/// OLS of the defined z-scores on `probSize = 1/√N`, `de = δ − ½`,
/// optionally `dea2 = (½ − δ)₊`, and their interactions with the ensemble
/// factor. Treatment contrasts are used for the factor, except that the
/// `probSize:E` block of the intercept-free model carries every level, as
/// R does when the main effect is absent.
pub fn fit_mean_shift(zs: &[ZScoreRecord], kind: ShiftKind, scaling: ShiftScaling) -> Result<MeanShiftModel> {
    let obs = defined_obs(zs);
    if obs.is_empty() {
        return Err(Error::Empty("no defined z-scores".into()));
    }
    let distinct_n: BTreeSet<u64> = obs.iter().map(|o| o.prob_size.to_bits()).collect();
    if distinct_n.len() < 2 {
        return Err(Error::DegenerateDesign(
            "mean-shift model needs at least two distinct N".into(),
        ));
    }
    let levels: Vec<u32> = obs.iter().map(|o| o.suite).collect::<BTreeSet<_>>().into_iter().collect();
    let contrast = &levels[1..];

    type Col = (String, Box<dyn Fn(&Obs) -> f64>);
    let mut cols: Vec<Col> = Vec::new();
    let ind = |e: u32| move |o: &Obs| if o.suite == e { 1.0 } else { 0.0 };
    let mut slopes: Vec<(&str, fn(&Obs) -> f64)> = vec![("de", |o| o.de)];
    if kind == ShiftKind::Hinged {
        slopes.push(("dea2", |o| o.dea2));
    }
    if scaling == ShiftScaling::FreeConstant {
        cols.push(("(Intercept)".into(), Box::new(|_| 1.0)));
    }
    cols.push(("probSize".into(), Box::new(|o| o.prob_size)));
    if scaling == ShiftScaling::FreeConstant {
        for &e in contrast {
            cols.push((format!("E{e}"), Box::new(ind(e))));
        }
    }
    for &(name, f) in &slopes {
        if scaling == ShiftScaling::FreeConstant {
            cols.push((name.to_string(), Box::new(f)));
        }
    }
    let prob_levels = if scaling == ShiftScaling::FreeConstant { contrast } else { &levels[..] };
    for &e in prob_levels {
        let i = ind(e);
        cols.push((format!("probSize:E{e}"), Box::new(move |o| o.prob_size * i(o))));
    }
    for &(name, f) in &slopes {
        cols.push((format!("probSize:{name}"), Box::new(move |o| o.prob_size * f(o))));
    }
    if scaling == ShiftScaling::FreeConstant {
        for &(name, f) in &slopes {
            for &e in contrast {
                let i = ind(e);
                cols.push((format!("E{e}:{name}"), Box::new(move |o| i(o) * f(o))));
            }
        }
    }
    for &(name, f) in &slopes {
        for &e in contrast {
            let i = ind(e);
            cols.push((
                format!("probSize:E{e}:{name}"),
                Box::new(move |o| o.prob_size * i(o) * f(o)),
            ));
        }
    }

    let mut data = Vec::with_capacity(obs.len() * cols.len());
    for o in &obs {
        data.extend(cols.iter().map(|(_, f)| f(o)));
    }
    let design = DenseMatrix::from_row_major(obs.len(), cols.len(), data)?;
    let response: Vec<f64> = obs.iter().map(|o| o.z).collect();
    let names: Vec<&str> = cols.iter().map(|(n, _)| n.as_str()).collect();
    let fit = ols(&design, &response, &names, scaling == ShiftScaling::FreeConstant)?;
    Ok(MeanShiftModel {
        kind,
        scaling,
        levels,
        fit,
    })
}

/// Nested-model F-test between two mean-shift fits of the same z-scores.
/// The RootNOnly column space lies inside the FreeConstant one even though
/// the ensemble factor is coded differently, so only RSS and residual
/// degrees of freedom are compared.
pub fn mean_shift_anova(nested: &MeanShiftModel, full: &MeanShiftModel) -> Result<FTest> {
    if nested.fit.n_obs != full.fit.n_obs || nested.levels != full.levels {
        return Err(Error::InvalidNesting("models fit to different z-scores".into()));
    }
    f_test_rss(
        nested.fit.rss,
        nested.fit.df_resid,
        full.fit.rss,
        full.fit.df_resid,
    )
}

/// Intercept `α(N,E)` and slope `β(N,E)` of `z ~ 1 + (δ − ½)` per group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupShift {
    pub suite: u32,
    pub big_n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub cells: usize,
}

pub fn fit_group_shifts(zs: &[ZScoreRecord]) -> Result<Vec<GroupShift>> {
    let mut groups: BTreeMap<(u32, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for r in zs {
        if let Some(z) = r.z {
            groups.entry((r.e_alt, r.big_n)).or_default().push((r.delta() - 0.5, z));
        }
    }
    groups
        .into_iter()
        .map(|((suite, big_n), pts)| {
            let design = DenseMatrix::from_rows(&pts.iter().map(|&(de, _)| [1.0, de]).collect::<Vec<_>>())?;
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let fit = ols(&design, &y, &["(Intercept)", "de"], true)?;
            if fit.coefficients.iter().any(Option::is_none) {
                return Err(Error::DegenerateDesign(format!(
                    "suite {suite} at N = {big_n} spans a single delta"
                )));
            }
            let c = fit.coefficients_or_zero();
            Ok(GroupShift {
                suite,
                big_n,
                alpha: c[0],
                beta: c[1],
                cells: pts.len(),
            })
        })
        .collect()
}

pub const GAMMA_GRID: [f64; 7] = [1.5, 1.25, 1.0, 0.75, 0.5, 1.0 / 3.0, 0.25];

#[derive(Clone, Debug, PartialEq)]
pub struct GammaFit {
    pub rows: Vec<(f64, f64)>,
    pub best_gamma: f64,
    pub best_r_squared: f64,
}

/// For each γ, fits `value(N, E) = c(E) N^(−γ)` without intercept and
/// reports the (uncentred) R²; returns the maximizing γ.
pub fn scaling_exponent_fit(values: &[(u32, usize, f64)], grid: &[f64]) -> Result<GammaFit> {
    let distinct: BTreeSet<usize> = values.iter().map(|v| v.1).collect();
    if distinct.len() < 2 {
        return Err(Error::DegenerateDesign(
            "scaling fit needs at least two distinct N".into(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::Empty("empty exponent grid".into()));
    }
    let levels: Vec<u32> = values.iter().map(|v| v.0).collect::<BTreeSet<_>>().into_iter().collect();
    let names: Vec<String> = levels.iter().map(|e| format!("E{e}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let y: Vec<f64> = values.iter().map(|v| v.2).collect();
    let mut rows = Vec::with_capacity(grid.len());
    for &gamma in grid {
        let mut data = Vec::with_capacity(values.len() * levels.len());
        for &(e, big_n, _) in values {
            let x = (big_n as f64).powf(-gamma);
            data.extend(levels.iter().map(|&l| if l == e { x } else { 0.0 }));
        }
        let design = DenseMatrix::from_row_major(values.len(), levels.len(), data)?;
        let fit = ols(&design, &y, &name_refs, false)?;
        rows.push((gamma, fit.r_squared));
    }
    let &(best_gamma, best_r_squared) = rows
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    Ok(GammaFit {
        rows,
        best_gamma,
        best_r_squared,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HcRow {
    pub threshold: f64,
    pub total: usize,
    pub observed: usize,
    /// `total · (2Φ(c) − 1)`.
    pub expected: f64,
}

/// Observed versus expected counts of `|z| < c` for each threshold.
pub fn hc_counts(zs: &[f64], thresholds: &[f64]) -> Vec<HcRow> {
    thresholds
        .iter()
        .map(|&c| HcRow {
            threshold: c,
            total: zs.len(),
            observed: zs.iter().filter(|z| z.abs() < c).count(),
            expected: zs.len() as f64 * (2.0 * norm_cdf(c) - 1.0),
        })
        .collect()
}

pub const HC_THRESHOLDS: [f64; 3] = [1.0, 2.0, 3.0];

#[derive(Clone, Debug, PartialEq)]
pub struct DisplacedFit {
    pub amplitude: f64,
    /// `ρ† = ρ_ref − w`.
    pub rho_dagger: f64,
    pub width: f64,
    pub residuals: Vec<f64>,
    /// Root mean square of the z-scores themselves.
    pub rms_before: f64,
    /// Root mean square of the residuals.
    pub rms_after: f64,
}

impl DisplacedFit {
    pub fn mean(&self, rho: f64) -> f64 {
        self.amplitude * norm_pdf((rho - self.rho_dagger) / self.width) / self.width
    }
}

/// Least-squares amplitude `c` of `z ≈ c φ((ρ − ρ†)/w)/w` over `(ρ, z)`.
pub fn displaced_ld50_model(points: &[(f64, f64)], rho_ref: f64, width: f64) -> Result<DisplacedFit> {
    if !(width > 0.0) {
        return Err(Error::Domain(format!("width must be positive, got {width}")));
    }
    if points.is_empty() {
        return Err(Error::Empty("no z-scores".into()));
    }
    let first = points[0].0;
    if points.iter().all(|p| p.0 == first) {
        return Err(Error::DegenerateDesign("all rho values are equal".into()));
    }
    let rho_dagger = rho_ref - width;
    let g: Vec<f64> = points
        .iter()
        .map(|&(rho, _)| norm_pdf((rho - rho_dagger) / width) / width)
        .collect();
    let gg: f64 = g.iter().map(|v| v * v).sum();
    if gg == 0.0 {
        return Err(Error::DegenerateDesign("model term vanishes at every rho".into()));
    }
    let amplitude = g.iter().zip(points).map(|(gi, p)| gi * p.1).sum::<f64>() / gg;
    let residuals: Vec<f64> = g.iter().zip(points).map(|(gi, p)| p.1 - amplitude * gi).collect();
    let rms = |v: &mut dyn Iterator<Item = f64>| (v.map(|x| x * x).sum::<f64>() / points.len() as f64).sqrt();
    Ok(DisplacedFit {
        amplitude,
        rho_dagger,
        width,
        rms_before: rms(&mut points.iter().map(|p| p.1)),
        rms_after: rms(&mut residuals.iter().copied()),
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
        use crate::stats::special::norm_quantile;
    use proptest::prelude::*;

    fn zrec(e: u32, big_n: usize, n: usize, k: usize, z: f64) -> ZScoreRecord {
        ZScoreRecord {
            e_alt: e,
            e_base: 2,
            big_n,
            n,
            k,
            p0: 0.5,
            p1: 0.5,
            m0: 1000,
            m1: 200,
            z: Some(z),
        }
    }

    #[test]
    fn z_score_worked_example() {
        let z = z_score(500, 1000, 80, 200, ZMethod::Pooled).unwrap().unwrap();
        // p̄ = 580/1200, SD = sqrt(p̄(1 − p̄)(1/1000 + 1/200)).
        let p = 580.0 / 1200.0;
        let sd = (p * (1.0 - p) * (0.001 + 0.005f64)).sqrt();
        assert!((sd - 0.038_708_31).abs() < 1e-8);
        assert!((z - 0.1 / sd).abs() < 1e-12);
        assert!((z - 2.583_424_5).abs() < 1e-6);
    }

    #[test]
    fn z_score_edges() {
        assert_eq!(z_score(300, 1000, 60, 200, ZMethod::Pooled).unwrap(), Some(0.0));
        assert_eq!(z_score(1000, 1000, 200, 200, ZMethod::Pooled).unwrap(), None);
        assert_eq!(z_score(0, 1000, 0, 200, ZMethod::Unpooled).unwrap(), None);
        assert!(z_score(1, 0, 1, 1, ZMethod::Pooled).is_err());
    }

    proptest! {
        #[test]
        fn z_score_antisymmetric(m0 in 1u64..500, m1 in 1u64..500, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let s0 = (a * m0 as f64) as u64;
            let s1 = (b * m1 as f64) as u64;
            for method in [ZMethod::Pooled, ZMethod::Unpooled] {
                let z = z_score(s0, m0, s1, m1, method).unwrap();
                let w = z_score(s1, m1, s0, m0, method).unwrap();
                prop_assert_eq!(z.map(|v| -v), w);
            }
        }
    }

    fn records(suite: u32, cells: &[(usize, u64)]) -> Vec<TrialRecord> {
        cells
            .iter()
            .map(|&(k, s)| TrialRecord {
                suite,
                big_n: 100,
                n: 50,
                k,
                trials: 100,
                successes: s,
            })
            .collect()
    }

    #[test]
    fn self_comparison_is_null() {
        let r = records(2, &[(5, 100), (10, 60), (15, 0)]);
        let zs = compare_suites(&r, &r, None, ZMethod::Pooled).unwrap();
        assert_eq!(zs.len(), 3);
        assert!(zs.iter().all(|z| z.z.is_none_or(|v| v == 0.0)));
        assert!(matches!(
            compare_suites(&records(4, &[(7, 1)]), &r, None, ZMethod::Pooled),
            Err(Error::NoCommonCells)
        ));
    }

    #[test]
    fn z_export_round_trip() {
        let r = records(2, &[(5, 100), (10, 60)]);
        let alt = records(4, &[(5, 90), (10, 70)]);
        let zs = compare_suites(&alt, &r, Some(2), ZMethod::Pooled).unwrap();
        let back = parse_zscores(&format_zscores(&zs), None).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in zs.iter().zip(&back) {
            assert_eq!((a.e_alt, a.k), (b.e_alt, b.k));
            assert!((a.z.unwrap() - b.z.unwrap()).abs() < 1e-6);
        }
        assert!(parse_zscores("nope\n", None).is_err());
    }

    #[test]
    fn pp_plot_identity_and_extremes() {
        let n = 1000;
        let z: Vec<f64> = (0..n).map(|i| norm_quantile((i as f64 + 0.5) / n as f64).unwrap()).collect();
        for (t, e) in pp_plot_data(&z).unwrap() {
            assert!((t - e).abs() <= 1.0 / n as f64);
        }
        for (t, e) in pp_plot_data(&[10.0; 5]).unwrap() {
            assert_eq!(e, 1.0);
            assert!(t < 1e-20);
        }
        assert!(pp_plot_data(&[]).is_err());
    }

    #[test]
    fn pp_plot_of_normals_within_ks_bound() {
        let mut rng = CounterRng::new(11);
        let z: Vec<f64> = (0..10_000).map(|_| rng.standard_normal()).collect();
        let dev = pp_plot_data(&z).unwrap().iter().map(|(t, e)| (t - e).abs()).fold(0.0, f64::max);
        assert!(dev < 0.03, "{dev}");
    }

    fn synthetic(f: impl FnMut(u32, usize, f64) -> f64) -> Vec<ZScoreRecord> {
        synthetic_with(3, f)
    }

    fn synthetic_with(cells_per_slice: usize, mut f: impl FnMut(u32, usize, f64) -> f64) -> Vec<ZScoreRecord> {
        let mut out = Vec::new();
        for e in [3u32, 4, 5] {
            for big_n in [200usize, 400, 1600] {
                for i in 1..=9 {
                    let n = big_n * i / 10;
                    for k in (0..cells_per_slice).map(|j| n / 5 + j) {
                        out.push(zrec(e, big_n, n, k, f(e, big_n, n as f64 / big_n as f64)));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn exact_root_n_slope_recovered() {
        let zs = synthetic(|_, big_n, delta| 2.0 / (big_n as f64).sqrt() * (delta - 0.5));
        let m = fit_mean_shift(&zs, ShiftKind::Linear, ShiftScaling::RootNOnly).unwrap();
        assert!(m.fit.rss < 1e-20);
        // The full-dummy probSize:E block is aliased with probSize.
        assert_eq!(m.fit.coefficient("probSize:E5"), None);
        for c in m.ensembles() {
            assert!((c.beta1 - 2.0).abs() < 1e-9);
            assert!(c.alpha1.abs() < 1e-9 && c.alpha0 == 0.0 && c.beta0 == 0.0);
        }
        let full = fit_mean_shift(&zs, ShiftKind::Hinged, ShiftScaling::FreeConstant).unwrap();
        for c in full.ensembles() {
            assert!((c.beta1 - 2.0).abs() < 1e-8, "{c:?}");
            assert!(c.alpha0.abs() < 1e-9 && c.kappa0.abs() < 1e-9 && c.kappa1.abs() < 1e-8);
        }
    }

    #[test]
    fn hinge_recovered() {
        let zs = synthetic(|e, big_n, delta| {
            (1.0 + e as f64) / (big_n as f64).sqrt() * (0.5 - delta).max(0.0)
        });
        let m = fit_mean_shift(&zs, ShiftKind::Hinged, ShiftScaling::RootNOnly).unwrap();
        for c in m.ensembles() {
            assert!((c.kappa1 - (1.0 + c.suite as f64)).abs() < 1e-8, "{c:?}");
        }
    }

    #[test]
    fn single_n_is_degenerate() {
        let zs: Vec<_> = synthetic(|_, _, _| 0.0).into_iter().filter(|r| r.big_n == 200).collect();
        assert!(matches!(
            fit_mean_shift(&zs, ShiftKind::Linear, ShiftScaling::FreeConstant),
            Err(Error::DegenerateDesign(_))
        ));
    }

    #[test]
    fn constant_shift_rejects_root_n_model() {
        let mut rng = CounterRng::new(5);
        let reps = 100;
        let mut rejected = 0;
        for _ in 0..reps {
            // Paper-like layout: 15 cells per transition slice.
            let zs = synthetic_with(15, |_, _, _| 0.5 + rng.standard_normal());
            let nested = fit_mean_shift(&zs, ShiftKind::Linear, ShiftScaling::RootNOnly).unwrap();
            let full = fit_mean_shift(&zs, ShiftKind::Linear, ShiftScaling::FreeConstant).unwrap();
            if mean_shift_anova(&nested, &full).unwrap().p_value < 0.05 {
                rejected += 1;
            }
        }
        assert!(rejected >= 90, "rejected {rejected} of {reps}");
    }

    #[test]
    fn gamma_grid_selects_exact_exponent() {
        let vals: Vec<(u32, usize, f64)> = [(3u32, 1.3), (4, -2.0), (5, 0.7)]
            .iter()
            .flat_map(|&(e, c)| [200usize, 400, 1600].map(|n| (e, n, c / (n as f64).sqrt())))
            .collect();
        let g = scaling_exponent_fit(&vals, &GAMMA_GRID).unwrap();
        assert_eq!(g.best_gamma, 0.5);
        assert!((g.best_r_squared - 1.0).abs() < 1e-12);
        assert!(matches!(
            scaling_exponent_fit(&vals[..1], &GAMMA_GRID),
            Err(Error::DegenerateDesign(_))
        ));
    }

    #[test]
    fn hc_counts_of_normals() {
        let mut rng = CounterRng::new(3);
        let z: Vec<f64> = (0..10_000).map(|_| rng.standard_normal()).collect();
        let rows = hc_counts(&z, &HC_THRESHOLDS);
        let p = 2.0 * norm_cdf(1.0) - 1.0;
        let sd = (1e4 * p * (1.0 - p)).sqrt();
        assert!((rows[0].observed as f64 - 1e4 * p).abs() < 4.0 * sd);
        assert!((rows[0].expected - 6826.89).abs() < 0.01);
        assert!(hc_counts(&[], &HC_THRESHOLDS).iter().all(|r| r.observed == 0 && r.expected == 0.0));
        let row = &hc_counts(&vec![0.0; 394], &[2.0])[0];
        assert!((row.expected - 376.073).abs() < 1e-3);
    }

    #[test]
    fn displaced_model_recovers_amplitude() {
        let (rho_ref, w, c) = (0.3, 0.04, -0.05);
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let rho = 0.15 + 0.01 * i as f64;
                (rho, c * norm_pdf((rho - (rho_ref - w)) / w) / w)
            })
            .collect();
        let fit = displaced_ld50_model(&pts, rho_ref, w).unwrap();
        assert!((fit.amplitude - c).abs() < 1e-12);
        assert!(fit.rms_after < 1e-12 && fit.rms_before > 0.1);
        let peak = (0..=1000).map(|i| 0.2 + 0.0002 * i as f64).max_by(|a, b| fit.mean(*a).abs().total_cmp(&fit.mean(*b).abs())).unwrap();
        assert!((peak - fit.rho_dagger).abs() < 1e-9);
        assert!(matches!(
            displaced_ld50_model(&[(0.2, 1.0), (0.2, 2.0)], 0.3, 0.04),
            Err(Error::DegenerateDesign(_))
        ));
    }
}
