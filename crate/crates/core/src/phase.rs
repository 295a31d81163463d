//! Transition summaries of constant-δ slices: LD50, normalized width, the
//! crude three-quantile probit fit, width-scaling tables and the reference
//! transition curve.
//!
//! All quantile locations come from the linear spline through the raw
//! success fractions; when the spline crosses a level several times the
//! smallest ρ is used.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::ensembles::{CoefficientSign, Suite};
use crate::experiment::TrialRecord;
use crate::linalg::DenseMatrix;
use crate::stats::regression::ols;
use crate::stats::glm::{glm_binomial, GlmFit, LinkKind};
use crate::stats::special::{norm_quantile, norm_sf};
use crate::{Error, Result};

/// `Φ⁻¹(0.9) − Φ⁻¹(0.1)`.
pub const PROBIT_DECILE_SPAN: f64 = 2.563_103_131_089_201;
/// `Φ⁻¹(0.75) − Φ⁻¹(0.25)`.
pub const PROBIT_QUARTILE_SPAN: f64 = 1.348_979_500_392_163_4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicePoint {
    pub rho: f64,
    pub successes: u64,
    pub trials: u64,
}

impl SlicePoint {
    pub fn fraction(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Success counts along one `(suite, N, n)` slice, sorted by ρ = k/n.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSlice {
    pub suite: u32,
    pub big_n: usize,
    pub n: usize,
    points: Vec<SlicePoint>,
}

impl PhaseSlice {
    pub fn new(suite: u32, big_n: usize, n: usize, points: Vec<SlicePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("slice has no points".into()));
        }
        for w in points.windows(2) {
            if !(w[0].rho < w[1].rho) {
                return Err(Error::Domain(format!(
                    "slice rho values must increase strictly ({} then {})",
                    w[0].rho, w[1].rho
                )));
            }
        }
        for p in &points {
            if p.trials == 0 || p.successes > p.trials || !p.rho.is_finite() {
                return Err(Error::Domain(format!(
                    "invalid slice point rho={} S={} M={}",
                    p.rho, p.successes, p.trials
                )));
            }
        }
        Ok(Self {
            suite,
            big_n,
            n,
            points,
        })
    }

    /// Slice from `(rho, success fraction)` pairs, with `trials` per point.
    pub fn from_fractions(pairs: &[(f64, f64)], trials: u64) -> Result<Self> {
        let points = pairs
            .iter()
            .map(|&(rho, p)| SlicePoint {
                rho,
                successes: (p * trials as f64).round() as u64,
                trials,
            })
            .collect();
        Self::new(0, 0, 0, points)
    }

    pub fn points(&self) -> &[SlicePoint] {
        &self.points
    }

    pub fn delta(&self) -> f64 {
        self.n as f64 / self.big_n as f64
    }

    fn curve(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.rho, p.fraction())).collect()
    }
}

/// Groups records into slices keyed by `(E, N, n)`, in key order.
pub fn slices_from_records(records: &[TrialRecord]) -> Result<Vec<PhaseSlice>> {
    let mut groups: BTreeMap<(u32, usize, usize), BTreeMap<usize, (u64, u64)>> = BTreeMap::new();
    for r in records {
        let e = groups
            .entry((r.suite, r.big_n, r.n))
            .or_default()
            .entry(r.k)
            .or_insert((0, 0));
        e.0 += r.successes;
        e.1 += r.trials;
    }
    groups
        .into_iter()
        .map(|((suite, big_n, n), cells)| {
            let points = cells
                .into_iter()
                .map(|(k, (s, m))| SlicePoint {
                    rho: k as f64 / n as f64,
                    successes: s,
                    trials: m,
                })
                .collect();
            PhaseSlice::new(suite, big_n, n, points)
        })
        .collect()
}

/// Smallest `x` at which the linear spline through `curve` equals `level`.
pub fn first_crossing(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    for (i, &(x, y)) in curve.iter().enumerate() {
        if y == level {
            return Some(x);
        }
        if let Some(&(x1, y1)) = curve.get(i + 1) {
            if (y - level) * (y1 - level) < 0.0 {
                return Some(x + (level - y) / (y1 - y) * (x1 - x));
            }
        }
    }
    None
}

fn success_quantile(slice: &PhaseSlice, level: f64) -> Result<f64> {
    first_crossing(&slice.curve(), level).ok_or(Error::NoCrossing(level))
}

/// ρ at which the interpolated success fraction first reaches one half.
pub fn estimate_ld50(slice: &PhaseSlice) -> Result<f64> {
    success_quantile(slice, 0.5)
}

/// Failure-fraction quantile: smallest ρ where `1 − S/M` equals `alpha`.
pub fn failure_quantile(slice: &PhaseSlice, alpha: f64) -> Result<f64> {
    let curve: Vec<(f64, f64)> = slice.curve().into_iter().map(|(r, p)| (r, 1.0 - p)).collect();
    first_crossing(&curve, alpha).ok_or(Error::NoCrossing(alpha))
}

/// `(q₀.₉ − q₀.₁) / (Φ⁻¹(0.9) − Φ⁻¹(0.1))` on failure-fraction quantiles.
pub fn estimate_width(slice: &PhaseSlice) -> Result<f64> {
    let q10 = failure_quantile(slice, 0.1)?;
    let q90 = failure_quantile(slice, 0.9)?;
    Ok((q90 - q10) / PROBIT_DECILE_SPAN)
}

/// Probit curve `S/M = Φ̄(a + bρ)` matched to three interpolated quantiles.
#[derive(Clone, Debug, PartialEq)]
pub struct CrudeProbitFit {
    pub a: f64,
    pub b: f64,
    /// ρ at success fractions ¾, ½ and ¼.
    pub q75: f64,
    pub q50: f64,
    pub q25: f64,
    /// `S/M − Φ̄(a + bρ)` per slice point.
    pub residuals: Vec<f64>,
}

impl CrudeProbitFit {
    pub fn success_probability(&self, rho: f64) -> f64 {
        norm_sf(self.a + self.b * rho)
    }

    pub fn ld50(&self) -> f64 {
        -self.a / self.b
    }
}

pub fn crude_probit_fit(slice: &PhaseSlice) -> Result<CrudeProbitFit> {
    let q75 = success_quantile(slice, 0.75)?;
    let q50 = success_quantile(slice, 0.5)?;
    let q25 = success_quantile(slice, 0.25)?;
    if !(q25 > q75) {
        return Err(Error::Domain(format!(
            "success quartiles out of order: rho(0.25) = {q25}, rho(0.75) = {q75}"
        )));
    }
    let b = PROBIT_QUARTILE_SPAN / (q25 - q75);
    let a = -b * q50;
    let residuals = slice
        .points
        .iter()
        .map(|p| p.fraction() - norm_sf(a + b * p.rho))
        .collect();
    Ok(CrudeProbitFit {
        a,
        b,
        q75,
        q50,
        q25,
        residuals,
    })
}

/// IRLS binomial fit of the slice with the given link.
pub fn glm_fit_slice(slice: &PhaseSlice, link: LinkKind) -> Result<GlmFit> {
    let rho: Vec<f64> = slice.points.iter().map(|p| p.rho).collect();
    let s: Vec<f64> = slice.points.iter().map(|p| p.successes as f64).collect();
    let m: Vec<f64> = slice.points.iter().map(|p| p.trials as f64).collect();
    glm_binomial(&rho, &s, &m, link)
}

/// Asymptotic transition curves of the simplex (`rho_t`) and the
/// cross-polytope (`rho_c`), as piecewise-linear functions of δ.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceCurve {
    knots: Vec<(f64, f64, f64)>,
}

pub const REFERENCE_HEADER: &str = "delta rhoT rhoC";

impl ReferenceCurve {
    pub fn new(knots: Vec<(f64, f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Empty("reference curve has no knots".into()));
        }
        for &(d, t, c) in &knots {
            if !(d > 0.0 && d < 1.0) || !t.is_finite() || !c.is_finite() {
                return Err(Error::Domain(format!("reference knot ({d}, {t}, {c}) out of range")));
            }
            if t < c {
                return Err(Error::OrderViolation(d));
            }
        }
        for w in knots.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::Domain(format!(
                    "reference delta values must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
            if w[1].1 < w[0].1 || w[1].2 < w[0].2 {
                return Err(Error::Domain(format!(
                    "reference curves must be nondecreasing in delta (between {} and {})",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64, f64)] {
        &self.knots
    }

    /// `(ρT(δ), ρC(δ))` by linear interpolation between knots.
    pub fn eval(&self, delta: f64) -> Result<(f64, f64)> {
        let (first, last) = (self.knots[0], self.knots[self.knots.len() - 1]);
        if !(delta >= first.0 && delta <= last.0) {
            return Err(Error::Domain(format!(
                "delta {delta} outside reference range [{}, {}]",
                first.0, last.0
            )));
        }
        let i = self.knots.partition_point(|k| k.0 <= delta);
        if i == self.knots.len() {
            return Ok((last.1, last.2));
        }
        let (d0, t0, c0) = self.knots[i - 1];
        let (d1, t1, c1) = self.knots[i];
        let s = (delta - d0) / (d1 - d0);
        Ok((t0 + s * (t1 - t0), c0 + s * (c1 - c0)))
    }

    /// Reference ρ for a suite: the simplex curve for nonnegative
    /// coefficients, the cross-polytope curve for signed ones.
    pub fn rho_for(&self, suite: u32, delta: f64) -> Result<f64> {
        let (t, c) = self.eval(delta)?;
        Ok(match Suite::from_id(suite)?.sign {
            CoefficientSign::NonNegative => t,
            CoefficientSign::Signed => c,
        })
    }

    pub fn parse(text: &str, path: Option<&Path>) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.map(Path::to_path_buf),
            line,
            message,
        };
        let mut knots = Vec::new();
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                if line.split_whitespace().collect::<Vec<_>>().join(" ") != REFERENCE_HEADER {
                    return Err(err(i + 1, format!("expected header `{REFERENCE_HEADER}`")));
                }
                header_seen = true;
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| err(i + 1, format!("`{t}`: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != 3 {
                return Err(err(i + 1, format!("expected 3 fields, found {}", vals.len())));
            }
            knots.push((vals[0], vals[1], vals[2]));
        }
        if !header_seen {
            return Err(err(0, "missing header".into()));
        }
        Self::new(knots)
    }

    pub fn format(&self) -> String {
        let mut out = format!("{REFERENCE_HEADER}\n");
        for (d, t, c) in &self.knots {
            out.push_str(&format!("{d} {t} {c}\n"));
        }
        out
    }
}

pub fn load_reference_curve(path: &Path) -> Result<ReferenceCurve> {
    let text = std::fs::read_to_string(path)?;
    ReferenceCurve::parse(&text, Some(path))
}

/// Extrapolated transition location `a` of `LD50(N) ≈ a + c/N`, fitted
/// per coefficient sign and δ over the supplied summaries (a single N
/// yields the mean LD50). Every δ must be covered by both signs.
pub fn extrapolate_reference(summaries: &[TransitionSummary]) -> Result<ReferenceCurve> {
    let mut groups: BTreeMap<(u64, bool), Vec<(usize, f64)>> = BTreeMap::new();
    for s in summaries {
        let signed = Suite::from_id(s.suite)?.sign == CoefficientSign::Signed;
        let key = (s.delta() * 1e6).round() as u64;
        groups.entry((key, signed)).or_default().push((s.big_n, s.ld50));
    }
    let limit = |pts: &[(usize, f64)]| -> Result<f64> {
        let distinct: std::collections::BTreeSet<usize> = pts.iter().map(|p| p.0).collect();
        if distinct.len() < 2 {
            return Ok(pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64);
        }
        let rows: Vec<[f64; 2]> = pts.iter().map(|&(n, _)| [1.0, 1.0 / n as f64]).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let fit = ols(&DenseMatrix::from_rows(&rows)?, &y, &["(Intercept)", "invN"], true)?;
        Ok(fit.coefficients_or_zero()[0])
    };
    let deltas: std::collections::BTreeSet<u64> = groups.keys().map(|k| k.0).collect();
    let mut knots = Vec::with_capacity(deltas.len());
    for key in deltas {
        let delta = key as f64 / 1e6;
        let (Some(t), Some(c)) = (groups.get(&(key, false)), groups.get(&(key, true))) else {
            return Err(Error::Empty(format!(
                "delta {delta} needs slices of both coefficient signs"
            )));
        };
        knots.push((delta, limit(t)?, limit(c)?));
    }
    ReferenceCurve::new(knots)
}

/// Transition summary of one slice.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionSummary {
    pub suite: u32,
    pub big_n: usize,
    pub n: usize,
    pub ld50: f64,
    pub width: Option<f64>,
    /// `LD50 − ρ_ref(δ)` when a reference curve was supplied.
    pub reference_gap: Option<f64>,
}

impl TransitionSummary {
    pub fn delta(&self) -> f64 {
        self.n as f64 / self.big_n as f64
    }
}

/// LD50 is required; the width is reported when both deciles are crossed.
pub fn summarize(slice: &PhaseSlice, reference: Option<&ReferenceCurve>) -> Result<TransitionSummary> {
    let ld50 = estimate_ld50(slice)?;
    let width = match estimate_width(slice) {
        Ok(w) => Some(w),
        Err(Error::NoCrossing(_)) => None,
        Err(e) => return Err(e),
    };
    let reference_gap = match reference {
        Some(r) => Some(ld50 - r.rho_for(slice.suite, slice.delta())?),
        None => None,
    };
    Ok(TransitionSummary {
        suite: slice.suite,
        big_n: slice.big_n,
        n: slice.n,
        ld50,
        width,
        reference_gap,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WidthRow {
    pub delta: f64,
    pub big_n: usize,
    pub width: f64,
    /// `√N · w`.
    pub scaled_width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftRow {
    pub big_n: usize,
    pub slices: usize,
    pub median_gap: f64,
    /// Median of `N^γ (LD50 − ρ_ref)`.
    pub median_scaled_gap: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScalingTable {
    pub gamma: f64,
    pub widths: Vec<WidthRow>,
    pub drift: Vec<DriftRow>,
}

impl fmt::Display for ScalingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "delta N width sqrtN_width")?;
        for r in &self.widths {
            writeln!(f, "{:.4} {} {:.6} {:.4}", r.delta, r.big_n, r.width, r.scaled_width)?;
        }
        writeln!(f)?;
        writeln!(f, "N slices median_gap median_N^{}_gap", self.gamma)?;
        for r in &self.drift {
            writeln!(
                f,
                "{} {} {:.6} {:.4}",
                r.big_n, r.slices, r.median_gap, r.median_scaled_gap
            )?;
        }
        Ok(())
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    })
}

/// Per-slice `√N·w` and, per N, the median over δ of `N^γ (LD50 − ρ_ref)`.
pub fn width_scaling_table(
    slices: &[PhaseSlice],
    reference: &ReferenceCurve,
    gamma: f64,
) -> Result<ScalingTable> {
    let mut widths = Vec::new();
    let mut gaps: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in slices {
        let w = estimate_width(s)?;
        widths.push(WidthRow {
            delta: s.delta(),
            big_n: s.big_n,
            width: w,
            scaled_width: (s.big_n as f64).sqrt() * w,
        });
        let gap = estimate_ld50(s)? - reference.rho_for(s.suite, s.delta())?;
        gaps.entry(s.big_n).or_default().push(gap);
    }
    widths.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.big_n.cmp(&b.big_n)));
    let drift = gaps
        .into_iter()
        .map(|(big_n, mut g)| {
            let slices = g.len();
            let median_gap = median(&mut g).expect("non-empty group");
            DriftRow {
                big_n,
                slices,
                median_gap,
                median_scaled_gap: (big_n as f64).powf(gamma) * median_gap,
            }
        })
        .collect();
    Ok(ScalingTable {
        gamma,
        widths,
        drift,
    })
}

/// Exact probit slice `S/M = Φ̄((ρ − ld50)/w)` on `points` equally spaced
/// ρ values over `[lo, hi]`, with fractional counts rounded to `trials`.
pub fn probit_slice(ld50: f64, width: f64, lo: f64, hi: f64, points: usize, trials: u64) -> Result<PhaseSlice> {
    let pairs: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let rho = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            (rho, norm_sf((rho - ld50) / width))
        })
        .collect();
    PhaseSlice::from_fractions(&pairs, trials)
}

/// Probit quantile helper: ρ at success fraction `p` of `Φ̄((ρ − ld50)/w)`.
pub fn probit_success_quantile(ld50: f64, width: f64, p: f64) -> Result<f64> {
    Ok(ld50 + width * norm_quantile(1.0 - p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn slice(pairs: &[(f64, f64)]) -> PhaseSlice {
        PhaseSlice::from_fractions(pairs, 1000).unwrap()
    }

    #[test]
    fn extrapolation_recovers_inverse_n_limit() {
        let mut rows = Vec::new();
        for &big_n in &[100usize, 200, 400] {
            for (suite, base) in [(1u32, 0.6), (2, 0.4)] {
                for &d in &[0.25, 0.5] {
                    rows.push(TransitionSummary {
                        suite,
                        big_n,
                        n: (d * big_n as f64) as usize,
                        ld50: base + d / 4.0 + 3.0 / big_n as f64,
                        width: None,
                        reference_gap: None,
                    });
                }
            }
        }
        let curve = extrapolate_reference(&rows).unwrap();
        let (t, c) = curve.eval(0.5).unwrap();
        assert!((t - 0.725).abs() < 1e-10 && (c - 0.525).abs() < 1e-10);
        rows.retain(|r| r.suite == 1);
        assert!(matches!(extrapolate_reference(&rows), Err(Error::Empty(_))));
    }

    #[test]
    fn ld50_linear_midpoint() {
        let s = slice(&[(0.2, 1.0), (0.4, 0.0)]);
        assert!((estimate_ld50(&s).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ld50_takes_smallest_crossing() {
        let s = slice(&[(0.1, 1.0), (0.2, 0.4), (0.3, 0.6), (0.4, 0.0)]);
        let l = estimate_ld50(&s).unwrap();
        assert!((l - (0.1 + 0.1 * 0.5 / 0.6)).abs() < 1e-12);
    }

    #[test]
    fn all_success_has_no_crossing() {
        let s = slice(&[(0.1, 1.0), (0.2, 1.0)]);
        assert!(matches!(estimate_width(&s), Err(Error::NoCrossing(_))));
        assert!(matches!(estimate_ld50(&s), Err(Error::NoCrossing(_))));
    }

    #[test]
    fn probit_width_recovered() {
        let (l, w) = (0.35, 0.04);
        let s = probit_slice(l, w, 0.2, 0.5, 301, 1_000_000).unwrap();
        let spacing = 0.3 / 300.0;
        assert!((estimate_width(&s).unwrap() - w).abs() < spacing);
        assert!((estimate_ld50(&s).unwrap() - l).abs() < spacing);
    }

    #[test]
    fn crude_fit_on_exact_probit() {
        let (l, w) = (0.4, 0.05);
        let s = probit_slice(l, w, 0.2, 0.6, 401, 1_000_000).unwrap();
        let fit = crude_probit_fit(&s).unwrap();
        assert!(fit.residuals.iter().all(|r| r.abs() < 2e-3));
        assert!((fit.success_probability(fit.q50) - 0.5).abs() < 1e-12);
        assert!((fit.b - 1.0 / w).abs() / (1.0 / w) < 0.01);
    }

    #[test]
    fn crude_fit_close_to_irls() {
        let (l, w) = (0.3, 0.05);
        let s = probit_slice(l, w, 0.15, 0.45, 16, 400).unwrap();
        let crude = crude_probit_fit(&s).unwrap();
        let irls = glm_fit_slice(&s, LinkKind::Probit).unwrap();
        assert!((crude.a - irls.a).abs() / irls.a.abs() < 0.1);
        assert!((crude.b - irls.b).abs() / irls.b.abs() < 0.1);
    }

    #[test]
    fn reference_interpolates_and_validates() {
        let r = ReferenceCurve::parse("delta rhoT rhoC\n0.2 0.3 0.2\n0.4 0.5 0.3\n", None).unwrap();
        let (t, c) = r.eval(0.3).unwrap();
        assert!((t - 0.4).abs() < 1e-12 && (c - 0.25).abs() < 1e-12);
        assert!(r.eval(0.5).is_err());
        assert!(matches!(
            ReferenceCurve::parse("delta rhoT rhoC\n0.2 0.1 0.2\n", None),
            Err(Error::OrderViolation(d)) if d == 0.2
        ));
        assert!(matches!(
            ReferenceCurve::parse("delta rhoT rhoC\n0.2 x 0.2\n", None),
            Err(Error::Parse { line: 2, .. })
        ));
        let round = ReferenceCurve::parse(&r.format(), None).unwrap();
        assert_eq!(round, r);
    }

    #[test]
    fn slices_grouped_from_records() {
        let rec = |n, k, s| TrialRecord {
            suite: 2,
            big_n: 100,
            n,
            k,
            trials: 10,
            successes: s,
        };
        let slices = slices_from_records(&[rec(50, 20, 2), rec(50, 10, 9), rec(40, 5, 10), rec(50, 10, 1)]).unwrap();
        assert_eq!(slices.len(), 2);
        assert_eq!(slices[1].points()[0], SlicePoint { rho: 0.2, successes: 10, trials: 20 });
    }

    #[test]
    fn scaling_table_constant_for_root_n_widths() {
        let reference = ReferenceCurve::new(vec![(0.1, 0.9, 0.5), (0.9, 0.95, 0.6)]).unwrap();
        let slices: Vec<PhaseSlice> = [100usize, 400, 1600]
            .iter()
            .map(|&big_n| {
                let w = 0.7 / (big_n as f64).sqrt();
                let mut s = probit_slice(0.55, w, 0.55 - 5.0 * w, 0.55 + 5.0 * w, 2001, 1 << 40).unwrap();
                s.suite = 2;
                s.big_n = big_n;
                s.n = big_n / 2;
                s
            })
            .collect();
        let t = width_scaling_table(&slices, &reference, 0.5).unwrap();
        for r in &t.widths {
            assert!((r.scaled_width - 0.7).abs() < 1e-3, "{r:?}");
        }
        let empty = width_scaling_table(&[], &reference, 0.5).unwrap();
        assert!(empty.widths.is_empty() && empty.drift.is_empty());
    }

    proptest! {
        #[test]
        fn refinement_on_interpolant_is_invariant(
            fr in proptest::collection::vec(0.0f64..1.0, 4..10),
            t in 0.05f64..0.95,
        ) {
            let mut fr = fr;
            fr.sort_by(|a, b| b.total_cmp(a));
            fr[0] = 1.0;
            *fr.last_mut().unwrap() = 0.0;
            let pairs: Vec<(f64, f64)> = fr.iter().enumerate().map(|(i, &p)| (i as f64 * 0.05, p)).collect();
            let base = first_crossing(&pairs, 0.5).unwrap();
            let mut refined = Vec::new();
            for w in pairs.windows(2) {
                refined.push(w[0]);
                let x = w[0].0 + t * (w[1].0 - w[0].0);
                refined.push((x, w[0].1 + t * (w[1].1 - w[0].1)));
            }
            refined.push(*pairs.last().unwrap());
            let fine = first_crossing(&refined, 0.5).unwrap();
            prop_assert!((fine - base).abs() < 1e-12);
        }
    }
}
