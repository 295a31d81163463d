//! Exact ground truth for small instances.
//!
//! Face survival is decided by enumerating every vertex of the feasible
//! set `{x : A x = y}` (with `x ≥ 0` for the simplex): a vertex is
//! supported on linearly independent columns, so it is found by solving
//! `A_S x_S = y` over all column subsets `S` of size `rank(A)`. The
//! interior point `x0` of a face is the unique optimum exactly when no
//! other vertex is feasible with objective at most that of `x0`.

use itertools::Itertools;
use num_rational::Ratio;
use rayon::prelude::*;

use crate::linalg::{lu_factor, norm1, norm_inf, DenseMatrix, LuFactors};
use crate::ensembles::{sample_matrix, Ensemble};
use crate::experiment::exact_recon;
use crate::lp::{solve_l1, solve_nonneg, LpStatus, StandardLp, ZERO_TOL};
use crate::rng::CounterRng;
use crate::{Error, Result};

pub const DEFAULT_BUDGET: u128 = 1_000_000;

const RANK_TOL: f64 = 1e-10;
const DECISION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolytopeKind {
    /// Standard simplex `T^(N−1)`; faces are reached by nonnegative vectors.
    Simplex,
    /// Cross-polytope `C^N`; faces carry a sign per support index.
    CrossPolytope,
}

/// `C(n, k)` in checked `u128` arithmetic.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c · (n − i) is divisible by (i + 1) after the multiplication.
        c = c
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::Overflow(format!("C({n}, {k})")))?
            / (i + 1) as u128;
    }
    Ok(c)
}

/// Number of k-faces: `C(N, k+1)` for the simplex and `2^(k+1) C(N, k+1)`
/// for the cross-polytope.
pub fn face_count(kind: PolytopeKind, big_n: usize, k: usize) -> Result<u128> {
    if k >= big_n {
        return Err(Error::Domain(format!("face dimension {k} needs k < N = {big_n}")));
    }
    let c = binomial(big_n as u64, k as u64 + 1)?;
    match kind {
        PolytopeKind::Simplex => Ok(c),
        PolytopeKind::CrossPolytope => 1u128
            .checked_shl(k as u32 + 1)
            .filter(|_| k < 127)
            .and_then(|p| p.checked_mul(c))
            .ok_or_else(|| Error::Overflow(format!("face count of C^{big_n} at k = {k}"))),
    }
}

/// A k-face: `k + 1` support indices and, for the cross-polytope, a sign
/// per index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceSpec {
    pub kind: PolytopeKind,
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
}

impl FaceSpec {
    pub fn new(kind: PolytopeKind, support: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let mut sorted = support.clone();
        sorted.sort_unstable();
        if support.is_empty() || sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("face support must be non-empty and distinct".into()));
        }
        let signs_ok = match kind {
            PolytopeKind::Simplex => signs.is_empty() || signs.iter().all(|&s| s == 1),
            PolytopeKind::CrossPolytope => {
                signs.len() == support.len() && signs.iter().all(|&s| s == 1 || s == -1)
            }
        };
        if !signs_ok {
            return Err(Error::Domain("face signs do not match the polytope".into()));
        }
        let signs = if kind == PolytopeKind::Simplex {
            vec![1; support.len()]
        } else {
            signs
        };
        Ok(Self { kind, support, signs })
    }

    /// Uniformly random k-face of a polytope in dimension `big_n`.
    pub fn random(kind: PolytopeKind, big_n: usize, k: usize, rng: &mut CounterRng) -> Result<Self> {
        if k >= big_n {
            return Err(Error::Domain(format!("face dimension {k} needs k < N = {big_n}")));
        }
        let support = rng.sample_without_replacement(big_n, k + 1);
        let signs = match kind {
            PolytopeKind::Simplex => vec![1; k + 1],
            PolytopeKind::CrossPolytope => (0..=k).map(|_| if rng.bernoulli(0.5) { 1 } else { -1 }).collect(),
        };
        Self::new(kind, support, signs)
    }

    pub fn dimension(&self) -> usize {
        self.support.len() - 1
    }

    /// Point of the face with the given positive weights on its support.
    pub fn point(&self, big_n: usize, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.support.len() || self.support.iter().any(|&j| j >= big_n) {
            return Err(Error::DimensionMismatch("face point weights or support".into()));
        }
        let mut x = vec![0.0; big_n];
        for ((&j, &s), &w) in self.support.iter().zip(&self.signs).zip(weights) {
            x[j] = s as f64 * w;
        }
        Ok(x)
    }

    /// Equal-weight interior point: entries `±1/(k+1)` on the support.
    pub fn interior_point(&self, big_n: usize) -> Result<Vec<f64>> {
        let w = 1.0 / self.support.len() as f64;
        self.point(big_n, &vec![w; self.support.len()])
    }
}

/// Numerical rank by Gaussian elimination with partial pivoting.
pub fn rank_of_columns(a: &DenseMatrix, cols: &[usize]) -> usize {
    let m = a.rows();
    let mut w: Vec<Vec<f64>> = cols.iter().map(|&j| a.column(j)).collect();
    let scale = w.iter().map(|c| norm_inf(c)).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let tol = RANK_TOL * scale * m.max(cols.len()) as f64;
    let mut rank = 0;
    for c in 0..w.len() {
        // Pivot on the largest remaining entry of this column.
        let (p, &v) = match w[c][rank..]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        {
            Some((i, v)) => (i + rank, v),
            None => break,
        };
        if v.abs() <= tol {
            continue;
        }
        for col in w.iter_mut().skip(c) {
            col.swap(rank, p);
        }
        let pivot = w[c].clone();
        for col in w.iter_mut().skip(c + 1) {
            let f = col[rank] / pivot[rank];
            if f != 0.0 {
                for i in rank..m {
                    col[i] -= f * pivot[i];
                }
            }
        }
        rank += 1;
        if rank == m {
            break;
        }
    }
    rank
}

/// Result of the exhaustive uniqueness check for one face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceVerdict {
    pub survives: bool,
    /// Every `min(n, N)` columns of `A` are linearly independent.
    pub general_position: bool,
}

struct VertexEnumerator<'a> {
    a: &'a DenseMatrix,
    bases: Vec<(Vec<usize>, LuFactors)>,
    /// `rank(A) = n`, so each basis is square and needs no residual check.
    square: bool,
    general_position: bool,
}

impl<'a> VertexEnumerator<'a> {
    fn new(a: &'a DenseMatrix, budget: u128) -> Result<Self> {
        let (n, big_n) = (a.rows(), a.cols());
        let all: Vec<usize> = (0..big_n).collect();
        let r = rank_of_columns(a, &all);
        let subsets = binomial(big_n as u64, r as u64)?;
        if subsets > budget {
            return Err(Error::TooLarge { needed: subsets, budget });
        }
        let square = r == n;
        let mut bases = Vec::new();
        for cols in (0..big_n).combinations(r) {
            if rank_of_columns(a, &cols) < r {
                continue;
            }
            let sub = a.select_columns(&cols);
            let m = if square { sub } else { sub.transpose().matmul(&sub)? };
            if let Ok(lu) = lu_factor(&m) {
                bases.push((cols, lu));
            }
        }
        let general_position = r == n.min(big_n) && bases.len() as u128 == subsets;
        Ok(Self {
            a,
            bases,
            square,
            general_position,
        })
    }

    /// Vertices of `{x : A x = y}` as full-length vectors, duplicates
    /// included.
    fn vertices<'s>(&'s self, y: &'s [f64]) -> impl Iterator<Item = Vec<f64>> + 's {
        let big_n = self.a.cols();
        let yscale = 1.0 + norm_inf(y);
        self.bases.iter().filter_map(move |(cols, lu)| {
            let sub = self.a.select_columns(cols);
            let xs = if self.square {
                lu.solve(y).ok()?
            } else {
                let xs = lu.solve(&sub.tr_mul_vec(y).ok()?).ok()?;
                let fit = sub.mul_vec(&xs).ok()?;
                let resid = fit.iter().zip(y).map(|(f, v)| (f - v).abs()).fold(0.0, f64::max);
                if resid > DECISION_TOL * yscale {
                    return None;
                }
                xs
            };
            let mut x = vec![0.0; big_n];
            for (&j, &v) in cols.iter().zip(&xs) {
                x[j] = v;
            }
            Some(x)
        })
    }

    fn decide(&self, face: &FaceSpec) -> Result<bool> {
        let big_n = self.a.cols();
        if face.support.iter().any(|&j| j >= big_n) {
            return Err(Error::DimensionMismatch(format!(
                "face support outside 0..{big_n}"
            )));
        }
        if rank_of_columns(self.a, &face.support) < face.support.len() {
            // A null vector inside the support gives other solutions.
            return Ok(false);
        }
        let x0 = face.interior_point(big_n)?;
        let y = self.a.mul_vec(&x0)?;
        let objective = |x: &[f64]| match face.kind {
            PolytopeKind::Simplex => x.iter().sum::<f64>(),
            PolytopeKind::CrossPolytope => norm1(x),
        };
        let obj0 = objective(&x0);
        let xtol = DECISION_TOL * norm_inf(&x0).max(1.0);
        let otol = DECISION_TOL * obj0.abs().max(1.0);
        for x in self.vertices(&y) {
            if face.kind == PolytopeKind::Simplex && x.iter().any(|&v| v < -xtol) {
                continue;
            }
            let distinct = x.iter().zip(&x0).any(|(a, b)| (a - b).abs() > xtol);
            if distinct && objective(&x) <= obj0 + otol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Whether the image of `face` under `A` is a face of the projected
/// polytope, i.e. whether its equal-weight interior point is the unique
/// solution of the matching recovery program.
pub fn face_survives(a: &DenseMatrix, face: &FaceSpec, budget: u128) -> Result<FaceVerdict> {
    let e = VertexEnumerator::new(a, budget)?;
    Ok(FaceVerdict {
        survives: e.decide(face)?,
        general_position: e.general_position,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SurvivalFraction {
    pub survived: u128,
    pub total: u128,
    pub general_position: bool,
}

impl SurvivalFraction {
    pub fn ratio(&self) -> Ratio<u128> {
        Ratio::new(self.survived, self.total)
    }

    pub fn value(&self) -> f64 {
        self.survived as f64 / self.total as f64
    }
}

fn all_faces(kind: PolytopeKind, big_n: usize, k: usize) -> Vec<FaceSpec> {
    let mut out = Vec::new();
    for support in (0..big_n).combinations(k + 1) {
        match kind {
            PolytopeKind::Simplex => out.push(FaceSpec {
                kind,
                signs: vec![1; k + 1],
                support,
            }),
            PolytopeKind::CrossPolytope => {
                for mask in 0u64..1 << (k + 1) {
                    let signs = (0..=k).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
                    out.push(FaceSpec {
                        kind,
                        support: support.clone(),
                        signs,
                    });
                }
            }
        }
    }
    out
}

/// Fraction of all k-faces that survive projection by `A`, exactly.
pub fn survival_fraction(a: &DenseMatrix, kind: PolytopeKind, k: usize, budget: u128) -> Result<SurvivalFraction> {
    let total = face_count(kind, a.cols(), k)?;
    if total > budget {
        return Err(Error::TooLarge { needed: total, budget });
    }
    let e = VertexEnumerator::new(a, budget)?;
    let faces = all_faces(kind, a.cols(), k);
    debug_assert_eq!(faces.len() as u128, total);
    let verdicts: Vec<bool> = faces.par_iter().map(|f| e.decide(f)).collect::<Result<_>>()?;
    Ok(SurvivalFraction {
        survived: verdicts.iter().filter(|&&v| v).count() as u128,
        total,
        general_position: e.general_position,
    })
}

/// Smallest number of linearly dependent columns, or `None` when all
/// columns are independent.
pub fn exact_spark(a: &DenseMatrix, budget: u128) -> Result<Option<usize>> {
    let (n, big_n) = (a.rows(), a.cols());
    let mut visited: u128 = 0;
    for s in 1..=big_n.min(n + 1) {
        visited = visited.saturating_add(binomial(big_n as u64, s as u64)?);
        if visited > budget {
            return Err(Error::TooLarge { needed: visited, budget });
        }
        let dependent = (0..big_n)
            .combinations(s)
            .par_bridge()
            .any(|cols| rank_of_columns(a, &cols) < s);
        if dependent {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Upper bound on the spark: for each column `j`, the support size of the
/// ℓ1-minimal null vector with `z_j = 1`; the minimum over columns.
pub fn spark_plus(a: &DenseMatrix) -> Result<usize> {
    let (n, big_n) = (a.rows(), a.cols());
    let mut best: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    rows.push(vec![0.0; big_n]);
    let mut rhs = vec![0.0; n + 1];
    rhs[n] = 1.0;
    for j in 0..big_n {
        rows[n].iter_mut().for_each(|v| *v = 0.0);
        rows[n][j] = 1.0;
        let aug = DenseMatrix::from_rows(&rows)?;
        let Ok(sol) = solve_l1(&aug, &rhs) else {
            continue;
        };
        if sol.status != LpStatus::Optimal {
            continue;
        }
        let nnz = sol.x.iter().filter(|v| v.abs() > ZERO_TOL).count();
        best = Some(best.map_or(nnz, |b| b.min(nnz)));
        if best == Some(1) {
            break;
        }
    }
    best.ok_or(Error::AllColumnsFailed)
}

/// Optimum of a standard-form LP by enumerating every basis: the smallest
/// objective over basic solutions with `x_B ≥ −tol`, or `None` when no
/// basic solution is feasible. Meaningful only for LPs bounded below.
pub fn lp_enumeration_optimum(lp: &StandardLp, budget: u128) -> Result<Option<(f64, Vec<f64>)>> {
    let a = lp.constraints();
    let (m, n) = (a.rows(), a.cols());
    let all: Vec<usize> = (0..n).collect();
    let r = rank_of_columns(a, &all);
    let subsets = binomial(n as u64, r as u64)?;
    if subsets > budget {
        return Err(Error::TooLarge { needed: subsets, budget });
    }
    let b = lp.rhs();
    let bscale = 1.0 + norm_inf(b);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for cols in (0..n).combinations(r) {
        if rank_of_columns(a, &cols) < r {
            continue;
        }
        let sub = a.select_columns(&cols);
        let xs = if r == m {
            match lu_factor(&sub).and_then(|lu| lu.solve(b)) {
                Ok(x) => x,
                Err(_) => continue,
            }
        } else {
            let normal = sub.transpose().matmul(&sub)?;
            let Ok(x) = lu_factor(&normal).and_then(|lu| lu.solve(&sub.tr_mul_vec(b)?)) else {
                continue;
            };
            let fit = sub.mul_vec(&x)?;
            if fit.iter().zip(b).any(|(f, v)| (f - v).abs() > DECISION_TOL * bscale) {
                continue;
            }
            x
        };
        if xs.iter().any(|&v| v < -DECISION_TOL * bscale) {
            continue;
        }
        let mut x = vec![0.0; n];
        for (&j, &v) in cols.iter().zip(&xs) {
            x[j] = v.max(0.0);
        }
        let obj: f64 = lp.costs().iter().zip(&x).map(|(c, v)| c * v).sum();
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, x));
        }
    }
    Ok(best)
}

/// Random standard-form LP that is feasible and bounded: Gaussian `A`,
/// `b = A x̄` for uniform `x̄ ≥ 0` and costs uniform on `(0, 1]`.
pub fn random_bounded_lp(m: usize, n: usize, rng: &mut CounterRng) -> Result<StandardLp> {
    let a = sample_matrix(&Ensemble::Gaussian, m, n, rng.next_word())?;
    let xbar: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let b = a.mul_vec(&xbar)?;
    let c: Vec<f64> = (0..n).map(|_| rng.uniform_open_closed()).collect();
    StandardLp::new(c, a, b)
}

/// Callback applied to each solver output before it is judged.
pub type SolutionHook<'a> = &'a dyn Fn(&mut [f64]);

/// Monte Carlo recovery rate over uniformly drawn k-faces compared with
/// the exact survival fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceRecoveryCheck {
    pub exact: SurvivalFraction,
    pub draws: u64,
    pub successes: u64,
}

impl FaceRecoveryCheck {
    /// `|p̂ − p| / sqrt(p(1−p)/draws)`; zero-variance cases demand equality.
    pub fn deviation_sds(&self) -> f64 {
        let p = self.exact.value();
        let phat = self.successes as f64 / self.draws as f64;
        let sd = (p * (1.0 - p) / self.draws as f64).sqrt();
        if sd == 0.0 {
            if phat == p { 0.0 } else { f64::INFINITY }
        } else {
            (phat - p).abs() / sd
        }
    }
}

/// Draws `draws` faces uniformly, places a random point in each (positive
/// weights on the support, signs from the face), solves the matching
/// recovery program and counts exact recoveries. `corrupt` perturbs each
/// solver output before it is judged and exists for fault-injection tests.
pub fn face_recovery_check(
    a: &DenseMatrix,
    kind: PolytopeKind,
    k: usize,
    draws: u64,
    seed: u64,
    budget: u128,
    corrupt: Option<SolutionHook<'_>>,
) -> Result<FaceRecoveryCheck> {
    let exact = survival_fraction(a, kind, k, budget)?;
    let big_n = a.cols();
    let mut rng = CounterRng::new(seed);
    let mut successes = 0;
    for _ in 0..draws {
        let face = FaceSpec::random(kind, big_n, k, &mut rng)?;
        let weights: Vec<f64> = (0..=k).map(|_| 0.1 + 0.9 * rng.uniform_open_closed()).collect();
        let x0 = face.point(big_n, &weights)?;
        let y = a.mul_vec(&x0)?;
        let solved = match kind {
            PolytopeKind::Simplex => solve_nonneg(a, &y),
            PolytopeKind::CrossPolytope => solve_l1(a, &y),
        };
        let Ok(sol) = solved else { continue };
        if !sol.is_optimal() {
            continue;
        }
        let mut x = sol.x;
        if let Some(f) = corrupt {
            f(&mut x);
        }
        if exact_recon(&x, &x0)? {
            successes += 1;
        }
    }
    Ok(FaceRecoveryCheck {
        exact,
        draws,
        successes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_matrix, Ensemble};
    use crate::lp::solve_standard;

    fn gaussian(n: usize, big_n: usize, seed: u64) -> DenseMatrix {
        sample_matrix(&Ensemble::Gaussian, n, big_n, seed).unwrap()
    }

    #[test]
    fn face_counts() {
        assert_eq!(face_count(PolytopeKind::Simplex, 3, 0).unwrap(), 3);
        assert_eq!(face_count(PolytopeKind::CrossPolytope, 3, 1).unwrap(), 12);
        assert_eq!(face_count(PolytopeKind::CrossPolytope, 3, 2).unwrap(), 8);
        assert!(face_count(PolytopeKind::Simplex, 3, 3).is_err());
        assert!(matches!(
            face_count(PolytopeKind::CrossPolytope, 200, 150),
            Err(Error::Overflow(_))
        ));
    }

    /// Faces of the cross-polytope by brute force: sign-consistent vertex
    /// subsets `{s_i e_i}` with no antipodal pair.
    #[test]
    fn face_counts_match_vertex_subset_enumeration() {
        for big_n in 1..=6usize {
            let vertices: Vec<(usize, i8)> = (0..big_n).flat_map(|i| [(i, 1), (i, -1)]).collect();
            for k in 0..big_n {
                let cross = vertices
                    .iter()
                    .combinations(k + 1)
                    .filter(|vs| vs.iter().map(|v| v.0).unique().count() == k + 1)
                    .count() as u128;
                assert_eq!(face_count(PolytopeKind::CrossPolytope, big_n, k).unwrap(), cross);
                let simplex = (0..big_n).combinations(k + 1).count() as u128;
                assert_eq!(face_count(PolytopeKind::Simplex, big_n, k).unwrap(), simplex);
                assert_eq!(all_faces(PolytopeKind::CrossPolytope, big_n, k).len() as u128, cross);
            }
        }
    }

    #[test]
    fn square_invertible_everything_survives() {
        let a = gaussian(5, 5, 1);
        for kind in [PolytopeKind::Simplex, PolytopeKind::CrossPolytope] {
            let f = survival_fraction(&a, kind, 2, DEFAULT_BUDGET).unwrap();
            assert_eq!(f.survived, f.total);
            assert!(f.general_position);
        }
    }

    #[test]
    fn duplicated_column_loses_face() {
        let mut cols: Vec<Vec<f64>> = (0..4).map(|j| gaussian(3, 4, 2).column(j)).collect();
        cols.push(cols[0].clone());
        let a = DenseMatrix::from_columns(&cols).unwrap();
        let face = FaceSpec::new(PolytopeKind::CrossPolytope, vec![0], vec![1]).unwrap();
        let v = face_survives(&a, &face, DEFAULT_BUDGET).unwrap();
        assert!(!v.survives);
        assert!(!v.general_position);
    }

    #[test]
    fn supports_beyond_n_are_lost() {
        let a = gaussian(3, 7, 3);
        for kind in [PolytopeKind::Simplex, PolytopeKind::CrossPolytope] {
            assert_eq!(survival_fraction(&a, kind, 3, DEFAULT_BUDGET).unwrap().survived, 0);
        }
    }

    #[test]
    fn survival_agrees_with_solvers() {
        let a = gaussian(4, 8, 4);
        let mut rng = CounterRng::new(5);
        for kind in [PolytopeKind::Simplex, PolytopeKind::CrossPolytope] {
            for _ in 0..200 {
                let face = FaceSpec::random(kind, 8, 1, &mut rng).unwrap();
                let x0 = face.interior_point(8).unwrap();
                let y = a.mul_vec(&x0).unwrap();
                let sol = match kind {
                    PolytopeKind::Simplex => solve_nonneg(&a, &y),
                    PolytopeKind::CrossPolytope => solve_l1(&a, &y),
                }
                .unwrap();
                let recovered = exact_recon(&sol.x, &x0).unwrap();
                assert_eq!(face_survives(&a, &face, DEFAULT_BUDGET).unwrap().survives, recovered);
            }
        }
    }

    #[test]
    fn simplex_survives_at_least_as_often() {
        let mut wins = 0;
        for seed in 0..20 {
            let a = gaussian(4, 8, 100 + seed);
            let t = survival_fraction(&a, PolytopeKind::Simplex, 2, DEFAULT_BUDGET).unwrap();
            let c = survival_fraction(&a, PolytopeKind::CrossPolytope, 2, DEFAULT_BUDGET).unwrap();
            assert_eq!(c.total, face_count(PolytopeKind::CrossPolytope, 8, 2).unwrap());
            if t.value() >= c.value() {
                wins += 1;
            }
        }
        // One-sided sign test: P(Bin(20, 1/2) >= 15) < 0.025.
        assert!(wins >= 15, "{wins}");
    }

    #[test]
    fn budget_enforced() {
        let a = gaussian(10, 40, 6);
        assert!(matches!(
            face_survives(&a, &FaceSpec::new(PolytopeKind::Simplex, vec![0], vec![]).unwrap(), 1000),
            Err(Error::TooLarge { .. })
        ));
        assert!(matches!(exact_spark(&a, 1000), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn spark_examples() {
        let mut a = gaussian(3, 5, 7);
        assert_eq!(exact_spark(&a, DEFAULT_BUDGET).unwrap(), Some(4));
        for i in 0..3 {
            a[(i, 2)] = 0.0;
        }
        assert_eq!(exact_spark(&a, DEFAULT_BUDGET).unwrap(), Some(1));
        assert_eq!(spark_plus(&a).unwrap(), 1);
        let b = DenseMatrix::from_rows(&[[1.0, 2.0, 0.0], [2.0, 4.0, 1.0]]).unwrap();
        assert_eq!(exact_spark(&b, DEFAULT_BUDGET).unwrap(), Some(2));
        assert_eq!(exact_spark(&DenseMatrix::identity(3), DEFAULT_BUDGET).unwrap(), None);
        assert!(matches!(spark_plus(&DenseMatrix::identity(3)), Err(Error::AllColumnsFailed)));
    }

    #[test]
    fn gaussian_4x8_spark_is_5_and_bounded_by_heuristic() {
        for seed in 0..20 {
            let a = gaussian(4, 8, 200 + seed);
            let s = exact_spark(&a, DEFAULT_BUDGET).unwrap().unwrap();
            assert_eq!(s, 5);
            assert!(spark_plus(&a).unwrap() >= s);
        }
    }

    #[test]
    fn spark_plus_dominates_spark_on_small_matrices() {
        let mut rng = CounterRng::new(8);
        for t in 0..200u64 {
            let n = 2 + (t % 3) as usize;
            let big_n = n + 2 + (t % 4) as usize;
            let ens = if t % 2 == 0 { Ensemble::Gaussian } else { Ensemble::Ternary { p: 0.3 } };
            let a = sample_matrix(&ens, n, big_n, rng.next_word()).unwrap();
            let s = exact_spark(&a, DEFAULT_BUDGET).unwrap();
            match spark_plus(&a) {
                Ok(p) => assert!(s.is_some_and(|s| p >= s), "{t}: {s:?} vs {p}"),
                Err(Error::AllColumnsFailed) => assert!(s.is_none()),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn enumeration_matches_simplex_on_small_lps() {
        let mut rng = CounterRng::new(12);
        for t in 0..100 {
            let (m, n) = (1 + t % 4, 5 + t % 4);
            let a = gaussian(m, n, rng.next_word());
            let x: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let b = a.mul_vec(&x).unwrap();
            let c: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let lp = StandardLp::new(c, a, b).unwrap();
            let (opt, _) = lp_enumeration_optimum(&lp, DEFAULT_BUDGET).unwrap().unwrap();
            let sol = solve_standard(&lp).unwrap();
            assert!((sol.objective - opt).abs() <= 1e-8 * (1.0 + opt.abs()));
        }
    }

    #[test]
    fn monte_carlo_matches_exact_and_detects_faults() {
        let a = gaussian(4, 8, 13);
        let check = face_recovery_check(&a, PolytopeKind::CrossPolytope, 1, 400, 1, DEFAULT_BUDGET, None).unwrap();
        assert!(check.deviation_sds() < 3.0, "{check:?}");
        let bump = |x: &mut [f64]| x[0] += 1.0;
        let broken = face_recovery_check(&a, PolytopeKind::CrossPolytope, 1, 400, 1, DEFAULT_BUDGET, Some(&bump)).unwrap();
        assert_eq!(broken.successes, 0);
    }

    #[test]
    fn appending_columns_never_raises_spark() {
        let a = gaussian(4, 9, 9);
        let mut prev = usize::MAX;
        for big_n in 4..=9 {
            let sub = a.select_columns(&(0..big_n).collect::<Vec<_>>());
            let s = exact_spark(&sub, DEFAULT_BUDGET).unwrap().unwrap_or(usize::MAX);
            assert!(s <= prev);
            prev = s;
        }
    }
}
