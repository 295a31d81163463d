//! Dense two-phase revised simplex for `min c'x  s.t.  Ax = b, x >= 0`, and
//! the reductions of nonnegative minimum-sum recovery (LP) and basis
//! pursuit (P1) to that form.
//!
//! The basis inverse is kept explicitly and updated by elementary row
//! operations after each pivot. It is rebuilt from a fresh LU factorization
//! every [`REFACTOR_INTERVAL`] pivots, whenever the basic solution drifts
//! from `B x_B = b`, and once more before the solution is reported.
//! Pricing is Dantzig's rule (most negative reduced cost, lowest index on
//! ties); after `10 (m + n)` degenerate pivots the solver switches to
//! Bland's rule for the rest of the solve.

use crate::linalg::{dot, lu_factor, norm_inf, DenseMatrix};
use crate::{Error, Result};

pub const REFACTOR_INTERVAL: usize = 64;
/// Threshold below which a solution entry is reported as zero.
pub const ZERO_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const DRIFT_TOL: f64 = 1e-9;
const DRIFT_CHECK_EVERY: usize = 8;

#[derive(Clone, Debug)]
pub struct StandardLp {
    c: Vec<f64>,
    a: DenseMatrix,
    b: Vec<f64>,
}

impl StandardLp {
    pub fn new(c: Vec<f64>, a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if c.len() != n || b.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "LP with {m}x{n} constraints, {} costs and {} right-hand sides",
                c.len(),
                b.len()
            )));
        }
        if m > n {
            return Err(Error::DimensionMismatch(format!(
                "standard form needs rows <= columns, got {m}x{n}"
            )));
        }
        if c.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Domain("LP data must be finite".into()));
        }
        Ok(Self { c, a, b })
    }

    pub fn costs(&self) -> &[f64] {
        &self.c
    }

    pub fn constraints(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic variable per constraint row; indices `>= n` are artificial
    /// columns left basic on redundant rows.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Indices with `|x_j| > ZERO_TOL`.
    pub fn support(&self) -> Vec<usize> {
        self.x
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > ZERO_TOL)
            .map(|(j, _)| j)
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Total pivot cap over both phases; `None` means `50 (m + n)`.
    pub max_iterations: Option<usize>,
    pub refactor_interval: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            refactor_interval: REFACTOR_INTERVAL,
        }
    }
}

pub fn solve_standard(lp: &StandardLp) -> Result<LpSolution> {
    solve_standard_with(lp, SimplexOptions::default())
}

pub fn solve_standard_with(lp: &StandardLp, opts: SimplexOptions) -> Result<LpSolution> {
    Simplex::new(&lp.c, &lp.a, &lp.b, false, opts).run(None)
}

/// `min 1'x  s.t.  A x = y, x >= 0`.
pub fn solve_nonneg(a: &DenseMatrix, y: &[f64]) -> Result<LpSolution> {
    let lp = StandardLp::new(vec![1.0; a.cols()], a.clone(), y.to_vec())?;
    solve_standard(&lp)
}

/// `min ||x||_1  s.t.  A x = y`, via `x = u - v` with `u, v >= 0`.
/// The returned `x` has length `N` and `objective = ||x||_1`.
///
/// The split matrix `[A, -A]` is never formed; the second half of the
/// columns is read as the negation of the first. The solve starts from a
/// basis of `n` independent columns of `A`, each taken with the sign that
/// makes it feasible, so no phase 1 is needed when `A` has full row rank.
pub fn solve_l1(a: &DenseMatrix, y: &[f64]) -> Result<LpSolution> {
    let (n, big_n) = (a.rows(), a.cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "observation of length {} for {n} rows",
            y.len()
        )));
    }
    if n > 2 * big_n {
        return Err(Error::DimensionMismatch(format!(
            "standard form needs rows <= columns, got {n}x{}",
            2 * big_n
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("LP data must be finite".into()));
    }
    let costs = vec![1.0; 2 * big_n];
    let mut simplex = Simplex::new(&costs, a, y, true, SimplexOptions::default());
    let start = simplex.crash_mirrored();
    let sol = simplex.run(start)?;
    let x: Vec<f64> = if sol.x.is_empty() {
        Vec::new()
    } else {
        (0..big_n).map(|j| sol.x[j] - sol.x[big_n + j]).collect()
    };
    let objective = if sol.is_optimal() {
        x.iter().map(|v| v.abs()).sum()
    } else {
        sol.objective
    };
    Ok(LpSolution {
        status: sol.status,
        x,
        objective,
        basis: sol.basis,
        iterations: sol.iterations,
    })
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

struct Simplex<'a> {
    m: usize,
    /// Number of structural columns.
    n: usize,
    /// Number of stored columns; equals `n` unless mirrored.
    stored: usize,
    /// Structural column `j >= stored` is the negation of `j - stored`.
    mirrored: bool,
    /// Constraint rows with signs flipped so that `b >= 0`.
    a: DenseMatrix,
    b: Vec<f64>,
    c: &'a [f64],
    basis: Vec<usize>,
    /// Position in `basis`, or `usize::MAX` when nonbasic.
    position: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    max_iterations: usize,
    refactor_interval: usize,
    iterations: usize,
    since_refactor: usize,
    degenerate: usize,
    bland: bool,
    // Scratch.
    col: Vec<f64>,
    alpha: Vec<f64>,
    duals: Vec<f64>,
    reduced: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(c: &'a [f64], a: &DenseMatrix, b: &[f64], mirrored: bool, opts: SimplexOptions) -> Self {
        let (m, stored) = (a.rows(), a.cols());
        let n = if mirrored { 2 * stored } else { stored };
        let mut a = a.clone();
        let mut b = b.to_vec();
        for i in 0..m {
            if b[i] < 0.0 {
                b[i] = -b[i];
                for v in a.row_mut(i) {
                    *v = -*v;
                }
            }
        }
        let mut s = Self {
            m,
            n,
            stored,
            mirrored,
            a,
            xb: Vec::new(),
            b,
            c,
            basis: Vec::new(),
            position: Vec::new(),
            binv: Vec::new(),
            max_iterations: opts.max_iterations.unwrap_or(50 * (m + n)),
            refactor_interval: opts.refactor_interval.max(1),
            iterations: 0,
            since_refactor: 0,
            degenerate: 0,
            bland: false,
            col: vec![0.0; m],
            alpha: vec![0.0; m],
            duals: vec![0.0; m],
            reduced: vec![0.0; stored],
        };
        s.artificial_start();
        s
    }

    fn artificial_start(&mut self) {
        let (m, n) = (self.m, self.n);
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = 1.0;
        }
        self.position = vec![usize::MAX; n + m];
        for i in 0..m {
            self.position[n + i] = i;
        }
        self.basis = (n..n + m).collect();
        self.xb = self.b.clone();
        self.since_refactor = 0;
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        if j < self.stored {
            self.a[(i, j)]
        } else {
            -self.a[(i, j - self.stored)]
        }
    }

    /// Picks `m` linearly independent stored columns by Gaussian
    /// elimination with largest-entry pivoting along each row, then takes
    /// each column or its mirror according to the sign of its basic value.
    /// Returns `None` when the stored block is rank deficient.
    fn crash_mirrored(&mut self) -> Option<Vec<usize>> {
        let (m, stored) = (self.m, self.stored);
        if !self.mirrored || m == 0 {
            return None;
        }
        let mut w = self.a.clone();
        let scale = w.max_abs();
        if scale == 0.0 {
            return None;
        }
        let mut chosen = Vec::with_capacity(m);
        let mut used = vec![false; stored];
        for r in 0..m {
            let (mut best, mut mag) = (None, 1e-9 * scale);
            for (j, &v) in w.row(r).iter().enumerate() {
                if !used[j] && v.abs() > mag {
                    mag = v.abs();
                    best = Some(j);
                }
            }
            let q = best?;
            used[q] = true;
            chosen.push(q);
            let prow = w.row(r).to_vec();
            for i in r + 1..m {
                let f = w[(i, q)] / prow[q];
                if f != 0.0 {
                    for (v, p) in w.row_mut(i).iter_mut().zip(&prow) {
                        *v -= f * p;
                    }
                }
            }
        }
        let bmat = DenseMatrix::from_columns(
            &chosen.iter().map(|&j| self.a.column(j)).collect::<Vec<_>>(),
        )
        .ok()?;
        let xb = lu_factor(&bmat).ok()?.solve(&self.b).ok()?;
        Some(
            chosen
                .iter()
                .zip(&xb)
                .map(|(&j, &v)| if v < 0.0 { j + stored } else { j })
                .collect(),
        )
    }

    /// Installs a structural starting basis. Returns `false`, leaving the
    /// artificial start in place, if it is singular or infeasible.
    fn try_start(&mut self, start: &[usize], bscale: f64) -> bool {
        if start.len() != self.m || start.iter().any(|&j| j >= self.n) {
            return false;
        }
        for (i, &j) in start.iter().enumerate() {
            self.position[self.basis[i]] = usize::MAX;
            self.basis[i] = j;
        }
        for (i, &j) in start.iter().enumerate() {
            self.position[j] = i;
        }
        let ok = self.refactor().is_ok()
            && self.xb.iter().all(|&v| v >= -1e-9 * bscale);
        if ok {
            self.xb.iter_mut().for_each(|v| *v = v.max(0.0));
        } else {
            self.artificial_start();
        }
        ok
    }

    fn run(mut self, start: Option<Vec<usize>>) -> Result<LpSolution> {
        let (m, n) = (self.m, self.n);
        if m == 0 {
            // No constraints: optimal at zero unless some cost is negative.
            if self.c.iter().any(|&v| v < 0.0) {
                return Ok(self.finish(LpStatus::Unbounded));
            }
            return Ok(LpSolution {
                status: LpStatus::Optimal,
                x: vec![0.0; n],
                objective: 0.0,
                basis: Vec::new(),
                iterations: 0,
            });
        }
        let bscale = 1.0 + norm_inf(&self.b);
        let warm = start.is_some_and(|s| self.try_start(&s, bscale));

        if !warm {
            // Phase 1: minimise the sum of artificials.
            let phase1_cost = |j: usize| if j >= n { 1.0 } else { 0.0 };
            match self.optimize(&phase1_cost)? {
                PhaseOutcome::Optimal => {}
                PhaseOutcome::Unbounded => {
                    return Err(Error::NumericalBreakdown(
                        "phase 1 reported unbounded".into(),
                    ))
                }
            }
            self.refactor()?;
            let infeas: f64 = (0..m)
                .filter(|&i| self.basis[i] >= n)
                .map(|i| self.xb[i].max(0.0))
                .sum();
            if infeas > 1e-8 * bscale {
                return Ok(self.finish(LpStatus::Infeasible));
            }
            self.drive_out_artificials()?;
        }

        // Phase 2.
        let c = self.c;
        let phase2_cost = |j: usize| if j >= n { 0.0 } else { c[j] };
        let outcome = self.optimize(&phase2_cost)?;
        self.refactor()?;
        match outcome {
            PhaseOutcome::Optimal => Ok(self.finish(LpStatus::Optimal)),
            PhaseOutcome::Unbounded => Ok(self.finish(LpStatus::Unbounded)),
        }
    }

    fn finish(&self, status: LpStatus) -> LpSolution {
        let mut x = vec![0.0; self.n];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.xb[i];
            }
        }
        let objective = dot(self.c, &x);
        LpSolution {
            status,
            x,
            objective,
            basis: self.basis.clone(),
            iterations: self.iterations,
        }
    }

    /// Column `j` of the sign-normalized constraint matrix, artificials
    /// included.
    fn load_column(&mut self, j: usize) {
        if j < self.n {
            for i in 0..self.m {
                self.col[i] = self.entry(i, j);
            }
        } else {
            self.col.iter_mut().for_each(|v| *v = 0.0);
            self.col[j - self.n] = 1.0;
        }
    }

    /// alpha = B⁻¹ a_j.
    fn ftran(&mut self, j: usize) {
        let m = self.m;
        if j >= self.n {
            let k = j - self.n;
            for i in 0..m {
                self.alpha[i] = self.binv[i * m + k];
            }
            return;
        }
        self.load_column(j);
        for i in 0..m {
            self.alpha[i] = dot(&self.binv[i * m..(i + 1) * m], &self.col);
        }
    }

    /// `reduced[j] = (Aᵀ w)_j` over the stored columns.
    fn price_stored(&mut self, w: &[f64]) {
        self.reduced.iter_mut().for_each(|v| *v = 0.0);
        for (k, &wk) in w.iter().enumerate() {
            if wk != 0.0 {
                for (d, a) in self.reduced.iter_mut().zip(self.a.row(k)) {
                    *d += wk * a;
                }
            }
        }
    }

    #[inline]
    fn priced(&self, j: usize) -> f64 {
        if j < self.stored {
            self.reduced[j]
        } else {
            -self.reduced[j - self.stored]
        }
    }

    fn optimize(&mut self, cost: &dyn Fn(usize) -> f64) -> Result<PhaseOutcome> {
        let (m, n) = (self.m, self.n);
        let mut duals = std::mem::take(&mut self.duals);
        loop {
            // Duals: π = c_Bᵀ B⁻¹.
            duals.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..m {
                let cb = cost(self.basis[i]);
                if cb != 0.0 {
                    let row = &self.binv[i * m..(i + 1) * m];
                    for (d, r) in duals.iter_mut().zip(row) {
                        *d += cb * r;
                    }
                }
            }
            // Reduced costs of structural columns: d = c − Aᵀπ.
            self.price_stored(&duals);
            let mut entering = None;
            let mut best = -COST_TOL;
            for j in 0..n {
                if self.position[j] != usize::MAX {
                    continue;
                }
                let d = cost(j) - self.priced(j);
                if d < best {
                    entering = Some(j);
                    if self.bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                self.duals = duals;
                return Ok(PhaseOutcome::Optimal);
            };
            if self.iterations >= self.max_iterations {
                return Err(Error::IterationLimit(self.max_iterations));
            }

            self.ftran(q);
            // Ratio test.
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            for i in 0..m {
                let ai = self.alpha[i];
                let ratio = if ai > PIVOT_TOL {
                    self.xb[i].max(0.0) / ai
                } else if ai < -PIVOT_TOL && self.basis[i] >= n && self.xb[i] <= ZERO_TOL {
                    // Zero-level artificial that would turn negative.
                    0.0
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some(r) => {
                        let tie = (ratio - theta).abs() <= 1e-12 * (1.0 + theta);
                        if tie {
                            if self.bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                ai.abs() > self.alpha[r].abs()
                            }
                        } else {
                            ratio < theta
                        }
                    }
                };
                if better {
                    leave = Some(i);
                    theta = ratio;
                }
            }
            let Some(r) = leave else {
                self.duals = duals;
                return Ok(PhaseOutcome::Unbounded);
            };
            if theta <= 1e-12 {
                self.degenerate += 1;
                if self.degenerate > 10 * (m + n) {
                    self.bland = true;
                }
            }
            self.pivot(r, q, theta)?;
        }
    }

    fn pivot(&mut self, r: usize, q: usize, theta: f64) -> Result<()> {
        let m = self.m;
        let ar = self.alpha[r];
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * self.alpha[i];
            }
        }
        self.xb[r] = theta;
        {
            let (pivot_row, inv_ar) = (r * m, 1.0 / ar);
            for v in &mut self.binv[pivot_row..pivot_row + m] {
                *v *= inv_ar;
            }
            let prow: Vec<f64> = self.binv[pivot_row..pivot_row + m].to_vec();
            for i in 0..m {
                let f = self.alpha[i];
                if i == r || f == 0.0 {
                    continue;
                }
                let row = &mut self.binv[i * m..(i + 1) * m];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
            }
        }
        let old = self.basis[r];
        self.position[old] = usize::MAX;
        self.basis[r] = q;
        self.position[q] = r;
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= self.refactor_interval {
            self.refactor()?;
        } else if self.since_refactor % DRIFT_CHECK_EVERY == 0
            && self.drift() > DRIFT_TOL * (1.0 + norm_inf(&self.b))
        {
            self.refactor()?;
        }
        Ok(())
    }

    /// ‖B x_B − b‖_∞.
    fn drift(&self) -> f64 {
        let mut r: Vec<f64> = self.b.iter().map(|v| -v).collect();
        for (i, &j) in self.basis.iter().enumerate() {
            let v = self.xb[i];
            if j >= self.n {
                r[j - self.n] += v;
            } else {
                for (k, rk) in r.iter_mut().enumerate() {
                    *rk += self.entry(k, j) * v;
                }
            }
        }
        norm_inf(&r)
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut bmat = DenseMatrix::zeros(m, m);
        for c in 0..m {
            let j = self.basis[c];
            self.load_column(j);
            for i in 0..m {
                bmat[(i, c)] = self.col[i];
            }
        }
        let lu = lu_factor(&bmat).map_err(|_| {
            Error::NumericalBreakdown("basis matrix became singular".into())
        })?;
        self.xb = lu.solve(&self.b)?;
        let inv = lu.inverse();
        self.binv.copy_from_slice(inv.as_slice());
        self.since_refactor = 0;
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis after phase 1. An
    /// artificial stays basic only on a row that is a combination of the
    /// others, where every structural entry of `B⁻¹A` vanishes.
    fn drive_out_artificials(&mut self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        for r in 0..m {
            if self.basis[r] < n {
                continue;
            }
            self.xb[r] = 0.0;
            let row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            self.price_stored(&row);
            let mut best = None;
            let mut best_mag = PIVOT_TOL;
            for j in 0..n {
                if self.position[j] != usize::MAX {
                    continue;
                }
                let v = self.priced(j).abs();
                if v > best_mag {
                    best_mag = v;
                    best = Some(j);
                }
            }
            if let Some(q) = best {
                self.ftran(q);
                if self.iterations >= self.max_iterations {
                    return Err(Error::IterationLimit(self.max_iterations));
                }
                self.pivot(r, q, 0.0)?;
            }
        }
        Ok(())
    }
}
