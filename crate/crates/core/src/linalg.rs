//! Dense real linear algebra: row-major matrices, LU with partial pivoting,
//! and rank-revealing least squares with R-style aliasing.

use std::fmt;

use crate::stats::special::student_t_two_sided;
use crate::{Error, Result};

/// Relative pivot threshold for [`lu_factor`].
pub const PIVOT_TOL: f64 = 1e-12;
/// Relative threshold below which a least-squares column is declared aliased.
pub const RANK_TOL: f64 = 1e-10;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    /// Builds a matrix whose columns are the given slices.
    pub fn from_columns<C: AsRef<[f64]>>(cols: &[C]) -> Result<Self> {
        let rows = cols.first().map_or(0, |c| c.as_ref().len());
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::DimensionMismatch("ragged columns".into()));
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Submatrix made of the listed columns, in the listed order.
    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            let src = self.row(i);
            let dst = m.row_mut(i);
            for (d, &j) in dst.iter_mut().zip(idx) {
                *d = src[j];
            }
        }
        m
    }

    /// Appends a column on the right.
    pub fn with_column(&self, col: &[f64]) -> Result<DenseMatrix> {
        if col.len() != self.rows {
            return Err(Error::DimensionMismatch("appended column length".into()));
        }
        let mut m = DenseMatrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            m.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            m[(i, self.cols)] = col[i];
        }
        Ok(m)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ * x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} rows",
                x.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch("matmul inner dimensions".into()));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), dst);
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `PA = LU` with unit lower-triangular `L` and upper-triangular `U`
/// stored packed in one matrix.
#[derive(Clone, Debug)]
pub struct LuFactors {
    n: usize,
    lu: DenseMatrix,
    /// `perm[i]` is the original row placed at position `i`.
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn lower(&self) -> DenseMatrix {
        let mut l = DenseMatrix::identity(self.n);
        for i in 0..self.n {
            for j in 0..i {
                l[(i, j)] = self.lu[(i, j)];
            }
        }
        l
    }

    pub fn upper(&self) -> DenseMatrix {
        let mut u = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in i..self.n {
                u[(i, j)] = self.lu[(i, j)];
            }
        }
        u
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch("rhs length".into()));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        self.solve_permuted_in_place(&mut x);
        Ok(x)
    }

    fn solve_permuted_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = self.lu.row(i);
            let s = dot(&row[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = dot(&row[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / row[i];
        }
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch("rhs length".into()));
        }
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ w = z, then x = Pᵀ w.
        let mut z = b.to_vec();
        for i in 0..n {
            let d = self.lu[(i, i)];
            z[i] /= d;
            let zi = z[i];
            for j in i + 1..n {
                z[j] -= self.lu[(i, j)] * zi;
            }
        }
        for i in (0..n).rev() {
            let zi = z[i];
            for j in 0..i {
                z[j] -= self.lu[(i, j)] * zi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        Ok(x)
    }

    /// Explicit inverse, row-major.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.n;
        // Row-oriented substitution on X = P I, so every update is a
        // contiguous row operation.
        let mut x = vec![0.0; n * n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[i * n + p] = 1.0;
        }
        for i in 1..n {
            let (done, rest) = x.split_at_mut(i * n);
            let xi = &mut rest[..n];
            for (k, &l) in self.lu.row(i)[..i].iter().enumerate() {
                if l != 0.0 {
                    for (v, w) in xi.iter_mut().zip(&done[k * n..(k + 1) * n]) {
                        *v -= l * w;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = x.split_at_mut((i + 1) * n);
            let xi = &mut head[i * n..];
            let row = self.lu.row(i);
            for (k, &u) in row[i + 1..].iter().enumerate() {
                if u != 0.0 {
                    for (v, w) in xi.iter_mut().zip(&tail[k * n..(k + 1) * n]) {
                        *v -= u * w;
                    }
                }
            }
            let d = 1.0 / row[i];
            xi.iter_mut().for_each(|v| *v *= d);
        }
        DenseMatrix { rows: n, cols: n, data: x }
    }
}

/// LU factorization with partial pivoting.
///
/// A pivot is rejected when its magnitude falls below
/// [`PIVOT_TOL`] times the largest row norm of the input.
pub fn lu_factor(m: &DenseMatrix) -> Result<LuFactors> {
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch(format!(
            "LU of a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let scale = (0..n).map(|i| norm2(m.row(i))).fold(0.0, f64::max);
    let tol = PIVOT_TOL * scale;
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in k + 1..n {
            let v = lu[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > tol) || best == 0.0 {
            return Err(Error::SingularMatrix);
        }
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[(k, k)];
        let (upper, lower) = lu.data.split_at_mut((k + 1) * n);
        let prow = &upper[k * n..(k + 1) * n];
        for row in lower.chunks_exact_mut(n) {
            let f = row[k] / pivot;
            row[k] = f;
            if f != 0.0 {
                for j in k + 1..n {
                    row[j] -= f * prow[j];
                }
            }
        }
    }
    Ok(LuFactors { n, lu, perm })
}

pub fn lu_solve(f: &LuFactors, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}

/// Coefficients and inference summaries of a linear fit.
///
/// Aliased (linearly dependent) columns carry `None` in every
/// per-coefficient slot, mirroring R's "not defined because of
/// singularities".
#[derive(Clone, Debug)]
pub struct FitResult {
    pub names: Vec<String>,
    pub coefficients: Vec<Option<f64>>,
    pub std_errors: Vec<Option<f64>>,
    pub t_values: Vec<Option<f64>>,
    pub p_values: Vec<Option<f64>>,
    pub rss: f64,
    pub tss: f64,
    pub df_resid: usize,
    pub rank: usize,
    pub n_obs: usize,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    /// Whether R² is measured about the mean (model with intercept) or about
    /// zero.
    pub intercept: bool,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        self.coefficients[i]
    }

    pub fn is_aliased(&self, i: usize) -> bool {
        self.coefficients[i].is_none()
    }

    /// Residual standard error.
    pub fn sigma(&self) -> f64 {
        if self.df_resid == 0 {
            f64::NAN
        } else {
            (self.rss / self.df_resid as f64).sqrt()
        }
    }

    /// Coefficients with aliased columns read as zero.
    pub fn coefficients_or_zero(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.unwrap_or(0.0)).collect()
    }

    /// Recomputes R² and adjusted R² under the given intercept convention.
    pub fn set_intercept_convention(&mut self, intercept: bool, response: &[f64]) {
        self.intercept = intercept;
        self.tss = total_sum_of_squares(response, intercept);
        let (r2, adj) = r_squared(self.rss, self.tss, self.n_obs, self.df_resid, intercept);
        self.r_squared = r2;
        self.adj_r_squared = adj;
    }
}

impl fmt::Display for FitResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.names.iter().map(|n| n.len()).max().unwrap_or(4).max(9);
        writeln!(
            f,
            "{:<width$} {:>12} {:>12} {:>9} {:>10}",
            "", "Estimate", "Std. Error", "t value", "Pr(>|t|)"
        )?;
        for i in 0..self.names.len() {
            match self.coefficients[i] {
                Some(c) => writeln!(
                    f,
                    "{:<width$} {:>12.6} {:>12.6} {:>9.3} {:>10.3e}",
                    self.names[i],
                    c,
                    self.std_errors[i].unwrap_or(f64::NAN),
                    self.t_values[i].unwrap_or(f64::NAN),
                    self.p_values[i].unwrap_or(f64::NAN),
                )?,
                None => writeln!(
                    f,
                    "{:<width$} {:>12} {:>12} {:>9} {:>10}",
                    self.names[i], "NA", "NA", "NA", "NA"
                )?,
            }
        }
        let aliased = self.coefficients.iter().filter(|c| c.is_none()).count();
        if aliased > 0 {
            writeln!(
                f,
                "({aliased} not defined because of singularities)"
            )?;
        }
        writeln!(
            f,
            "Residual standard error: {:.4} on {} degrees of freedom",
            self.sigma(),
            self.df_resid
        )?;
        write!(
            f,
            "Multiple R-squared: {:.4},\tAdjusted R-squared: {:.4}",
            self.r_squared, self.adj_r_squared
        )
    }
}

fn total_sum_of_squares(y: &[f64], intercept: bool) -> f64 {
    if intercept {
        let mean = y.iter().sum::<f64>() / y.len().max(1) as f64;
        y.iter().map(|v| (v - mean) * (v - mean)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    }
}

fn r_squared(rss: f64, tss: f64, n: usize, df: usize, intercept: bool) -> (f64, f64) {
    if tss <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let r2 = 1.0 - rss / tss;
    let adj = if df == 0 {
        f64::NAN
    } else {
        let denom = if intercept { n as f64 - 1.0 } else { n as f64 };
        1.0 - (rss / df as f64) / (tss / denom)
    };
    (r2, adj)
}

/// Least squares by Householder QR, processing columns left to right and
/// dropping any column whose residual norm after the previously accepted
/// columns is below [`RANK_TOL`] of its original norm.
///
/// R² uses the mean-centred convention when a retained column is constant
/// and nonzero, the uncentred convention otherwise.
pub fn least_squares(design: &DenseMatrix, response: &[f64]) -> Result<FitResult> {
    let names = (0..design.cols).map(|j| format!("x{}", j + 1)).collect();
    least_squares_named(design, response, names)
}

pub(crate) fn least_squares_named(
    design: &DenseMatrix,
    response: &[f64],
    names: Vec<String>,
) -> Result<FitResult> {
    let (m, p) = (design.rows, design.cols);
    if response.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "response of length {} for {m} rows",
            response.len()
        )));
    }
    if names.len() != p {
        return Err(Error::DimensionMismatch("column names".into()));
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("response must be finite".into()));
    }
    // Column-major working copy.
    let mut w: Vec<Vec<f64>> = (0..p).map(|j| design.column(j)).collect();
    let orig_norm: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut qty = response.to_vec();
    let mut accepted: Vec<usize> = Vec::new();
    for j in 0..p {
        let k = accepted.len();
        if k >= m {
            break;
        }
        let tail = norm2(&w[j][k..]);
        if orig_norm[j] == 0.0 || tail <= RANK_TOL * orig_norm[j] {
            continue;
        }
        // Householder vector v with v[0] = 1 implicit scaling.
        let alpha = if w[j][k] >= 0.0 { -tail } else { tail };
        let mut v: Vec<f64> = w[j][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            let apply = |col: &mut [f64]| {
                let s = dot(&v, col) * 2.0 / vnorm2;
                axpy(-s, &v, col);
            };
            for col in w.iter_mut().skip(j + 1) {
                apply(&mut col[k..]);
            }
            apply(&mut qty[k..]);
        }
        w[j][k] = alpha;
        for x in w[j][k + 1..].iter_mut() {
            *x = 0.0;
        }
        accepted.push(j);
    }
    let rank = accepted.len();
    if rank == 0 {
        return Err(Error::DegenerateDesign("no usable design columns".into()));
    }
    // R is rank x rank upper-triangular: R[i][c] = w[accepted[c]][i].
    let r_at = |i: usize, c: usize| w[accepted[c]][i];
    let mut beta = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = qty[i];
        for c in i + 1..rank {
            s -= r_at(i, c) * beta[c];
        }
        beta[i] = s / r_at(i, i);
    }
    let mut coefficients = vec![None; p];
    let mut full = vec![0.0; p];
    for (c, &j) in accepted.iter().enumerate() {
        coefficients[j] = Some(beta[c]);
        full[j] = beta[c];
    }
    let fitted = design.mul_vec(&full)?;
    let residuals: Vec<f64> = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let df_resid = m - rank;

    // R⁻¹ by back substitution, column by column.
    let mut rinv = vec![vec![0.0; rank]; rank];
    for c in 0..rank {
        rinv[c][c] = 1.0 / r_at(c, c);
        for i in (0..c).rev() {
            let mut s = 0.0;
            for l in i + 1..=c {
                s += r_at(i, l) * rinv[l][c];
            }
            rinv[i][c] = -s / r_at(i, i);
        }
    }
    let sigma2 = if df_resid > 0 {
        rss / df_resid as f64
    } else {
        f64::NAN
    };
    let mut std_errors = vec![None; p];
    let mut t_values = vec![None; p];
    let mut p_values = vec![None; p];
    for (c, &j) in accepted.iter().enumerate() {
        let var = sigma2 * rinv[c].iter().map(|v| v * v).sum::<f64>();
        let se = var.sqrt();
        std_errors[j] = Some(se);
        let t = beta[c] / se;
        t_values[j] = Some(t);
        p_values[j] = Some(if df_resid > 0 && t.is_finite() {
            student_t_two_sided(t, df_resid as f64)
        } else {
            f64::NAN
        });
    }

    let intercept = accepted.iter().any(|&j| {
        let c = design.column(j);
        c[0] != 0.0 && c.iter().all(|v| *v == c[0])
    });
    let tss = total_sum_of_squares(response, intercept);
    let (r2, adj) = r_squared(rss, tss, m, df_resid, intercept);
    Ok(FitResult {
        names,
        coefficients,
        std_errors,
        t_values,
        p_values,
        rss,
        tss,
        df_resid,
        rank,
        n_obs: m,
        r_squared: r2,
        adj_r_squared: adj,
        intercept,
        fitted,
        residuals,
    })
}
