//! Ordinary least squares with R-style summaries, and nested-model F-tests.

use crate::linalg::{least_squares_named, DenseMatrix, FitResult};
use crate::stats::special::f_sf;
use crate::{Error, Result};

/// OLS fit with named columns. `intercept` selects the R² convention:
/// about the mean for models with an intercept (or an intercept-spanning
/// set of indicators), about zero for `- 1` models.
pub fn ols(
    design: &DenseMatrix,
    response: &[f64],
    names: &[&str],
    intercept: bool,
) -> Result<FitResult> {
    let names = names.iter().map(|s| s.to_string()).collect();
    let mut fit = least_squares_named(design, response, names)?;
    fit.set_intercept_convention(intercept, response);
    Ok(fit)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FTest {
    pub f: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
}

/// F statistic from residual sums of squares and residual degrees of freedom
/// of a nested (`rss1`, `df_resid1`) and full (`rss2`, `df_resid2`) model.
pub fn f_test_rss(rss1: f64, df_resid1: usize, rss2: f64, df_resid2: usize) -> Result<FTest> {
    if df_resid1 < df_resid2 {
        return Err(Error::InvalidNesting(format!(
            "nested model has fewer residual df ({df_resid1}) than the full model ({df_resid2})"
        )));
    }
    let tol = 1e-9 * rss1.abs().max(1.0);
    if rss2 > rss1 + tol {
        return Err(Error::InvalidNesting(format!(
            "full model RSS {rss2} exceeds nested RSS {rss1}"
        )));
    }
    let df1 = df_resid1 - df_resid2;
    if df1 == 0 || (rss1 - rss2).abs() <= tol {
        return Ok(FTest {
            f: 0.0,
            df1,
            df2: df_resid2,
            p_value: 1.0,
        });
    }
    if df_resid2 == 0 {
        return Err(Error::InvalidNesting("full model has no residual df".into()));
    }
    let f = ((rss1 - rss2) / df1 as f64) / (rss2 / df_resid2 as f64);
    Ok(FTest {
        f,
        df1,
        df2: df_resid2,
        p_value: f_sf(f, df1 as f64, df_resid2 as f64)?,
    })
}

/// Nested-model comparison in the manner of R's `anova(nested, full)`.
/// Every estimable coefficient of `nested` must be a column of `full`.
pub fn f_test(nested: &FitResult, full: &FitResult) -> Result<FTest> {
    if nested.n_obs != full.n_obs {
        return Err(Error::InvalidNesting("models fit to different data".into()));
    }
    for (name, c) in nested.names.iter().zip(&nested.coefficients) {
        if c.is_some() && !full.names.contains(name) {
            return Err(Error::InvalidNesting(format!(
                "column {name} of the nested model is absent from the full model"
            )));
        }
    }
    f_test_rss(nested.rss, nested.df_resid, full.rss, full.df_resid)
}

impl std::fmt::Display for FTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "F = {:.4} on {} and {} DF, p-value = {:.4}",
            self.f, self.df1, self.df2, self.p_value
        )
    }
}
