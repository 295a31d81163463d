//! Binomial dose-response GLM fit by iteratively reweighted least squares.
//!
//! The model is expressed in the survival orientation used throughout the
//! crate: the expected success fraction at sparsity `rho` is
//! `1 - F(a + b*rho)`, where `F` is the inverse link. IRLS is run on failure
//! counts with the standard increasing link, which yields `(a, b)` directly
//! in this orientation; [`GlmFit::success_link_coefficients`] flips the sign
//! for the conventional success-probability parametrization.

use std::f64::consts::PI;

use crate::stats::special::{norm_cdf, norm_pdf, norm_quantile, norm_sf};
use crate::{Error, Result};

pub const MAX_IRLS_ITERATIONS: usize = 100;
const COEF_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LinkKind {
    Logit,
    Probit,
    Cauchyit,
}

impl LinkKind {
    pub const ALL: [LinkKind; 3] = [LinkKind::Logit, LinkKind::Probit, LinkKind::Cauchyit];

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Logit => "logit",
            LinkKind::Probit => "probit",
            LinkKind::Cauchyit => "cauchit",
        }
    }

    /// η = g(μ).
    pub fn link(self, mu: f64) -> f64 {
        match self {
            LinkKind::Logit => (mu / (1.0 - mu)).ln(),
            LinkKind::Probit => norm_quantile(mu).unwrap_or(if mu <= 0.0 {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }),
            LinkKind::Cauchyit => (PI * (mu - 0.5)).tan(),
        }
    }

    /// μ = F(η).
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            LinkKind::Logit => 1.0 / (1.0 + (-eta).exp()),
            LinkKind::Probit => norm_cdf(eta),
            LinkKind::Cauchyit => 0.5 + eta.atan() / PI,
        }
    }

    /// 1 − F(η), computed without cancellation.
    pub fn inverse_complement(self, eta: f64) -> f64 {
        match self {
            LinkKind::Logit => 1.0 / (1.0 + eta.exp()),
            LinkKind::Probit => norm_sf(eta),
            LinkKind::Cauchyit => 0.5 - eta.atan() / PI,
        }
    }

    /// dμ/dη.
    pub fn density(self, eta: f64) -> f64 {
        match self {
            LinkKind::Logit => {
                let e = (-eta.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            LinkKind::Probit => norm_pdf(eta),
            LinkKind::Cauchyit => 1.0 / (PI * (1.0 + eta * eta)),
        }
    }
}

impl std::str::FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logit" => Ok(LinkKind::Logit),
            "probit" => Ok(LinkKind::Probit),
            "cauchit" | "cauchyit" => Ok(LinkKind::Cauchyit),
            other => Err(Error::Config(format!("unknown link {other}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GlmFit {
    pub link: LinkKind,
    /// Survival-orientation intercept: E(S/M) = 1 − F(a + b ρ).
    pub a: f64,
    pub b: f64,
    pub se_a: f64,
    pub se_b: f64,
    pub deviance: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Deviance after each accepted IRLS step.
    pub deviance_trace: Vec<f64>,
    /// Fitted success fractions.
    pub fitted: Vec<f64>,
    /// Working residuals on the success scale.
    pub working_residuals: Vec<f64>,
}

impl GlmFit {
    pub fn success_probability(&self, rho: f64) -> f64 {
        self.link.inverse_complement(self.a + self.b * rho)
    }

    /// `(a, b)` for the model E(S/M) = F(a + b ρ).
    pub fn success_link_coefficients(&self) -> (f64, f64) {
        (-self.a, -self.b)
    }

    /// ρ at which the fitted success probability is one half.
    pub fn ld50(&self) -> f64 {
        -self.a / self.b
    }
}

/// Binomial deviance of success counts under a survival-orientation model.
pub fn binomial_deviance(
    link: LinkKind,
    a: f64,
    b: f64,
    rho: &[f64],
    successes: &[f64],
    trials: &[f64],
) -> f64 {
    rho.iter()
        .zip(successes)
        .zip(trials)
        .map(|((&r, &s), &m)| {
            let eta = a + b * r;
            let fail_p = link.inverse(eta).clamp(1e-300, 1.0);
            let succ_p = link.inverse_complement(eta).clamp(1e-300, 1.0);
            unit_deviance(s, m, succ_p, fail_p)
        })
        .sum()
}

fn unit_deviance(s: f64, m: f64, succ_p: f64, fail_p: f64) -> f64 {
    let f = m - s;
    let mut d = 0.0;
    if s > 0.0 {
        d += s * (s / (m * succ_p)).ln();
    }
    if f > 0.0 {
        d += f * (f / (m * fail_p)).ln();
    }
    2.0 * d
}

/// Fits E(S/M) = 1 − F(a + b ρ) by IRLS with step halving.
pub fn glm_binomial(
    rho: &[f64],
    successes: &[f64],
    trials: &[f64],
    link: LinkKind,
) -> Result<GlmFit> {
    let n = rho.len();
    if successes.len() != n || trials.len() != n {
        return Err(Error::DimensionMismatch("glm input lengths differ".into()));
    }
    for i in 0..n {
        if !(trials[i] > 0.0) || successes[i] < 0.0 || successes[i] > trials[i] {
            return Err(Error::Domain(format!(
                "point {i}: successes {} of trials {}",
                successes[i], trials[i]
            )));
        }
    }
    let mut distinct: Vec<f64> = rho.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateDesign(
            "dose-response needs at least two distinct rho values".into(),
        ));
    }
    let fail_frac: Vec<f64> = (0..n).map(|i| (trials[i] - successes[i]) / trials[i]).collect();
    if fail_frac.iter().all(|&p| p == 0.0 || p == 1.0) {
        return Err(Error::Separation);
    }

    // Starting values from a WLS fit to adjusted empirical links.
    let mut eta: Vec<f64> = (0..n)
        .map(|i| {
            let mu = (fail_frac[i] * trials[i] + 0.5) / (trials[i] + 1.0);
            link.link(mu)
        })
        .collect();
    let mut beta = wls_step(link, rho, &fail_frac, trials, &eta, true)?.0;
    let mut dev = binomial_deviance(link, beta[0], beta[1], rho, successes, trials);
    let mut trace = vec![dev];
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=MAX_IRLS_ITERATIONS {
        iterations = it;
        for i in 0..n {
            eta[i] = beta[0] + beta[1] * rho[i];
        }
        let (proposal, _) = wls_step(link, rho, &fail_frac, trials, &eta, false)?;
        let mut step = [proposal[0] - beta[0], proposal[1] - beta[1]];
        let mut cand = proposal;
        let mut cand_dev = binomial_deviance(link, cand[0], cand[1], rho, successes, trials);
        let mut halvings = 0;
        while !(cand_dev <= dev * (1.0 + 1e-12) + 1e-12) && halvings < 30 {
            step[0] *= 0.5;
            step[1] *= 0.5;
            cand = [beta[0] + step[0], beta[1] + step[1]];
            cand_dev = binomial_deviance(link, cand[0], cand[1], rho, successes, trials);
            halvings += 1;
        }
        if !(cand_dev <= dev * (1.0 + 1e-12) + 1e-12) {
            // No descent possible: already at the optimum to machine precision.
            converged = true;
            break;
        }
        let scale = beta[0].abs().max(beta[1].abs()).max(1.0);
        let change = step[0].abs().max(step[1].abs());
        beta = cand;
        dev = cand_dev;
        trace.push(dev);
        if change <= COEF_TOL * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_IRLS_ITERATIONS));
    }
    for i in 0..n {
        eta[i] = beta[0] + beta[1] * rho[i];
    }
    let (_, cov) = wls_step(link, rho, &fail_frac, trials, &eta, false)?;
    let fitted: Vec<f64> = eta.iter().map(|&e| link.inverse_complement(e)).collect();
    let working_residuals = (0..n)
        .map(|i| {
            let succ = 1.0 - fail_frac[i];
            (succ - fitted[i]) / link.density(eta[i]).max(1e-300)
        })
        .collect();
    Ok(GlmFit {
        link,
        a: beta[0],
        b: beta[1],
        se_a: cov[0].sqrt(),
        se_b: cov[2].sqrt(),
        deviance: dev,
        converged,
        iterations,
        deviance_trace: trace,
        fitted,
        working_residuals,
    })
}

/// One weighted least-squares step. With `initial`, `eta` already holds
/// the working response. Returns the new coefficients and the inverse
/// information matrix packed as (v_aa, v_ab, v_bb).
fn wls_step(
    link: LinkKind,
    rho: &[f64],
    fail_frac: &[f64],
    trials: &[f64],
    eta: &[f64],
    initial: bool,
) -> Result<([f64; 2], [f64; 3])> {
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..rho.len() {
        let e = eta[i];
        let mu = link.inverse(e).clamp(1e-12, 1.0 - 1e-12);
        let one_minus = link.inverse_complement(e).clamp(1e-12, 1.0 - 1e-12);
        let d = link.density(e).max(1e-300);
        let w = trials[i] * d * d / (mu * one_minus);
        let z = if initial { e } else { e + (fail_frac[i] - mu) / d };
        if !w.is_finite() || !z.is_finite() {
            continue;
        }
        let r = rho[i];
        s0 += w;
        s1 += w * r;
        s2 += w * r * r;
        t0 += w * z;
        t1 += w * z * r;
    }
    let det = s0 * s2 - s1 * s1;
    if !(det.abs() > 1e-300) {
        return Err(Error::NumericalBreakdown("singular IRLS information".into()));
    }
    let a = (s2 * t0 - s1 * t1) / det;
    let b = (s0 * t1 - s1 * t0) / det;
    Ok(([a, b], [s2 / det, -s1 / det, s0 / det]))
}
