//! Analytic null distribution of the modulation index under white noise.
//!
//! Each normalized histogram cell is treated as a Dirichlet marginal with
//! mean 1/B and a variance that shrinks like B/N. The entropy moments of a
//! symmetric Dirichlet are available in closed form through the digamma and
//! trigamma functions, and the normalized entropy H/ln B is then matched to a
//! beta law. MI = 1 − H/ln B inherits the reflected beta.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mi::MiValue;
use crate::specfun::{digamma, trigamma, BetaDist};

/// Squared coefficient of variation of one bin's mean amplitude under white
/// noise, before the 1/B² scaling: roughly (4/π − 1)·B/N with small-sample
/// corrections.
pub fn cell_cv2(n: usize, bins: usize) -> f64 {
    let nf = n as f64;
    let b = bins as f64;
    (4.0 / PI - 1.0) * (b / nf) * (1.0 + (b - 1.0) / nf * (1.0 - (b - 2.0) / (2.0 * nf)))
}

/// Variance of a normalized histogram cell.
pub fn sigma2_p(n: usize, bins: usize) -> f64 {
    let b = bins as f64;
    (1.0 - 1.0 / b) / (b * b) * cell_cv2(n, bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModelParams {
    pub n: usize,
    pub bins: usize,
    pub mu_p: f64,
    pub sigma2_p: f64,
    pub a_p: f64,
    pub b_p: f64,
    /// E[p ln p] for one cell.
    pub m1: f64,
    /// E[(p ln p)²] for one cell.
    pub m2: f64,
    /// E[p_i ln p_i · p_j ln p_j] for two distinct cells.
    pub c: f64,
    pub mu_h: f64,
    pub sigma2_h: f64,
    /// Same as `sigma2_h` but with the raw cross-moment in place of the
    /// covariance. Kept for comparison; it is not used by `dist`.
    pub sigma2_h_uncentered: f64,
    pub d_h: f64,
    pub dist: BetaDist,
}

// ψ(a+i) − ψ(A+j)
fn h(a: f64, big_a: f64, i: f64, j: f64) -> Result<f64> {
    Ok(digamma(a + i)? - digamma(big_a + j)?)
}

fn h1(a: f64, big_a: f64, i: f64, j: f64) -> Result<f64> {
    Ok(trigamma(a + i)? - trigamma(big_a + j)?)
}

impl NullModelParams {
    pub fn new(n: usize, bins: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("sample length must be >= 2, got {n}")));
        }
        if bins < 2 {
            return Err(Error::invalid(format!("bin count must be >= 2, got {bins}")));
        }
        let b = bins as f64;
        let mu_p = 1.0 / b;
        let sigma2_p = sigma2_p(n, bins);
        let a_p = mu_p * ((mu_p - mu_p * mu_p) / sigma2_p - 1.0);
        if a_p.is_nan() || a_p <= 0.0 {
            return Err(Error::NumericInstability(format!(
                "cell shape a_p = {a_p} (sigma2_p = {sigma2_p}) is not positive"
            )));
        }
        let b_p = (b - 1.0) * a_p;
        let big_a = b * a_p;

        let m1 = h(a_p, big_a, 1.0, 1.0)? / b;
        let m2 = (a_p + 1.0) / (b * (big_a + 1.0))
            * (h1(a_p, big_a, 2.0, 2.0)? + h(a_p, big_a, 2.0, 2.0)?.powi(2));
        let c = a_p * a_p / (big_a * (big_a + 1.0))
            * (h(a_p, big_a, 1.0, 2.0)?.powi(2) - trigamma(big_a + 2.0)?);

        let ln_b = b.ln();
        let mu_h = -b * m1 / ln_b;
        let var_term = b * (m2 - m1 * m1);
        let sigma2_h = (var_term + b * (b - 1.0) * (c - m1 * m1)) / (ln_b * ln_b);
        let sigma2_h_uncentered = (var_term + b * (b - 1.0) * c) / (ln_b * ln_b);
        let d_h = (mu_h - mu_h * mu_h) / sigma2_h - 1.0;

        if !(d_h > 0.0 && sigma2_h > 0.0 && mu_h > 0.0 && mu_h < 1.0) {
            return Err(Error::NumericInstability(format!(
                "n = {n}, B = {bins}: a_p = {a_p}, m1 = {m1}, m2 = {m2}, c = {c}, \
                 mu_h = {mu_h}, sigma2_h = {sigma2_h}, d_h = {d_h}"
            )));
        }
        // MI = 1 − H/ln B, so its shapes are the entropy's, swapped
        let dist = BetaDist::new((1.0 - mu_h) * d_h, mu_h * d_h)?;

        Ok(NullModelParams {
            n,
            bins,
            mu_p,
            sigma2_p,
            a_p,
            b_p,
            m1,
            m2,
            c,
            mu_h,
            sigma2_h,
            sigma2_h_uncentered,
            d_h,
            dist,
        })
    }

    /// Smallest MI that is significant at level `alpha`.
    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        self.dist.inv_cdf(1.0 - alpha)
    }

    /// Upper-tail probability of an MI at least as large as `mi`.
    pub fn p_value(&self, mi: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&mi) {
            return Err(Error::domain(format!("MI must lie in [0, 1], got {mi}")));
        }
        self.dist.sf(mi)
    }
}

/// Convenience alias for [`NullModelParams::new`].
pub fn null_params(n: usize, bins: usize) -> Result<NullModelParams> {
    NullModelParams::new(n, bins)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiAssessment {
    pub mi: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub critical_value: f64,
    pub significant: bool,
}

/// Tests an observed MI against the white-noise null for length `n`.
/// The null is rejected when the p-value falls below `alpha`.
pub fn assess(mi: &MiValue, n: usize, alpha: f64) -> Result<MiAssessment> {
    let params = NullModelParams::new(n, mi.bin_count)?;
    assess_with(&params, mi.mi, alpha)
}

pub fn assess_with(params: &NullModelParams, mi: f64, alpha: f64) -> Result<MiAssessment> {
    let critical_value = params.critical_value(alpha)?;
    let p_value = params.p_value(mi)?;
    Ok(MiAssessment {
        mi,
        p_value,
        alpha,
        critical_value,
        significant: p_value < alpha,
    })
}
