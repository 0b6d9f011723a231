//! Outage-level bookkeeping: splitting a joint Eve outage across independent
//! Eves, and the disk radius that holds a 2-D Gaussian error with a given
//! probability.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OutageError {
    #[error("probability must lie in (0, 1), got {0}")]
    Probability(f64),
    #[error("standard deviation must be finite and nonnegative, got {0}")]
    Std(f64),
    #[error("eve count must be at least 1")]
    EveCount,
}

/// Per-Eve outage level `1 - (1 - rho)^(1/K)`, so that `K` independent
/// per-Eve guarantees multiply to the joint level `rho`.
pub fn decouple_outage(rho: f64, k: usize) -> f64 {
    let k = k.max(1) as f64;
    // -expm1(ln(1-rho)/K) keeps precision for small rho
    -((-rho).ln_1p() / k).exp_m1()
}

/// Inverse CDF of a chi-square variable with two degrees of freedom.
#[inline]
pub fn chi2_2dof_inv_cdf(p: f64) -> f64 {
    -2.0 * (-p).ln_1p()
}

/// Radius `std * sqrt(F^{-1}(p))` of the disk containing an isotropic 2-D
/// Gaussian error with probability `p`.
///
/// `prob` is the coverage for PUs (`1 - phi`). For Eves pass `1 - rho` and
/// `Some(K)`; the per-Eve coverage `(1 - rho)^(1/K)` is applied here.
pub fn matched_radius(std_m: f64, prob: f64, k_for_eve: Option<usize>) -> Result<f64, OutageError> {
    if !(std_m.is_finite() && std_m >= 0.0) {
        return Err(OutageError::Std(std_m));
    }
    if !(prob > 0.0 && prob < 1.0) {
        return Err(OutageError::Probability(prob));
    }
    let p = match k_for_eve {
        None => prob,
        Some(0) => return Err(OutageError::EveCount),
        Some(k) => prob.powf(1.0 / k as f64),
    };
    Ok(std_m * chi2_2dof_inv_cdf(p).sqrt())
}
