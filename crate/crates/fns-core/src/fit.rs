//! Log-log least-squares rate fitting: error ~ const * (2 - alpha)^slope.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Outcome of regressing log(error) on log(2 - alpha).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFitResult {
    /// Which norm produced the errors (e.g. "sup", "bmo", "lplq(2,4)").
    pub norm_kind: String,
    pub alphas: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Theoretical slope for this error family (min(1, kappa) for solutions,
    /// kappa for data gaps, 1 for kernel distances).
    pub predicted_slope: f64,
}

impl RateFitResult {
    /// |slope - predicted| within the given tolerance.
    pub fn passes(&self, tol: f64) -> bool {
        (self.slope - self.predicted_slope).abs() <= tol
    }
}

/// Least squares of log(error) against log(2 - alpha).
///
/// Requires at least 3 points, every alpha < 2, every error > 0 (identical
/// trajectories cannot be rate-fitted; use the kernel-only mode c_pert = 0
/// with finer measurement instead).
pub fn fit_rate(
    alphas: &[f64],
    errors: &[f64],
    norm_kind: &str,
    predicted_slope: f64,
) -> Result<RateFitResult> {
    if alphas.len() != errors.len() {
        return Err(Error::param(
            "errors",
            "must have one entry per alpha",
            errors.len() as f64,
        ));
    }
    if alphas.len() < 3 {
        return Err(Error::param(
            "alphas",
            "rate fit needs at least 3 points",
            alphas.len() as f64,
        ));
    }
    let mut xs = Vec::with_capacity(alphas.len());
    let mut ys = Vec::with_capacity(alphas.len());
    for (&a, &e) in alphas.iter().zip(errors) {
        if !(a < 2.0) {
            return Err(Error::param("alpha", "rate fit requires alpha < 2", a));
        }
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::NonPositiveError { alpha: a, error: e });
        }
        xs.push((2.0 - a).ln());
        ys.push(e.ln());
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::param(
            "alphas",
            "rate fit needs at least two distinct alpha values",
            alphas[0],
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = syy - slope * sxy;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        1.0 - (ss_res / syy).max(0.0)
    };
    Ok(RateFitResult {
        norm_kind: norm_kind.to_string(),
        alphas: alphas.to_vec(),
        errors: errors.to_vec(),
        slope,
        intercept,
        r_squared,
        predicted_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_law_recovers_slope_and_intercept() {
        let alphas = [1.9, 1.95, 1.99];
        let errors: Vec<f64> = alphas.iter().map(|a| 3.0 * (2.0 - a)).collect();
        let fit = fit_rate(&alphas, &errors, "sup", 1.0).unwrap();
        assert_relative_eq!(fit.slope, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 3.0f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        assert!(fit.passes(0.15));
    }

    #[test]
    fn two_term_law_near_two_is_dominated_by_smaller_exponent() {
        // Over alpha in [1.99, 1.999] the kappa = 0.5 term of
        // (2-a) + (2-a)^0.5 dominates, so the fitted slope is close to 0.5.
        let alphas: Vec<f64> = (0..10).map(|i| 1.99 + 0.001 * i as f64).collect();
        let half: Vec<f64> = alphas
            .iter()
            .map(|a| (2.0 - a) + (2.0 - a).powf(0.5))
            .collect();
        let fit = fit_rate(&alphas, &half, "sup", 0.5).unwrap();
        assert!(
            (fit.slope - 0.5).abs() < 0.05,
            "kappa=0.5 two-term slope {}",
            fit.slope
        );
        // With kappa = 2 the linear kernel term wins.
        let quad: Vec<f64> = alphas
            .iter()
            .map(|a| (2.0 - a) + (2.0 - a).powf(2.0))
            .collect();
        let fit = fit_rate(&alphas, &quad, "sup", 1.0).unwrap();
        assert!(
            (fit.slope - 1.0).abs() < 0.05,
            "kappa=2 two-term slope {}",
            fit.slope
        );
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(fit_rate(&[1.9, 1.95], &[0.1, 0.05], "sup", 1.0).is_err());
        assert!(fit_rate(&[1.9, 1.95, 2.0], &[0.1, 0.05, 0.01], "sup", 1.0).is_err());
        let err = fit_rate(&[1.9, 1.95, 1.99], &[0.1, 0.0, 0.01], "sup", 1.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("kernel-only"), "guidance in message: {msg}");
    }
}
