use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::sim::ErrorSample;
use crate::{Error, Result};

pub const MIN_SAMPLES: usize = 10;

/// Affine bound `|dF_A| <= alpha1 |P_e'| + alpha0` on the feedforward error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyBound {
    /// N
    pub alpha0: f64,
    /// N s/m
    pub alpha1: f64,
    pub confidence: f64,
    pub sample_count: usize,
    /// OLS intercept before the interval shift, N.
    #[serde(default)]
    pub intercept: f64,
    /// Standard error of the OLS slope; zero when the slope was clamped.
    #[serde(default)]
    pub slope_std_error: f64,
    /// Residual standard deviation, N.
    #[serde(default)]
    pub residual_std: f64,
}

impl UncertaintyBound {
    /// A bound given directly, with no regression behind it.
    pub fn fixed(alpha0: f64, alpha1: f64) -> Result<Self> {
        if !(alpha0 >= 0.0 && alpha1 >= 0.0 && alpha0.is_finite() && alpha1.is_finite()) {
            return Err(Error::InvalidParameter("uncertainty bound coefficients must be >= 0".into()));
        }
        Ok(UncertaintyBound {
            alpha0,
            alpha1,
            confidence: 1.0,
            sample_count: 0,
            intercept: alpha0,
            slope_std_error: 0.0,
            residual_std: 0.0,
        })
    }

    pub fn evaluate(&self, velocity_error: f64) -> f64 {
        self.alpha1 * velocity_error + self.alpha0
    }

    /// Two-sided confidence interval of the slope at `level`.
    pub fn slope_interval(&self, level: f64) -> Result<(f64, f64)> {
        let dof = self.sample_count as f64 - 2.0;
        let t = t_quantile(0.5 * (1.0 + level), dof)?;
        let h = t * self.slope_std_error;
        Ok((self.alpha1 - h, self.alpha1 + h))
    }
}

fn t_quantile(p: f64, dof: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::DegenerateRegression(e.to_string()))?;
    Ok(dist.inverse_cdf(p))
}

/// Least-squares slope of `|dF_A|` on `|P_e'|`, clamped at zero, and an
/// intercept raised to the upper edge of the two-sided prediction interval at
/// the mean abscissa.
pub fn fit_uncertainty_bound(samples: &[ErrorSample], confidence: f64) -> Result<UncertaintyBound> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::DegenerateRegression(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    if samples.iter().any(|s| !(s.velocity_error.is_finite() && s.load_error.is_finite())) {
        return Err(Error::DegenerateRegression("non-finite sample".into()));
    }
    let nf = n as f64;
    let xm = samples.iter().map(|s| s.velocity_error).sum::<f64>() / nf;
    let ym = samples.iter().map(|s| s.load_error).sum::<f64>() / nf;
    let sxx: f64 = samples.iter().map(|s| (s.velocity_error - xm).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.velocity_error - xm) * (s.load_error - ym)).sum();
    if !(sxx > 1e-12 * nf * (1.0 + xm * xm)) {
        return Err(Error::DegenerateRegression("no spread in the velocity error".into()));
    }
    let slope = sxy / sxx;
    let p = 0.5 * (1.0 + confidence);
    let (alpha1, intercept, s, slope_se, dof) = if slope > 0.0 {
        let a = ym - slope * xm;
        let sse: f64 = samples.iter().map(|q| (q.load_error - a - slope * q.velocity_error).powi(2)).sum();
        let s = (sse / (nf - 2.0)).sqrt();
        (slope, a, s, s / sxx.sqrt(), nf - 2.0)
    } else {
        // Flat model: the clamped fit is the sample mean.
        let sse: f64 = samples.iter().map(|q| (q.load_error - ym).powi(2)).sum();
        (0.0, ym, (sse / (nf - 1.0)).sqrt(), 0.0, nf - 1.0)
    };
    let half_width = t_quantile(p, dof)? * s * (1.0 + 1.0 / nf).sqrt();
    Ok(UncertaintyBound {
        alpha0: (intercept + half_width).max(0.0),
        alpha1,
        confidence,
        sample_count: n,
        intercept,
        slope_std_error: slope_se,
        residual_std: s,
    })
}
