//! Moment estimators with order-independent accumulation.
//!
//! Monte Carlo summaries are produced from sample vectors via pairwise
//! summation so that the reported values do not depend on how the samples
//! were chunked across workers.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tol;

/// A Monte Carlo estimate together with its standard error.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    /// Point estimate (imaginary part is zero for real observables).
    pub value: Complex64,
    /// Standard error of the point estimate.
    pub std_error: f64,
    /// Number of samples that entered the estimate.
    pub n_samples: usize,
}

/// Pairwise (cascade) sum of real values; associativity error is O(log n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of complex values.
pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// Sample mean with standard error `sqrt(sum |v - mean|^2 / ((N-1) N))`.
pub fn mean_estimate(samples: &[Complex64]) -> Result<MomentEstimate> {
    let n = samples.len();
    if n < tol::MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: n,
            min: tol::MIN_SAMPLES,
        });
    }
    let mean = pairwise_sum_complex(samples) / n as f64;
    let sq: Vec<f64> = samples.iter().map(|v| (v - mean).norm_sqr()).collect();
    let var_of_mean = pairwise_sum(&sq) / ((n - 1) as f64 * n as f64);
    Ok(MomentEstimate {
        value: mean,
        std_error: var_of_mean.sqrt(),
        n_samples: n,
    })
}

/// Mean of |v - m|^2 over samples v, where m is the estimated mean; used for
/// quadratic-variation observables. The standard error uses the variance of
/// the squared deviations: `sqrt((m4 - s^4) / N)` with `m4` the fourth central
/// moment and `s^2` the estimated variance.
pub fn variance_estimate(samples: &[Complex64]) -> Result<MomentEstimate> {
    let n = samples.len();
    if n < tol::MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: n,
            min: tol::MIN_SAMPLES,
        });
    }
    let mean = pairwise_sum_complex(samples) / n as f64;
    let sq: Vec<f64> = samples.iter().map(|v| (v - mean).norm_sqr()).collect();
    let s2 = pairwise_sum(&sq) / n as f64;
    let fourth: Vec<f64> = sq.iter().map(|d| (d - s2) * (d - s2)).collect();
    let m4 = pairwise_sum(&fourth) / n as f64;
    Ok(MomentEstimate {
        value: Complex64::new(s2, 0.0),
        std_error: (m4 / n as f64).sqrt(),
        n_samples: n,
    })
}
