//! Radial histogram estimators for the empirical eigenvalue measure Ξ and
//! the overlap-weighted measure Θ, plus comparison reports against density
//! predictions.
//!
//! A histogram is fed one `EmpiricalMeasure` per independent trajectory;
//! each bin then carries a mean mass across trajectories and a standard
//! error from plain counting statistics, which is the whole reason for
//! preferring histograms over kernel estimators here: the error bars are
//! transparent. Radial binning exploits the rotational symmetry of the
//! single-source density and the reflection symmetries of the two-source
//! one, trading resolution for variance at desk scale.
//!
//! The weighted (Θ) and unweighted (Ξ) paths are the same code: a measure
//! is a list of (atom, weight) pairs and only the weights differ.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::EmpiricalMeasure;

/// Simpson resolution for annulus-averaged predictions; the integrands are
/// smooth densities, so this is far below rounding error already.
const PREDICTION_INTERVALS: usize = 128;

/// Radial histogram of a random measure on ℂ, accumulated one independent
/// sample (trajectory) at a time.
#[derive(Debug, Clone)]
pub struct RadialHistogram {
    center: Complex64,
    edges: Vec<f64>,
    counts: Vec<u64>,
    /// Mass per bin for each added measure (rows = samples).
    per_sample: Vec<Vec<f64>>,
    /// Mass outside [edges.first, edges.last) for each added measure.
    outside: Vec<f64>,
}

/// One bin's density estimate with its counting-statistics standard error.
#[derive(Debug, Clone, Copy)]
pub struct BinEstimate {
    pub r_lo: f64,
    pub r_hi: f64,
    /// Total atom count across all samples.
    pub count: u64,
    /// Mean mass per sample divided by the annulus area.
    pub estimate: f64,
    /// Standard error of the estimate across samples.
    pub std_error: f64,
}

/// One bin of a comparison against a predicted radial density profile.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BinComparison {
    pub r_lo: f64,
    pub r_hi: f64,
    pub count: u64,
    pub estimate: f64,
    /// Annulus average of the predicted density.
    pub prediction: f64,
    pub std_error: f64,
    pub z_score: f64,
}

/// Histogram-vs-prediction report: per-bin rows plus sup-norm summaries.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub label: String,
    pub n_samples: usize,
    pub bins: Vec<BinComparison>,
    /// max_bins |estimate − prediction|.
    pub sup_abs: f64,
    /// max_bins |estimate − prediction| / |prediction| over bins with a
    /// nonzero prediction.
    pub sup_rel: f64,
    pub max_z: f64,
}

impl RadialHistogram {
    /// Histogram on the given radius edges (strictly increasing, first ≥ 0).
    pub fn new(center: Complex64, edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Config(
                "histogram needs at least two radius edges".into(),
            ));
        }
        if edges.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::Config(
                "histogram edges must be finite and nonnegative".into(),
            ));
        }
        if edges.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Config(
                "histogram edges must be strictly increasing".into(),
            ));
        }
        if !center.re.is_finite() || !center.im.is_finite() {
            return Err(Error::Config("histogram center must be finite".into()));
        }
        let n_bins = edges.len() - 1;
        Ok(RadialHistogram {
            center,
            edges,
            counts: vec![0; n_bins],
            per_sample: Vec::new(),
            outside: Vec::new(),
        })
    }

    /// Equal-width bins covering [r_lo, r_hi].
    pub fn uniform(center: Complex64, r_lo: f64, r_hi: f64, n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        if !(r_hi > r_lo) {
            return Err(Error::Config("histogram needs r_hi > r_lo".into()));
        }
        let edges = (0..=n_bins)
            .map(|i| r_lo + (r_hi - r_lo) * i as f64 / n_bins as f64)
            .collect();
        RadialHistogram::new(center, edges)
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn n_samples(&self) -> usize {
        self.per_sample.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Area of the i-th annulus, π(b² − a²).
    pub fn bin_area(&self, i: usize) -> f64 {
        let (a, b) = (self.edges[i], self.edges[i + 1]);
        std::f64::consts::PI * (b * b - a * a)
    }

    /// Accumulate one independent sample of the random measure. Atoms with
    /// radius below the first or at/above the last edge go to the outside
    /// accumulator so the total mass is never silently dropped.
    pub fn add_measure(&mut self, measure: &EmpiricalMeasure) {
        let mut bins = vec![0.0; self.n_bins()];
        let mut outside = 0.0;
        for &(z, weight) in &measure.atoms {
            let r = (z - self.center).norm();
            // partition_point gives the first edge > r, so bin i holds
            // edges[i] ≤ r < edges[i+1].
            let upper = self.edges.partition_point(|e| *e <= r);
            if upper == 0 || upper == self.edges.len() {
                outside += weight;
            } else {
                bins[upper - 1] += weight;
                self.counts[upper - 1] += 1;
            }
        }
        self.per_sample.push(bins);
        self.outside.push(outside);
    }

    /// Per-bin density estimates: mean bin mass over samples divided by the
    /// annulus area, with the standard error of that mean. Needs at least
    /// two samples for a meaningful error bar.
    pub fn density(&self) -> Result<Vec<BinEstimate>> {
        let n = self.per_sample.len();
        if n < 2 {
            return Err(Error::InsufficientSamples { got: n, min: 2 });
        }
        let mut out = Vec::with_capacity(self.n_bins());
        for i in 0..self.n_bins() {
            let area = self.bin_area(i);
            let masses: Vec<f64> = self.per_sample.iter().map(|row| row[i]).collect();
            let mean = crate::stats::pairwise_sum(&masses) / n as f64;
            let ss: f64 = masses.iter().map(|m| (m - mean) * (m - mean)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            out.push(BinEstimate {
                r_lo: self.edges[i],
                r_hi: self.edges[i + 1],
                count: self.counts[i],
                estimate: mean / area,
                std_error: sd / (n as f64).sqrt() / area,
            });
        }
        Ok(out)
    }

    /// Σ(density · bin area): the mass the histogram accounts for, averaged
    /// over samples. Equals `measure_mass` whenever the edges cover the
    /// support of every added measure.
    pub fn binned_mass(&self) -> f64 {
        if self.per_sample.is_empty() {
            return 0.0;
        }
        let n = self.per_sample.len() as f64;
        (0..self.n_bins())
            .map(|i| self.per_sample.iter().map(|row| row[i]).sum::<f64>() / n)
            .sum()
    }

    /// Mean total mass of the added measures, outside atoms included.
    pub fn measure_mass(&self) -> f64 {
        if self.per_sample.is_empty() {
            return 0.0;
        }
        let n = self.per_sample.len() as f64;
        self.binned_mass() + self.outside.iter().sum::<f64>() / n
    }

    /// Ensemble mean of the total measure mass with its standard error.
    /// For Θ this is the mean of (1/n²)Σ_j 𝒪_jj across trajectories.
    pub fn measure_mass_estimate(&self) -> Result<(f64, f64)> {
        let n = self.per_sample.len();
        if n < 2 {
            return Err(Error::InsufficientSamples { got: n, min: 2 });
        }
        let totals: Vec<f64> = self
            .per_sample
            .iter()
            .zip(&self.outside)
            .map(|(row, out)| row.iter().sum::<f64>() + out)
            .collect();
        let mean = crate::stats::pairwise_sum(&totals) / n as f64;
        let ss: f64 = totals.iter().map(|m| (m - mean) * (m - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        Ok((mean, sd / (n as f64).sqrt()))
    }

    /// Compare the per-bin estimates against a radial density profile.
    /// The per-bin prediction is the annulus average of `predict`, i.e.
    /// ∫ predict(r)·2πr dr over the bin divided by the bin area.
    pub fn compare(&self, label: &str, predict: &dyn Fn(f64) -> f64) -> Result<ComparisonReport> {
        let predictions: Vec<f64> = (0..self.n_bins())
            .map(|i| annulus_average(predict, self.edges[i], self.edges[i + 1]))
            .collect();
        self.compare_with_predictions(label, &predictions)
    }

    /// Compare against externally supplied per-bin predictions (one value
    /// per bin, already annulus-averaged).
    pub fn compare_with_predictions(
        &self,
        label: &str,
        predictions: &[f64],
    ) -> Result<ComparisonReport> {
        if predictions.len() != self.n_bins() {
            return Err(Error::Config(format!(
                "got {} predictions for {} bins",
                predictions.len(),
                self.n_bins()
            )));
        }
        let density = self.density()?;
        let mut bins = Vec::with_capacity(density.len());
        let mut sup_abs: f64 = 0.0;
        let mut sup_rel: f64 = 0.0;
        let mut max_z: f64 = 0.0;
        for (est, &prediction) in density.into_iter().zip(predictions) {
            let dev = (est.estimate - prediction).abs();
            let z_score = if est.std_error == 0.0 {
                if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                dev / est.std_error
            };
            sup_abs = sup_abs.max(dev);
            if prediction != 0.0 {
                sup_rel = sup_rel.max(dev / prediction.abs());
            }
            max_z = max_z.max(z_score);
            bins.push(BinComparison {
                r_lo: est.r_lo,
                r_hi: est.r_hi,
                count: est.count,
                estimate: est.estimate,
                prediction,
                std_error: est.std_error,
                z_score,
            });
        }
        Ok(ComparisonReport {
            label: label.to_string(),
            n_samples: self.n_samples(),
            bins,
            sup_abs,
            sup_rel,
            max_z,
        })
    }
}

/// Annulus average of a radial profile: ∫_a^b f(r)·2πr dr / (π(b²−a²)),
/// composite Simpson on the mass integrand.
pub fn annulus_average(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = PREDICTION_INTERVALS;
    let h = (b - a) / m as f64;
    let g = |r: f64| f(r) * 2.0 * std::f64::consts::PI * r;
    let mut sum = g(a) + g(b);
    for i in 1..m {
        let r = a + h * i as f64;
        sum += g(r) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let integral = sum * h / 3.0;
    integral / (std::f64::consts::PI * (b * b - a * a))
}

impl ComparisonReport {
    /// True when every bin sits within `z_max` standard errors of its
    /// prediction.
    pub fn consistent(&self, z_max: f64) -> bool {
        self.bins.iter().all(|b| b.z_score <= z_max)
    }
}

/// Mean-zero probe on a disk: the measure's mass on {|z − center| < r},
/// averaged over samples, with its standard error. Used to check that a
/// density vanishes at a point (e.g. Θ at the origin between two sources).
pub fn disk_probe(measures: &[EmpiricalMeasure], center: Complex64, r: f64) -> Result<(f64, f64)> {
    let mut hist = RadialHistogram::uniform(center, 0.0, r, 1)?;
    for m in measures {
        hist.add_measure(m);
    }
    let d = hist.density()?[0];
    Ok((d.estimate, d.std_error))
}
