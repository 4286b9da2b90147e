//! Verification of the eigenvalue/overlap SDE system.
//!
//! The evolution of the spectral data (Λ, 𝒪) under matrix Brownian motion
//! obeys closed-form covariation, drift, and quadratic-variation rates built
//! from the overlap matrix and the Gram pair (A, A⁻¹). This module evaluates
//! those rates exactly as written and checks them against one-step Monte
//! Carlo estimates: sample many independent increments dM, re-diagonalize,
//! re-match labels, and compare empirical conditional moments against the
//! formulas at z-score ≤ 3.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::field;
use crate::frame::{build_frame, match_permutation, SpectralFrame};
use crate::linalg::ComplexMatrix;
use crate::process::TrajectoryRecord;
use crate::rng::{NoiseStream, Purpose};
use crate::stats::{mean_estimate, variance_estimate, MomentEstimate};
use crate::tol;

/// Covariation rate ⟨dΛ_j, dΛ̄_k⟩/dt = 𝒪_jk/n.
pub fn lambda_covariation_formula(frame: &SpectralFrame, j: usize, k: usize) -> Complex64 {
    let n = frame.n();
    assert!(j < n && k < n, "index out of range");
    frame.overlap[(j, k)] / n as f64
}

/// Drift rate of 𝒪_jk:
///
/// ```text
/// (2/n) Σ_{ℓ≠j, m≠k} (𝒪_jk 𝒪_ℓm + 𝒪_ℓk 𝒪_jm) / ((Λ_j−Λ_ℓ)(Λ̄_k−Λ̄_m)),
/// ```
///
/// summed exactly as written.
pub fn overlap_drift_formula(frame: &SpectralFrame, j: usize, k: usize) -> Complex64 {
    let n = frame.n();
    assert!(j < n && k < n, "index out of range");
    let o = &frame.overlap;
    let lambda = &frame.lambda;
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 0..n {
        if l == j {
            continue;
        }
        for m in 0..n {
            if m == k {
                continue;
            }
            let numer = o[(j, k)] * o[(l, m)] + o[(l, k)] * o[(j, m)];
            let denom = (lambda[j] - lambda[l]) * (lambda[k] - lambda[m]).conj();
            sum += numer / denom;
        }
    }
    sum * (2.0 / n as f64)
}

/// Permanent of a 2×2 array: per([[a, b], [c, d]]) = ad + bc.
fn per2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    a * d + b * c
}

/// Quadratic-variation rate of 𝒪_jk:
///
/// ```text
/// (𝒪_jk/n) Σ_{ℓ≠j, m≠k} per([[A_kℓ A_mj,      A_kℓ A_mj + A_kj A_mℓ   ],
///                            [A⁻¹_ℓk A⁻¹_jm,  A⁻¹_ℓk A⁻¹_jm + A⁻¹_jk A⁻¹_ℓm]])
///                        / ((Λ_j−Λ_ℓ)(Λ̄_k−Λ̄_m)).
/// ```
pub fn overlap_qv_formula(frame: &SpectralFrame, j: usize, k: usize) -> Complex64 {
    let n = frame.n();
    assert!(j < n && k < n, "index out of range");
    let a = &frame.a;
    let ai = &frame.a_inv;
    let lambda = &frame.lambda;
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 0..n {
        if l == j {
            continue;
        }
        for m in 0..n {
            if m == k {
                continue;
            }
            let p = per2(
                a[(k, l)] * a[(m, j)],
                a[(k, l)] * a[(m, j)] + a[(k, j)] * a[(m, l)],
                ai[(l, k)] * ai[(j, m)],
                ai[(l, k)] * ai[(j, m)] + ai[(j, k)] * ai[(l, m)],
            );
            let denom = (lambda[j] - lambda[l]) * (lambda[k] - lambda[m]).conj();
            sum += p / denom;
        }
    }
    frame.overlap[(j, k)] * sum / n as f64
}

/// Martingale increment of 𝒪_jk for a supplied matrix increment dm, with
/// X = S⁻¹ dm S:
///
/// ```text
/// d𝓜_jk = Σ_{ℓ≠j} [A⁻¹_jk A_kℓ X_ℓj + A_kj A⁻¹_ℓk X_jℓ] / (Λ_j−Λ_ℓ)
///       + Σ_{ℓ≠k} [A⁻¹_jk A_ℓj X̄_ℓk + A_kj A⁻¹_jℓ X̄_kℓ] / (Λ̄_k−Λ̄_ℓ).
/// ```
pub fn overlap_martingale_increment(
    frame: &SpectralFrame,
    dm: &ComplexMatrix,
    j: usize,
    k: usize,
) -> Complex64 {
    let n = frame.n();
    assert!(j < n && k < n, "index out of range");
    let x = frame.s_inv.mul(dm).mul(&frame.s);
    let a = &frame.a;
    let ai = &frame.a_inv;
    let lambda = &frame.lambda;
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 0..n {
        if l != j {
            let numer = ai[(j, k)] * a[(k, l)] * x[(l, j)] + a[(k, j)] * ai[(l, k)] * x[(j, l)];
            sum += numer / (lambda[j] - lambda[l]);
        }
        if l != k {
            let numer = ai[(j, k)] * a[(l, j)] * x[(l, k)].conj()
                + a[(k, j)] * ai[(j, l)] * x[(k, l)].conj();
            sum += numer / (lambda[k] - lambda[l]).conj();
        }
    }
    sum
}

/// Conditional moments testable by one-step Monte Carlo. Indices are
/// zero-based; `Display` prints them one-based to match the usual
/// mathematical notation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    /// ⟨dΛ_j, dΛ̄_k⟩/dt against 𝒪_jk/n.
    LambdaCov { j: usize, k: usize },
    /// Holomorphic pairing ⟨dΛ_j, dΛ_k⟩/dt against 0.
    LambdaCovHolo { j: usize, k: usize },
    /// E[d𝒪_jk]/dt against the drift formula.
    OverlapDrift { j: usize, k: usize },
    /// Var[d𝒪_jk]/dt (j = k) or E[(d𝒪_jk − mean)²]/dt against the QV formula.
    OverlapQv { j: usize, k: usize },
    /// E[dΨ]/dt at (z, w) against 2|∂Ψ/∂w|².
    PsiDrift { z: Complex64, w: Complex64 },
    /// Var[dΨ]/dt at (z, w) against ∇²_wΨ/(4n²).
    PsiQv { z: Complex64, w: Complex64 },
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::LambdaCov { j, k } => write!(f, "lambda_cov({},{})", j + 1, k + 1),
            Observable::LambdaCovHolo { j, k } => {
                write!(f, "lambda_cov_holo({},{})", j + 1, k + 1)
            }
            Observable::OverlapDrift { j, k } => write!(f, "overlap_drift({},{})", j + 1, k + 1),
            Observable::OverlapQv { j, k } => write!(f, "overlap_qv({},{})", j + 1, k + 1),
            Observable::PsiDrift { z, w } => {
                write!(
                    f,
                    "psi_drift(z={:+.3}{:+.3}i,w={:+.3}{:+.3}i)",
                    z.re, z.im, w.re, w.im
                )
            }
            Observable::PsiQv { z, w } => {
                write!(
                    f,
                    "psi_qv(z={:+.3}{:+.3}i,w={:+.3}{:+.3}i)",
                    z.re, z.im, w.re, w.im
                )
            }
        }
    }
}

/// Outcome of one conditional-moment test.
#[derive(Debug, Clone)]
pub struct MomentTestResult {
    pub observable: Observable,
    pub estimate: MomentEstimate,
    pub predicted: Complex64,
    pub z_score: f64,
    pub pass: bool,
}

fn z_score(estimate: &MomentEstimate, predicted: Complex64) -> f64 {
    let dev = (estimate.value - predicted).norm();
    if estimate.std_error == 0.0 {
        return if dev == 0.0 { 0.0 } else { f64::INFINITY };
    }
    dev / estimate.std_error
}

/// Draw `n_samples` independent one-step increments from m, estimate the
/// conditional moment named by `observable`, and compare it with the
/// closed-form rate evaluated at m. All rates are per unit time.
pub fn one_step_moment_test(
    m: &ComplexMatrix,
    dt: f64,
    n_samples: usize,
    observable: Observable,
    seed: u64,
) -> Result<MomentTestResult> {
    if n_samples < tol::MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: n_samples,
            min: tol::MIN_SAMPLES,
        });
    }
    let n = m.n();
    let scale = (dt / (2.0 * n as f64)).sqrt();
    let stream = NoiseStream::new(seed, Purpose::OneStep);

    let (estimate, predicted) = match observable {
        Observable::LambdaCov { j, k } | Observable::LambdaCovHolo { j, k } => {
            let base = build_frame(m, 0.0, tol::GAP_TOL)?;
            assert!(j < n && k < n, "index out of range");
            let holo = matches!(observable, Observable::LambdaCovHolo { .. });
            let samples = collect(n_samples, |i| {
                let dm = stream.gaussian_matrix(n, i as u64, 0, 0, scale);
                let next = crate::linalg::eigenvalues_only(&m.add(&dm))?;
                let perm = match_permutation(&base.lambda, &next)?;
                let dj = next[perm[j]] - base.lambda[j];
                let dk = next[perm[k]] - base.lambda[k];
                Ok(if holo {
                    dj * dk / dt
                } else {
                    dj * dk.conj() / dt
                })
            })?;
            let predicted = if holo {
                Complex64::new(0.0, 0.0)
            } else {
                lambda_covariation_formula(&base, j, k)
            };
            (mean_estimate(&samples)?, predicted)
        }
        Observable::OverlapDrift { j, k } => {
            let base = build_frame(m, 0.0, tol::GAP_TOL)?;
            assert!(j < n && k < n, "index out of range");
            let samples = overlap_increments(m, &base, dt, n_samples, &stream, scale, j, k)?;
            let rates: Vec<Complex64> = samples.iter().map(|d| d / dt).collect();
            (mean_estimate(&rates)?, overlap_drift_formula(&base, j, k))
        }
        Observable::OverlapQv { j, k } => {
            let base = build_frame(m, 0.0, tol::GAP_TOL)?;
            assert!(j < n && k < n, "index out of range");
            let samples = overlap_increments(m, &base, dt, n_samples, &stream, scale, j, k)?;
            let mut est = variance_estimate(&samples)?;
            est.value /= dt;
            est.std_error /= dt;
            (est, overlap_qv_formula(&base, j, k))
        }
        Observable::PsiDrift { z, w } => {
            let psi0 = field::psi(z, w, m)?;
            let samples = collect(n_samples, |i| {
                let dm = stream.gaussian_matrix(n, i as u64, 0, 0, scale);
                Ok(Complex64::new(
                    (field::psi(z, w, &m.add(&dm))? - psi0) / dt,
                    0.0,
                ))
            })?;
            let coeffs = field::spde_coefficients(z, w, m)?;
            (
                mean_estimate(&samples)?,
                Complex64::new(coeffs.psi_drift, 0.0),
            )
        }
        Observable::PsiQv { z, w } => {
            let psi0 = field::psi(z, w, m)?;
            let samples = collect(n_samples, |i| {
                let dm = stream.gaussian_matrix(n, i as u64, 0, 0, scale);
                Ok(Complex64::new(field::psi(z, w, &m.add(&dm))? - psi0, 0.0))
            })?;
            let mut est = variance_estimate(&samples)?;
            est.value /= dt;
            est.std_error /= dt;
            let coeffs = field::spde_coefficients(z, w, m)?;
            (est, Complex64::new(coeffs.psi_qv, 0.0))
        }
    };

    let z = z_score(&estimate, predicted);
    Ok(MomentTestResult {
        observable,
        estimate,
        predicted,
        z_score: z,
        pass: z <= tol::Z_PASS,
    })
}

/// Parallel sample collection with fail-fast error propagation.
fn collect<F>(n_samples: usize, f: F) -> Result<Vec<Complex64>>
where
    F: Fn(usize) -> Result<Complex64> + Sync + Send,
{
    let results = exec::map_indexed(n_samples, f);
    results.into_iter().collect()
}

/// One-step overlap increments d𝒪_jk, labels re-matched to the base frame.
#[allow(clippy::too_many_arguments)]
fn overlap_increments(
    m: &ComplexMatrix,
    base: &SpectralFrame,
    _dt: f64,
    n_samples: usize,
    stream: &NoiseStream,
    scale: f64,
    j: usize,
    k: usize,
) -> Result<Vec<Complex64>> {
    let n = m.n();
    collect(n_samples, |i| {
        let dm = stream.gaussian_matrix(n, i as u64, 0, 0, scale);
        let next = build_frame(&m.add(&dm), 0.0, tol::GAP_TOL)?;
        let perm = match_permutation(&base.lambda, &next.lambda)?;
        let relabeled = next.relabeled(&perm);
        Ok(relabeled.overlap[(j, k)] - base.overlap[(j, k)])
    })
}

/// Smooth test function with a supplied Laplacian.
pub struct TestFunction<'a> {
    pub eval: &'a (dyn Fn(Complex64) -> f64 + Sync),
    pub laplacian: &'a (dyn Fn(Complex64) -> f64 + Sync),
}

/// Test the compensated empirical-measure increment
///
/// ```text
/// ⟨Ξ(t+dt), φ⟩ − ⟨Ξ(t), φ⟩ − (dt/4n²) Σ_j (∇²φ)(Λ_j(t)) 𝒪_jj(t)
/// ```
///
/// for zero mean over every consecutive recorded frame pair at spacing dt.
pub fn relation2_test(
    records: &[TrajectoryRecord],
    phi: &TestFunction<'_>,
    dt: f64,
) -> Result<(MomentEstimate, f64)> {
    let mut samples: Vec<Complex64> = Vec::new();
    for record in records {
        for i in 0..record.frames.len().saturating_sub(1) {
            let spacing = record.times[i + 1] - record.times[i];
            if (spacing - dt).abs() > 1e-9 * dt.max(spacing) {
                continue;
            }
            let a = &record.frames[i];
            let b = &record.frames[i + 1];
            let n = a.n() as f64;
            let pair_a: f64 = a.lambda.iter().map(|l| (phi.eval)(*l)).sum::<f64>() / n;
            let pair_b: f64 = b.lambda.iter().map(|l| (phi.eval)(*l)).sum::<f64>() / n;
            let compensator: f64 = (0..a.n())
                .map(|j| (phi.laplacian)(a.lambda[j]) * a.overlap[(j, j)].re)
                .sum::<f64>()
                * dt
                / (4.0 * n * n);
            samples.push(Complex64::new(pair_b - pair_a - compensator, 0.0));
        }
    }
    if samples.len() < tol::MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            min: tol::MIN_SAMPLES,
        });
    }
    let estimate = mean_estimate(&samples)?;
    let z = z_score(&estimate, Complex64::new(0.0, 0.0));
    Ok((estimate, z))
}
