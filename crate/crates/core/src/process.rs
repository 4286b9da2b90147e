//! Matrix Brownian motion: exact increment sampling, trajectory evolution
//! with continuous eigenvalue labeling, and reproducible parallel ensembles.
//!
//! The process M(t) has independent complex Gaussian entries with
//! ⟨dM_jk, dM̄_ℓm⟩ = δ_jℓ δ_km dt/n and vanishing holomorphic covariation,
//! so increments are sampled exactly — there is no discretization error in
//! M itself, only in the observation cadence. Every draw is addressed by
//! (trajectory, step, entry, substep) through the counter-based stream,
//! which makes ensembles independent of worker count and scheduling.

use crate::error::{Error, Result};
use crate::exec;
use crate::frame::{build_frame, match_permutation, SpectralFrame};
use crate::linalg::ComplexMatrix;
use crate::rng::{NoiseStream, Purpose};
use crate::tol;

/// Ensemble configuration.
#[derive(Clone, Debug)]
pub struct ProcessConfig {
    /// Matrix dimension n.
    pub n: usize,
    /// Final time; must be an integer multiple of `dt`.
    pub t_end: f64,
    /// Step size (observation cadence; increments are exact at any dt).
    pub dt: f64,
    /// Initial matrix M(0).
    pub m0: ComplexMatrix,
    /// Master seed; trajectories derive independent substreams from it.
    pub seed: u64,
    /// Number of trajectories.
    pub n_traj: u64,
    /// Record every k-th step (labels are still tracked every step).
    pub frame_stride: usize,
    /// Keep M(t) snapshots alongside the frames.
    pub store_matrices: bool,
    /// Accept a degenerate M(0) by starting the frame sequence at t = dt
    /// (the spectrum is almost surely simple at any positive time).
    pub allow_degenerate_start: bool,
}

impl ProcessConfig {
    /// Config with default observation options (every step, no snapshots,
    /// degenerate starts allowed).
    pub fn new(
        n: usize,
        t_end: f64,
        dt: f64,
        m0: ComplexMatrix,
        seed: u64,
        n_traj: u64,
    ) -> Result<Self> {
        let cfg = ProcessConfig {
            n,
            t_end,
            dt,
            m0,
            seed,
            n_traj,
            frame_stride: 1,
            store_matrices: false,
            allow_degenerate_start: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check the invariants: positive step, t_end on the step grid, matrix
    /// dimensions consistent.
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::Config(format!(
                "t_end ({}) must be at least dt ({})",
                self.t_end, self.dt
            )));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return Err(Error::Config(format!(
                "t_end ({}) must be an integer multiple of dt ({})",
                self.t_end, self.dt
            )));
        }
        if self.n_traj < 1 {
            return Err(Error::Config("n_traj must be at least 1".into()));
        }
        if self.m0.n() != self.n {
            return Err(Error::Config(format!(
                "m0 is {}×{} but n = {}",
                self.m0.n(),
                self.m0.n(),
                self.n
            )));
        }
        if self.frame_stride < 1 {
            return Err(Error::Config("frame_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps on the grid.
    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

/// One observed trajectory: frames relabeled for eigenvalue-path continuity.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    /// Trajectory index within the ensemble.
    pub traj: u64,
    /// Recorded sample times (increasing).
    pub times: Vec<f64>,
    /// One frame per recorded time, relabeled so Λ_j(t) is continuous.
    pub frames: Vec<SpectralFrame>,
    /// M(t) snapshots aligned with `times`, when requested.
    pub matrices: Option<Vec<ComplexMatrix>>,
    /// Every matching permutation applied (one per step, path → canonical).
    pub permutation_log: Vec<Vec<usize>>,
    /// Collision monitor: smallest eigenvalue gap seen at any frame build.
    pub min_gap_seen: f64,
    /// Number of steps that needed the automatic dt/2 retry.
    pub retries: u64,
}

/// Exact Brownian increment dM with entries (g_R + i·g_I)·√(dt/2n), so that
/// E|dM_jk|² = dt/n and E[dM_jk²] = 0.
pub fn sample_increment(
    stream: &NoiseStream,
    n: usize,
    dt: f64,
    traj: u64,
    step: u64,
    substep: u64,
) -> ComplexMatrix {
    assert!(dt >= 0.0, "negative time step");
    stream.gaussian_matrix(n, traj, step, substep, (dt / (2.0 * n as f64)).sqrt())
}

/// One exact step: M(t + dt) = M(t) + dM.
pub fn advance(
    m: &ComplexMatrix,
    stream: &NoiseStream,
    dt: f64,
    traj: u64,
    step: u64,
    substep: u64,
) -> ComplexMatrix {
    m.add(&sample_increment(stream, m.n(), dt, traj, step, substep))
}

/// Whether a step failure is the near-collision pathology that a dt/2 retry
/// can resolve (fresh endpoint noise, plus a midpoint frame to carry labels).
fn retryable(e: &Error) -> bool {
    matches!(
        e,
        Error::DegenerateSpectrum { .. }
            | Error::AmbiguousMatching { .. }
            | Error::SingularMatrix { .. }
    )
}

/// Build the frame at (m, t) and relabel it to continue `prev`'s labels.
fn step_frame(
    prev: Option<&SpectralFrame>,
    m: &ComplexMatrix,
    t: f64,
) -> Result<(SpectralFrame, Vec<usize>)> {
    let canonical = build_frame(m, t, tol::GAP_TOL)?;
    match prev {
        None => {
            let n = canonical.n();
            Ok((canonical, (0..n).collect()))
        }
        Some(p) => {
            let perm = match_permutation(&p.lambda, &canonical.lambda)?;
            let relabeled = canonical.relabeled(&perm);
            Ok((relabeled, perm))
        }
    }
}

/// Evolve one trajectory. Deterministic given (config.seed, traj): the
/// driving noise is a pure function of counters, and whether a retry fires
/// is itself a function of the drawn path.
pub fn run_trajectory(config: &ProcessConfig, traj: u64) -> Result<TrajectoryRecord> {
    config.validate()?;
    let stream = NoiseStream::new(config.seed, Purpose::Increments);
    let n_steps = config.n_steps();
    let stride = config.frame_stride as u64;

    let mut m = config.m0.clone();
    let mut times = Vec::new();
    let mut frames: Vec<SpectralFrame> = Vec::new();
    let mut matrices: Option<Vec<ComplexMatrix>> = config.store_matrices.then(Vec::new);
    let mut permutation_log: Vec<Vec<usize>> = Vec::new();
    let mut min_gap_seen = f64::INFINITY;
    let mut retries = 0u64;
    let mut prev: Option<SpectralFrame> = None;

    // Frame at t = 0 — skipped for a degenerate start, in which case labels
    // are seeded by the first post-step frame.
    match build_frame(&m, 0.0, tol::GAP_TOL) {
        Ok(f) => {
            min_gap_seen = min_gap_seen.min(f.min_gap);
            times.push(0.0);
            frames.push(f.clone());
            if let Some(ms) = matrices.as_mut() {
                ms.push(m.clone());
            }
            prev = Some(f);
        }
        Err(Error::DegenerateSpectrum { .. }) if config.allow_degenerate_start => {}
        Err(e) => return Err(e.in_trajectory(traj, 0)),
    }

    for step in 0..n_steps {
        let t_next = (step + 1) as f64 * config.dt;
        let m_full = advance(&m, &stream, config.dt, traj, step, 0);
        let (m_next, frame, perm) = match step_frame(prev.as_ref(), &m_full, t_next) {
            Ok((frame, perm)) => (m_full, frame, perm),
            Err(e) if retryable(&e) => {
                // Single dt/2 retry: resample the step as two half-steps
                // (fresh substream counters) and carry labels through an
                // unrecorded midpoint frame. Failures past this are fatal.
                retries += 1;
                let half = config.dt / 2.0;
                let m_mid = advance(&m, &stream, half, traj, step, 1);
                let (mid_frame, _) = step_frame(prev.as_ref(), &m_mid, t_next - half)
                    .map_err(|e| e.in_trajectory(traj, step))?;
                min_gap_seen = min_gap_seen.min(mid_frame.min_gap);
                let m_end = advance(&m_mid, &stream, half, traj, step, 2);
                let (frame, perm) = step_frame(Some(&mid_frame), &m_end, t_next)
                    .map_err(|e| e.in_trajectory(traj, step))?;
                (m_end, frame, perm)
            }
            Err(e) => return Err(e.in_trajectory(traj, step)),
        };
        min_gap_seen = min_gap_seen.min(frame.min_gap);
        m = m_next;
        permutation_log.push(perm);
        if (step + 1) % stride == 0 || step + 1 == n_steps {
            times.push(t_next);
            frames.push(frame.clone());
            if let Some(ms) = matrices.as_mut() {
                ms.push(m.clone());
            }
        }
        prev = Some(frame);
    }

    Ok(TrajectoryRecord {
        traj,
        times,
        frames,
        matrices,
        permutation_log,
        min_gap_seen,
        retries,
    })
}

/// Run the full ensemble across the worker pool. Trajectory k is a pure
/// function of (seed, k), and results come back in index order, so the
/// output is bit-identical for any worker count. The first failing
/// trajectory (by index) aborts the ensemble with its context attached.
pub fn run_ensemble(config: &ProcessConfig) -> Result<Vec<TrajectoryRecord>> {
    config.validate()?;
    let results = exec::map_indexed(config.n_traj as usize, |k| run_trajectory(config, k as u64));
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}

/// Largest eigenvalue modulus of a frame.
pub fn spectral_radius(frame: &SpectralFrame) -> f64 {
    frame.lambda.iter().map(|l| l.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn stream() -> NoiseStream {
        NoiseStream::new(99, Purpose::Fixtures)
    }

    #[test]
    fn increment_moments_match_the_covariation_law() {
        // n = 2, dt = 1, 10⁵ draws: E|dM₁₁|² = dt/n = 0.5. |dM₁₁|² is
        // exponential with mean 0.5 → SE = 0.5/√10⁵.
        let s = stream();
        let reps = 100_000u64;
        let mut mean_sq = 0.0;
        let mut mean_hol = c(0.0, 0.0);
        for i in 0..reps {
            let dm = sample_increment(&s, 2, 1.0, 0, i, 0);
            mean_sq += dm[(0, 0)].norm_sqr();
            mean_hol += dm[(0, 0)] * dm[(0, 0)];
        }
        mean_sq /= reps as f64;
        mean_hol /= c(reps as f64, 0.0);
        let se_sq = 0.5 / (reps as f64).sqrt();
        assert!((mean_sq - 0.5).abs() < 3.0 * se_sq, "E|dM|² = {mean_sq}");
        // ⟨dM, dM⟩ = 0: the holomorphic second moment has E|dM²|² = 2·(dt/2n)²·2
        // = E|dM|⁴ = 2·0.25; SE of the complex mean = √(0.5/reps).
        let se_hol = (0.5 / reps as f64).sqrt();
        assert!(mean_hol.norm() < 3.0 * se_hol, "E[dM²] = {mean_hol}");
    }

    #[test]
    fn brownian_scaling_is_exact_on_a_fixed_stream() {
        // Same counters, different dt: entries scale by exactly √(dt ratio).
        let s = stream();
        let full = sample_increment(&s, 3, 1.0, 5, 7, 0);
        let quarter = sample_increment(&s, 3, 0.25, 5, 7, 0);
        let rescaled = full.scale(c(0.5, 0.0));
        assert!(quarter.sub(&rescaled).max_abs() < 1e-15);
    }

    #[test]
    fn zero_variance_step_is_identity() {
        let s = stream();
        let m = s.gaussian_matrix(3, 0, 0, 0, 1.0);
        let advanced = advance(&m, &s, 0.0, 0, 1, 0);
        assert_eq!(advanced.sub(&m).max_abs(), 0.0);
    }

    #[test]
    fn one_step_from_zero_is_ginibre_scaled() {
        // M(0) = O, one step of dt = t: E[(1/n)Tr MM†] = t. The trace sums
        // n² independent exponentials of mean t/n, so Var((1/n)Tr MM†) =
        // t²/n² per draw and SE = t/(n·√reps).
        let s = stream();
        let n = 4;
        let t = 1.0;
        let reps = 10_000u64;
        let mut acc = 0.0;
        for traj in 0..reps {
            let m = sample_increment(&s, n, t, traj, 0, 0);
            acc += m.frobenius().powi(2) / n as f64;
        }
        let mean = acc / reps as f64;
        let se = t / (n as f64 * (reps as f64).sqrt());
        assert!(
            (mean - t).abs() < 3.0 * se,
            "E[(1/n)TrMM†] = {mean}, want {t} ± {se}"
        );
    }

    #[test]
    fn two_half_steps_match_one_full_step_in_distribution() {
        let s = stream();
        let n = 3;
        let reps = 20_000u64;
        let (mut acc1, mut acc2) = (0.0, 0.0);
        for traj in 0..reps {
            let one = sample_increment(&s, n, 1.0, traj, 0, 0);
            let half_a = sample_increment(&s, n, 0.5, traj, 1, 0);
            let half_b = sample_increment(&s, n, 0.5, traj, 2, 0);
            acc1 += one.frobenius().powi(2);
            acc2 += half_a.add(&half_b).frobenius().powi(2);
        }
        let m1 = acc1 / reps as f64;
        let m2 = acc2 / reps as f64;
        // Each mean is Σ of n² exponentials with mean 1/n: Var = n²·(1/n²) = 1.
        let se = (2.0f64).sqrt() / (reps as f64).sqrt() * (n as f64).sqrt();
        assert!((m1 - m2).abs() < 3.0 * se, "m1 {m1} vs m2 {m2}");
    }

    #[test]
    fn scalar_trajectory_tracks_the_entry_path() {
        // n = 1: the eigenvalue path IS the matrix entry path, overlap ≡ 1.
        let cfg = ProcessConfig {
            store_matrices: true,
            ..ProcessConfig::new(1, 0.05, 0.01, ComplexMatrix::zeros(1), 7, 1).unwrap()
        };
        let rec = run_trajectory(&cfg, 0).unwrap();
        assert_eq!(rec.times.len(), 6);
        let mats = rec.matrices.as_ref().unwrap();
        for (frame, mat) in rec.frames.iter().zip(mats) {
            assert_eq!(frame.lambda[0], mat[(0, 0)]);
            assert!((frame.overlap[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn short_run_preserves_frame_invariants() {
        let m0 = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        let cfg = ProcessConfig::new(2, 0.1, 0.02, m0, 21, 1).unwrap();
        let rec = run_trajectory(&cfg, 0).unwrap();
        assert_eq!(rec.times.len(), 6, "t = 0 frame plus five steps");
        for f in &rec.frames {
            assert!(f.biortho_defect() < tol::BIORTHO * 2.0);
            assert!(f.row_sum_defect() < tol::ROW_SUM);
        }
        // Labels are continuous: per-step displacement is O(√dt).
        for pair in rec.frames.windows(2) {
            for j in 0..2 {
                let d = (pair[1].lambda[j] - pair[0].lambda[j]).norm();
                assert!(d < 10.0 * cfg.dt.sqrt() * 2.0, "jump {d}");
            }
        }
    }

    #[test]
    fn trajectories_are_deterministic() {
        let cfg = ProcessConfig::new(3, 0.06, 0.02, ComplexMatrix::zeros(3), 2024, 1).unwrap();
        let a = run_trajectory(&cfg, 4).unwrap();
        let b = run_trajectory(&cfg, 4).unwrap();
        assert_eq!(a.times, b.times);
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            assert_eq!(fa.lambda, fb.lambda);
            assert_eq!(fa.overlap, fb.overlap);
        }
        assert_eq!(a.permutation_log, b.permutation_log);
    }

    #[test]
    fn degenerate_start_begins_at_first_step() {
        // M(0) = O is maximally degenerate; frames start at t = dt.
        let cfg = ProcessConfig::new(2, 0.04, 0.02, ComplexMatrix::zeros(2), 5, 1).unwrap();
        let rec = run_trajectory(&cfg, 0).unwrap();
        assert_eq!(rec.times.first().copied(), Some(0.02));
        assert_eq!(rec.times.len(), 2);

        let strict = ProcessConfig {
            allow_degenerate_start: false,
            ..cfg
        };
        match run_trajectory(&strict, 0) {
            Err(Error::Trajectory {
                traj: 0,
                step: 0,
                source,
            }) => {
                assert!(matches!(*source, Error::DegenerateSpectrum { .. }));
            }
            other => panic!("expected trajectory-wrapped degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn ensemble_is_worker_count_independent() {
        let cfg = ProcessConfig::new(2, 0.04, 0.02, ComplexMatrix::zeros(2), 31, 6).unwrap();
        let parallel = run_ensemble(&cfg).unwrap();
        exec::force_sequential(true);
        let sequential = run_ensemble(&cfg);
        exec::force_sequential(false);
        let sequential = sequential.unwrap();
        assert_eq!(parallel.len(), sequential.len());
        for (p, s) in parallel.iter().zip(&sequential) {
            assert_eq!(p.traj, s.traj);
            for (fp, fs) in p.frames.iter().zip(&s.frames) {
                assert_eq!(fp.lambda, fs.lambda, "bitwise scheduling independence");
                assert_eq!(fp.overlap, fs.overlap);
            }
        }
    }

    #[test]
    fn config_validation_rejects_bad_grids() {
        assert!(ProcessConfig::new(2, 1.0, 0.0, ComplexMatrix::zeros(2), 1, 1).is_err());
        assert!(ProcessConfig::new(2, 0.05, 0.1, ComplexMatrix::zeros(2), 1, 1).is_err());
        assert!(ProcessConfig::new(2, 0.25, 0.1, ComplexMatrix::zeros(2), 1, 1).is_err());
        assert!(ProcessConfig::new(3, 1.0, 0.1, ComplexMatrix::zeros(2), 1, 1).is_err());
        assert!(ProcessConfig::new(2, 1.0, 0.1, ComplexMatrix::zeros(2), 1, 0).is_err());
    }

    #[test]
    fn stride_thins_records_but_keeps_final_frame() {
        let cfg = ProcessConfig {
            frame_stride: 3,
            ..ProcessConfig::new(2, 0.08, 0.01, ComplexMatrix::zeros(2), 77, 1).unwrap()
        };
        let rec = run_trajectory(&cfg, 0).unwrap();
        // Steps 3, 6 on the stride plus the forced final step 8.
        let expect: Vec<f64> = vec![0.03, 0.06, 0.08];
        assert_eq!(rec.times.len(), expect.len());
        for (a, b) in rec.times.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        // The permutation log still covers every step.
        assert_eq!(rec.permutation_log.len(), 8);
    }
}
