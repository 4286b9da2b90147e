//! Centralized numerical tolerances with their rationale.
//!
//! Every threshold used by the solvers and the validation suites lives here
//! so that no module carries ad-hoc magic numbers. Tolerances fall into three
//! families:
//!
//! * machine-precision budgets — what backward-stable dense linear algebra
//!   actually achieves in f64, with headroom for accumulation up to n = 64;
//! * contract tolerances — the advertised accuracy of public operations,
//!   looser than what the algorithms deliver so they hold on any reasonable
//!   hardware;
//! * statistical pass lines — z-score limits for Monte Carlo agreement.

/// Default minimum admissible eigenvalue gap. The spectrum of the matrix
/// Brownian motion is almost surely simple, so a gap below this signals
/// numerical trouble (a near-defective matrix), not physics.
pub const GAP_TOL: f64 = 1e-10;

/// Eigenpair residual contract: ‖M·v − λ·v‖₂ ≤ EIG_RESIDUAL · ‖M‖_F · n.
/// Shifted QR with back-substituted eigenvectors delivers ~n·ε·‖M‖; 1e−10
/// leaves four orders of headroom at n = 64.
pub const EIG_RESIDUAL: f64 = 1e-10;

/// QR sweep budget per matrix: BUDGET_SWEEPS_PER_N · n total sweeps.
/// Well-conditioned spectra converge in ~2 sweeps per eigenvalue; 40·n is
/// standard practice and gives a deterministic failure mode.
pub const BUDGET_SWEEPS_PER_N: usize = 40;

/// Linear-solve residual contract: ‖a·x − b‖_F ≤ SOLVE_RESIDUAL·‖a‖_F·‖b‖_F·n.
pub const SOLVE_RESIDUAL: f64 = 1e-12;

/// LU pivot threshold, relative to ‖a‖_F: below this the matrix is treated
/// as numerically singular.
pub const SINGULAR_PIVOT: f64 = 1e-14;

/// Hermiticity check budget, relative to ‖h‖_F, for inputs that are claimed
/// Hermitian (callers symmetrize before factorizing).
pub const HERMITICITY: f64 = 1e-12;

/// Bi-orthogonality: ‖S⁻¹S − I‖_max ≤ BIORTHO · n.
pub const BIORTHO: f64 = 1e-10;

/// Frame reconstruction: ‖M − S·diag(Λ)·S⁻¹‖_F ≤ RECONSTRUCT · ‖M‖_F · n.
pub const RECONSTRUCT: f64 = 1e-9;

/// Overlap-matrix Hermiticity, relative to the largest overlap entry.
pub const OVERLAP_HERMITIAN: f64 = 1e-12;

/// Lower bound slack for the diagonal overlaps: Re 𝒪_jj ≥ 1 − DIAG_OVERLAP.
pub const DIAG_OVERLAP: f64 = 1e-9;

/// Row-sum identity slack: |Σ_k 𝒪_jk − 1| ≤ ROW_SUM.
pub const ROW_SUM: f64 = 1e-8;

/// Gauge invariance of the overlap matrix under admissible scale
/// transformations.
pub const GAUGE_INVARIANCE: f64 = 1e-10;

/// Admissible modulus range for gauge factors. Outside this range the
/// rescaled frame loses digits to over/underflow, masking real failures.
pub const GAUGE_MODULUS_MIN: f64 = 1e-6;
pub const GAUGE_MODULUS_MAX: f64 = 1e6;

/// Ambiguity threshold for eigenvalue matching: if the best and second-best
/// assignments differ by less than this, the step straddles a near-collision.
pub const AMBIGUOUS_MATCH: f64 = 1e-12;

/// Minimum sample count for any statistical estimate.
pub const MIN_SAMPLES: usize = 100;

/// Monte Carlo pass line: |estimate − predicted| ≤ Z_PASS standard errors.
/// Sample sizes are chosen so real effects exceed 5 SE, separating "wrong
/// formula" from "too noisy".
pub const Z_PASS: f64 = 3.0;

/// Characteristic root: accepted residual |u − v̂₀(z, r+2tu)|.
/// The contract is 1e−10; the solver targets tighter so that a finite
/// difference of φ across a ~1e−2 grid step keeps nine digits.
pub const BURGERS_RESIDUAL: f64 = 1e-10;
pub const BURGERS_TARGET: f64 = 1e-13;

/// Shock guard: minimum allowed |1 − 2t·∂v̂₀/∂r| along continuation.
/// Interior points keep this derivative O(grid step/t); 1e−8 only fires on a
/// genuine fold (characteristics crossing).
pub const SHOCK_GUARD: f64 = 1e-8;

/// Continuation budget for the characteristic root solve.
pub const CONTINUATION_STEPS: usize = 32;

/// Half-width of the band around the two-source symmetry axis (z̄c + zc̄ = 0)
/// inside which the textbook closed-form density is a 0/0 expression; the
/// evaluator reports the symmetric-limit value there and flags the point.
pub const EXAMPLE2_AXIS: f64 = 1e-6;

/// Quadtree pairing quadrature: cells are split until their size is at most
/// max(|w|/REFINE_NEAR, distance/REFINE_FAR); depth cap raises GridTooCoarse.
/// /8 near atoms is stricter than the |w|/4 resolution precondition and keeps
/// the midpoint error well under the w→0 convergence signal.
pub const QUAD_REFINE_NEAR: f64 = 8.0;
pub const QUAD_REFINE_FAR: f64 = 8.0;
pub const QUAD_MAX_DEPTH: u32 = 24;

/// Machine epsilon for f64.
pub const EPS: f64 = f64::EPSILON;

/// A floor protecting relative deflation criteria from denormal noise.
pub const SMALL_FLOOR: f64 = f64::MIN_POSITIVE / f64::EPSILON;
