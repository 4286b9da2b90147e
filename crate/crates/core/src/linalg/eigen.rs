//! Dense non-symmetric complex eigensolver.
//!
//! Pipeline: Parlett–Reinsch balancing → Householder reduction to upper
//! Hessenberg form → explicitly shifted QR iteration with complex Givens
//! rotations (Wilkinson shifts, exceptional shifts on stall) → eigenvector
//! extraction by back-substitution on the triangular factor. Everything is
//! accumulated so that M = S·diag(λ)·S⁻¹ with S the returned eigenvector
//! columns.
//!
//! Eigenvalues are reported in lexicographic order (real part, then
//! imaginary part, ascending) and each eigenvector is normalized to unit
//! Euclidean length with its largest-modulus component rotated to the
//! positive real axis — ties broken by lowest index — so the decomposition
//! is a deterministic function of the input matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::matrix::{matvec, vec_norm, ComplexMatrix};
use crate::tol;

/// Eigendecomposition of a square complex matrix.
pub struct EigenDecomposition {
    /// Eigenvalues in lexicographic order.
    pub lambda: Vec<Complex64>,
    /// Right eigenvectors as columns, aligned with `lambda`.
    pub s: ComplexMatrix,
    /// Smallest pairwise eigenvalue distance (0 for n = 1 is impossible;
    /// f64::INFINITY is returned for n = 1).
    pub min_gap: f64,
}

/// Seam for swapping the eigensolver: everything downstream consumes this
/// trait, so an alternative backend only has to produce the same
/// deterministic ordering contract.
pub trait SpectralBackend: Send + Sync {
    /// Full decomposition with eigenvectors.
    fn eigendecompose(&self, m: &ComplexMatrix) -> Result<EigenDecomposition>;

    /// Eigenvalues only, lexicographically ordered. Backends may override
    /// with a cheaper path that skips eigenvector accumulation.
    fn eigenvalues(&self, m: &ComplexMatrix) -> Result<Vec<Complex64>> {
        Ok(self.eigendecompose(m)?.lambda)
    }
}

/// The built-in shifted-QR backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct ShiftedQrBackend;

impl SpectralBackend for ShiftedQrBackend {
    fn eigendecompose(&self, m: &ComplexMatrix) -> Result<EigenDecomposition> {
        decompose_impl(m, true).map(|d| d.expect_full())
    }

    fn eigenvalues(&self, m: &ComplexMatrix) -> Result<Vec<Complex64>> {
        Ok(decompose_impl(m, false)?.lambda)
    }
}

/// Full decomposition with the default backend.
pub fn eigendecompose(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    ShiftedQrBackend.eigendecompose(m)
}

/// Eigenvalues only with the default backend (no eigenvector accumulation;
/// used for the Hermitian kernels where only the spectrum is needed).
pub fn eigenvalues_only(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    ShiftedQrBackend.eigenvalues(m)
}

/// Largest per-eigenpair residual ‖M·s_j − λ_j·s_j‖₂ (columns of S are unit
/// vectors, so this is already relative to the eigenvector scale).
pub fn eigen_residual(m: &ComplexMatrix, d: &EigenDecomposition) -> f64 {
    let n = m.n();
    let mut worst = 0.0f64;
    for j in 0..n {
        let col = d.s.column(j);
        let mx = matvec(m, &col);
        let resid: f64 = (0..n)
            .map(|i| (mx[i] - d.lambda[j] * col[i]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(resid);
    }
    worst
}

// ───────────────────────── internal pipeline ─────────────────────────

struct RawDecomposition {
    lambda: Vec<Complex64>,
    s: Option<ComplexMatrix>,
    min_gap: f64,
}

impl RawDecomposition {
    fn expect_full(self) -> EigenDecomposition {
        EigenDecomposition {
            lambda: self.lambda,
            s: self.s.expect("eigenvectors were requested"),
            min_gap: self.min_gap,
        }
    }
}

#[inline]
fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn decompose_impl(m: &ComplexMatrix, want_vectors: bool) -> Result<RawDecomposition> {
    if !m.is_finite() {
        return Err(Error::MatrixFormat(
            "eigendecomposition input has non-finite entries".into(),
        ));
    }
    let n = m.n();
    if n == 1 {
        return Ok(RawDecomposition {
            lambda: vec![m[(0, 0)]],
            s: want_vectors.then(|| ComplexMatrix::identity(1)),
            min_gap: f64::INFINITY,
        });
    }

    let mut h = m.clone();
    let scale = balance(&mut h);
    let mut z = want_vectors.then(|| ComplexMatrix::identity(n));
    hessenberg(&mut h, z.as_mut());
    qr_triangularize(&mut h, z.as_mut())?;

    // Diagonal of the triangular factor = eigenvalues (unsorted).
    let raw_lambda: Vec<Complex64> = (0..n).map(|i| h[(i, i)]).collect();

    // Lexicographic order: real ascending, then imaginary ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        raw_lambda[a]
            .re
            .total_cmp(&raw_lambda[b].re)
            .then(raw_lambda[a].im.total_cmp(&raw_lambda[b].im))
    });
    let lambda: Vec<Complex64> = order.iter().map(|&i| raw_lambda[i]).collect();

    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            min_gap = min_gap.min((lambda[i] - lambda[j]).norm());
        }
    }

    let s = if let Some(z) = z {
        let vecs = triangular_eigenvectors(&h, &z);
        let mut s = ComplexMatrix::zeros(n);
        for (out_col, &src_col) in order.iter().enumerate() {
            let mut x = vecs.column(src_col);
            // Undo balancing (the balanced matrix is D⁻¹·M·D, so eigenvectors
            // of M are D·x) and renormalize deterministically.
            for (xi, &di) in x.iter_mut().zip(&scale) {
                *xi *= di;
            }
            normalize_vector(&mut x);
            for i in 0..n {
                s[(i, out_col)] = x[i];
            }
        }
        Some(s)
    } else {
        None
    };

    Ok(RawDecomposition { lambda, s, min_gap })
}

/// Parlett–Reinsch balancing: diagonal similarity with powers of 2 that
/// roughly equalizes row and column norms. Returns the diagonal scale d with
/// balanced = D⁻¹·A·D (exact in floating point because the factors are
/// powers of the radix).
fn balance(a: &mut ComplexMatrix) -> Vec<f64> {
    let n = a.n();
    let radix = 2.0f64;
    let mut d = vec![1.0f64; n];
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[(j, i)]);
                    r += abs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = c + r;
            while c < r / radix {
                c *= radix;
                r /= radix;
                f *= radix;
            }
            while c >= r * radix {
                c /= radix;
                r *= radix;
                f /= radix;
            }
            if c + r < 0.95 * s {
                converged = false;
                d[i] *= f;
                // Row i shrinks by f, column i grows by f: D⁻¹·A·D.
                let inv = 1.0 / f;
                for j in 0..n {
                    let v = a[(i, j)] * inv;
                    a[(i, j)] = v;
                }
                for j in 0..n {
                    let v = a[(j, i)] * f;
                    a[(j, i)] = v;
                }
            }
        }
        if converged {
            return d;
        }
    }
}

/// Elementary reflector H = I − τ·u·u† with u = (1, v)ᵀ such that
/// H†·(α, x)ᵀ = (β, 0)ᵀ with β real. Returns (τ, β) and overwrites x with v.
fn make_reflector(alpha: Complex64, x: &mut [Complex64]) -> (Complex64, f64) {
    let xnorm = vec_norm(x);
    if xnorm == 0.0 && alpha.im == 0.0 {
        return (ZERO, alpha.re);
    }
    let beta = -(alpha.re.hypot(alpha.im).hypot(xnorm)).copysign(alpha.re);
    let tau = Complex64::new((beta - alpha.re) / beta, -alpha.im / beta);
    let inv = (alpha - Complex64::new(beta, 0.0)).inv();
    for xi in x.iter_mut() {
        *xi *= inv;
    }
    (tau, beta)
}

/// Householder reduction to upper Hessenberg form, H = Q†·A·Q, accumulating
/// Q into `z` when present.
fn hessenberg(a: &mut ComplexMatrix, mut z: Option<&mut ComplexMatrix>) {
    let n = a.n();
    for k in 0..n.saturating_sub(2) {
        // Reflector annihilating column k below the first subdiagonal.
        let alpha = a[(k + 1, k)];
        let mut v: Vec<Complex64> = (k + 2..n).map(|i| a[(i, k)]).collect();
        let (tau, beta) = make_reflector(alpha, &mut v);
        if tau == ZERO {
            continue;
        }
        // u = (1, v)ᵀ supported on rows k+1..n.
        a[(k + 1, k)] = Complex64::new(beta, 0.0);
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
        let u: Vec<Complex64> = std::iter::once(ONE).chain(v.iter().copied()).collect();

        // Left: A ← H†·A = A − conj(τ)·u·(u†·A), columns k+1..n.
        for j in k + 1..n {
            let mut dot = ZERO;
            for (r, ur) in u.iter().enumerate() {
                dot += ur.conj() * a[(k + 1 + r, j)];
            }
            let f = tau.conj() * dot;
            for (r, ur) in u.iter().enumerate() {
                let v = a[(k + 1 + r, j)] - f * ur;
                a[(k + 1 + r, j)] = v;
            }
        }
        // Right: A ← A·H = A − τ·(A·u)·u†, all rows.
        for i in 0..n {
            let mut dot = ZERO;
            for (r, ur) in u.iter().enumerate() {
                dot += a[(i, k + 1 + r)] * ur;
            }
            let f = tau * dot;
            for (r, ur) in u.iter().enumerate() {
                let v = a[(i, k + 1 + r)] - f * ur.conj();
                a[(i, k + 1 + r)] = v;
            }
        }
        // Accumulate Z ← Z·H.
        if let Some(z) = z.as_deref_mut() {
            for i in 0..n {
                let mut dot = ZERO;
                for (r, ur) in u.iter().enumerate() {
                    dot += z[(i, k + 1 + r)] * ur;
                }
                let f = tau * dot;
                for (r, ur) in u.iter().enumerate() {
                    let v = z[(i, k + 1 + r)] - f * ur.conj();
                    z[(i, k + 1 + r)] = v;
                }
            }
        }
    }
}

/// Complex Givens rotation G = [[c, s], [−s̄, c]] with real c ≥ 0 and
/// |c|² + |s|² = 1 such that G·(x, y)ᵀ = (r, 0)ᵀ.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64, Complex64) {
    if x == ZERO {
        return (0.0, ONE, y);
    }
    let ax = x.norm();
    let d = ax.hypot(y.norm());
    let c = ax / d;
    let phase = x / ax;
    let s = phase * y.conj() / d;
    let r = phase * d;
    (c, s, r)
}

/// Explicitly shifted QR iteration on an upper Hessenberg matrix. On return
/// `h` is upper triangular (eigenvalues on the diagonal) and `z` has the
/// accumulated rotations so that the input satisfies A = Z·T·Z†.
fn qr_triangularize(h: &mut ComplexMatrix, mut z: Option<&mut ComplexMatrix>) -> Result<()> {
    let n = h.n();
    let budget = tol::BUDGET_SWEEPS_PER_N * n;
    let hnorm = h.frobenius().max(f64::MIN_POSITIVE);
    let mut sweeps = 0usize;
    let mut stalls = 0usize;
    let mut hi = n - 1;

    loop {
        // Deflation scan: find the start of the active window ending at hi.
        let mut lo = hi;
        while lo > 0 {
            let mut s = abs1(h[(lo - 1, lo - 1)]) + abs1(h[(lo, lo)]);
            if s == 0.0 {
                s = hnorm;
            }
            let thresh = (tol::EPS * s).max(tol::SMALL_FLOOR);
            if abs1(h[(lo, lo - 1)]) <= thresh {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            // One eigenvalue converged at position hi.
            if hi == 0 {
                return Ok(());
            }
            hi -= 1;
            stalls = 0;
            continue;
        }

        if sweeps >= budget {
            return Err(Error::NoConvergence { budget, n });
        }
        sweeps += 1;
        stalls += 1;

        // Shift selection: Wilkinson from the trailing 2×2, with an
        // exceptional perturbation every tenth stalled sweep to break cycles.
        let mu = if stalls % 10 == 0 {
            h[(hi, hi)] + Complex64::new(0.75 * abs1(h[(hi, hi - 1)]), 0.0)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let mid = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b * c).sqrt();
            let m1 = mid + disc;
            let m2 = mid - disc;
            if (m1 - d).norm() <= (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };

        // Explicit single-shift sweep. The rotations act only on window
        // rows/columns, so subtracting μ on the window diagonal and adding
        // it back afterwards is an exact similarity transform of H.
        for i in lo..=hi {
            let v = h[(i, i)] - mu;
            h[(i, i)] = v;
        }
        let mut rot: Vec<(f64, Complex64)> = Vec::with_capacity(hi - lo);
        // Left factor: R = G_{hi−1}···G_lo·(H − μ), rows (i, i+1) over
        // columns i..n (window rows couple to everything on their right).
        for i in lo..hi {
            let (c, s, r) = givens(h[(i, i)], h[(i + 1, i)]);
            h[(i, i)] = r;
            h[(i + 1, i)] = ZERO;
            for j in (i + 1)..n {
                let x = h[(i, j)];
                let y = h[(i + 1, j)];
                h[(i, j)] = Complex64::new(c, 0.0) * x + s * y;
                h[(i + 1, j)] = -s.conj() * x + Complex64::new(c, 0.0) * y;
            }
            rot.push((c, s));
        }
        // Right factor: H ← R·G_lo†···G_{hi−1}†, columns (i, i+1) over all
        // rows with fill (0..=i+1), restoring Hessenberg form.
        for (idx, &(c, s)) in rot.iter().enumerate() {
            let i = lo + idx;
            for r in 0..=(i + 1) {
                let x = h[(r, i)];
                let y = h[(r, i + 1)];
                h[(r, i)] = Complex64::new(c, 0.0) * x + s.conj() * y;
                h[(r, i + 1)] = -s * x + Complex64::new(c, 0.0) * y;
            }
            if let Some(z) = z.as_deref_mut() {
                for r in 0..n {
                    let x = z[(r, i)];
                    let y = z[(r, i + 1)];
                    z[(r, i)] = Complex64::new(c, 0.0) * x + s.conj() * y;
                    z[(r, i + 1)] = -s * x + Complex64::new(c, 0.0) * y;
                }
            }
        }
        for i in lo..=hi {
            let v = h[(i, i)] + mu;
            h[(i, i)] = v;
        }
    }
}

/// Right eigenvectors of the triangular factor by back-substitution,
/// mapped back through the accumulated transform: column k of the result is
/// Z·y_k where (T − λ_k)·y_k = 0, y_k[k] = 1.
fn triangular_eigenvectors(t: &ComplexMatrix, z: &ComplexMatrix) -> ComplexMatrix {
    let n = t.n();
    let tnorm = t.max_abs().max(f64::MIN_POSITIVE);
    let guard = (tol::EPS * tnorm).max(tol::SMALL_FLOOR);
    let mut out = ComplexMatrix::zeros(n);
    let mut y = vec![ZERO; n];
    for k in 0..n {
        let lambda = t[(k, k)];
        for v in y.iter_mut() {
            *v = ZERO;
        }
        y[k] = ONE;
        for j in (0..k).rev() {
            let mut rhs = ZERO;
            for m in (j + 1)..=k {
                rhs += t[(j, m)] * y[m];
            }
            let mut den = t[(j, j)] - lambda;
            if abs1(den) < guard {
                // Perturb the denominator for (numerically) repeated
                // eigenvalues; downstream consumers reject such spectra via
                // the pairwise-gap check, so only boundedness matters here.
                den = Complex64::new(guard, 0.0);
            }
            y[j] = -rhs / den;
            // Growth clamp: keeps pathological near-defective cascades
            // finite; normalization later absorbs the overall scale.
            if abs1(y[j]) > 1e250 {
                for v in y.iter_mut().take(k + 1) {
                    *v *= 1e-250;
                }
            }
        }
        let x = matvec(z, &y);
        for i in 0..n {
            out[(i, k)] = x[i];
        }
    }
    out
}

/// Scale to unit Euclidean norm, then rotate the phase so the
/// largest-modulus component (lowest index on ties) is real and positive.
fn normalize_vector(x: &mut [Complex64]) {
    let norm = vec_norm(x);
    if norm > 0.0 {
        let inv = 1.0 / norm;
        for v in x.iter_mut() {
            *v *= inv;
        }
    }
    let mut best = 0usize;
    let mut best_mag = 0.0f64;
    for (i, v) in x.iter().enumerate() {
        let mag = v.norm();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    if best_mag > 0.0 {
        let phase = x[best] / best_mag;
        let rot = phase.conj();
        for v in x.iter_mut() {
            *v *= rot;
        }
        // Pin the pivot component exactly real for bitwise determinism.
        x[best] = Complex64::new(x[best].re, 0.0);
    }
}
