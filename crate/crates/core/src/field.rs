//! The regularized log-determinant field and its induced densities.
//!
//! For an n×n matrix m, a spectral probe z and a regularizer w, the field is
//! built from the Hermitian positive-definite matrix
//!
//! ```text
//! ĥ(z, w) = (m − z)†(m − z) + |w|² I,
//! Ψ(z, w) = log det ĥ / (2n),      Δ(z, w) = det ĥ^{1/2} = exp(n Ψ).
//! ```
//!
//! Closed-form w- and matrix-derivatives of Ψ come from trace identities on
//! ĥ⁻¹; the eigenvalue density is the distributional z-Laplacian of Ψ and the
//! diagonal-overlap density is (4/π)|∂Ψ/∂w|². As |w| → 0 the densities
//! collapse onto the spectrum, which `pairing_limit_w0` verifies by adaptive
//! quadrature against the exact atomic measures.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::frame::build_frame;
use crate::linalg::{cholesky, lu_factor, CholFactor, ComplexMatrix};
use crate::quad::{integrate_peaked, QuadBox};
use crate::tol;

/// Finite-difference step for the z-Laplacian of Ψ.
fn z_step(w: Complex64) -> f64 {
    (w.norm() / 100.0).max(1e-5)
}

/// The regularized Gram matrix ĥ = (m − z)†(m − z) + |w|² I. Exactly
/// Hermitian by construction (the Gram product fills the upper triangle from
/// the lower and pins the diagonal real).
pub fn hhat(z: Complex64, w: Complex64, m: &ComplexMatrix) -> ComplexMatrix {
    let b = m.sub_scalar_identity(z);
    let mut h = b.gram();
    h.add_scalar_identity(Complex64::new(w.norm_sqr(), 0.0));
    h
}

/// Cholesky factor of ĥ; fails with `NotPositiveDefinite` when w = 0 puts z
/// exactly on the spectrum (or severe rounding destroys definiteness).
fn hhat_chol(z: Complex64, w: Complex64, m: &ComplexMatrix) -> Result<CholFactor> {
    cholesky(&hhat(z, w, m))
}

/// Ψ(z, w) = log det ĥ / (2n).
pub fn psi(z: Complex64, w: Complex64, m: &ComplexMatrix) -> Result<f64> {
    let n = m.n() as f64;
    Ok(hhat_chol(z, w, m)?.logdet() / (2.0 * n))
}

/// Δ(z, w) = det ĥ^{1/2} = exp(n Ψ).
pub fn fk_det(z: Complex64, w: Complex64, m: &ComplexMatrix) -> Result<f64> {
    Ok((0.5 * hhat_chol(z, w, m)?.logdet()).exp())
}

/// ∂Ψ/∂w = (w̄ / 2n) Tr ĥ⁻¹.
pub fn dpsi_dw(z: Complex64, w: Complex64, m: &ComplexMatrix) -> Result<Complex64> {
    let n = m.n() as f64;
    let tr = hhat_chol(z, w, m)?.trace_inverse();
    Ok(w.conj() * (tr / (2.0 * n)))
}

/// ∇²_w Ψ = (2/n)(Tr ĥ⁻¹ − |w|² Tr ĥ⁻²).
pub fn lap_w_psi(z: Complex64, w: Complex64, m: &ComplexMatrix) -> Result<f64> {
    let n = m.n() as f64;
    let chol = hhat_chol(z, w, m)?;
    Ok((2.0 / n) * (chol.trace_inverse() - w.norm_sqr() * chol.trace_inverse_sq()))
}

/// Matrix gradients of Ψ: the pair (∂Ψ/∂m, ∂Ψ/∂m̄) with entries
///
/// ```text
/// (∂Ψ/∂m)_jk  = (1/2n) [ĥ⁻¹ (m − z)†]_kj,
/// (∂Ψ/∂m̄)_jk = (1/2n) [(m − z) ĥ⁻¹]_jk = conj((∂Ψ/∂m)_jk).
/// ```
pub fn dpsi_dm(
    z: Complex64,
    w: Complex64,
    m: &ComplexMatrix,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = m.n() as f64;
    let chol = hhat_chol(z, w, m)?;
    let b = m.sub_scalar_identity(z);
    // B = ĥ⁻¹ (m − z)†; then (m − z) ĥ⁻¹ = B† since ĥ⁻¹ is Hermitian.
    let big_b = chol.solve(&b.adjoint());
    let grad_mbar = big_b.adjoint().scale(Complex64::new(1.0 / (2.0 * n), 0.0));
    let grad_m = grad_mbar.conj();
    Ok((grad_m, grad_mbar))
}

/// Both sides of the closure identity for the w-drift of Ψ:
/// lhs = (|w|²/2n)(Tr ĥ⁻¹)², rhs = 2n |∂Ψ/∂w|². Equal as exact algebra;
/// evaluated through two code paths as a consistency probe.
pub fn meq7_check(z: Complex64, w: Complex64, m: &ComplexMatrix) -> Result<(f64, f64)> {
    let n = m.n() as f64;
    let tr = hhat_chol(z, w, m)?.trace_inverse();
    let lhs = w.norm_sqr() / (2.0 * n) * tr * tr;
    let rhs = 2.0 * n * dpsi_dw(z, w, m)?.norm_sqr();
    Ok((lhs, rhs))
}

/// Martingale part of dΨ under a matrix increment dm:
///
/// ```text
/// dM^Ψ = (1/2n) { Tr[ĥ⁻¹ (m − z)† dm] + Tr[(m − z) ĥ⁻¹ dm†] }
///       = Re Tr[ĥ⁻¹ (m − z)† dm] / n,
/// ```
///
/// real because the second trace is the conjugate of the first.
pub fn psi_martingale_increment(
    z: Complex64,
    w: Complex64,
    m: &ComplexMatrix,
    dm: &ComplexMatrix,
) -> Result<f64> {
    let n = m.n();
    let chol = hhat_chol(z, w, m)?;
    let b = m.sub_scalar_identity(z);
    let big_b = chol.solve(&b.adjoint());
    let mut tr = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            tr += big_b[(j, k)] * dm[(k, j)];
        }
    }
    Ok(tr.re / n as f64)
}

/// Martingale part of dΔ: the chain rule on Δ = exp(n Ψ) gives
/// dM^Δ = n Δ dM^Ψ.
pub fn fk_martingale_increment(
    z: Complex64,
    w: Complex64,
    m: &ComplexMatrix,
    dm: &ComplexMatrix,
) -> Result<f64> {
    let n = m.n() as f64;
    Ok(n * fk_det(z, w, m)? * psi_martingale_increment(z, w, m, dm)?)
}

/// Densities induced by the field at regularization w:
/// mu_lambda = (1/2π) ∇²_z Ψ by five-point finite difference (step
/// max(1e-5, |w|/100)), and mu_overlap = (4/π)|∂Ψ/∂w|² in closed form.
pub fn mu_densities(z: Complex64, w: Complex64, m: &ComplexMatrix) -> Result<(f64, f64)> {
    let mu_l = mu_lambda_fd(z, w, m)?;
    let mu_o = 4.0 / std::f64::consts::PI * dpsi_dw(z, w, m)?.norm_sqr();
    Ok((mu_l, mu_o))
}

fn mu_lambda_fd(z: Complex64, w: Complex64, m: &ComplexMatrix) -> Result<f64> {
    let h = z_step(w);
    let center = psi(z, w, m)?;
    let east = psi(z + Complex64::new(h, 0.0), w, m)?;
    let west = psi(z - Complex64::new(h, 0.0), w, m)?;
    let north = psi(z + Complex64::new(0.0, h), w, m)?;
    let south = psi(z - Complex64::new(0.0, h), w, m)?;
    let lap = (east + west + north + south - 4.0 * center) / (h * h);
    Ok(lap / (2.0 * std::f64::consts::PI))
}

/// Drift and quadratic-variation coefficients of the closed SPDEs for Ψ and Δ
/// at fixed (z, w).
#[derive(Debug, Clone, Copy)]
pub struct SpdeCoefficients {
    /// Drift of Ψ: 2 |∂Ψ/∂w|².
    pub psi_drift: f64,
    /// Quadratic-variation rate of Ψ: ∇²_w Ψ / (4n²).
    pub psi_qv: f64,
    /// Drift of Δ: (1/2n)(∂²Δ/∂w∂w̄ + 3|∂Δ/∂w|²/Δ), via the chain rule on
    /// Δ = exp(n Ψ).
    pub fk_drift: f64,
}

/// Evaluate the SPDE coefficients from the closed-form Ψ-derivatives.
pub fn spde_coefficients(
    z: Complex64,
    w: Complex64,
    m: &ComplexMatrix,
) -> Result<SpdeCoefficients> {
    let n = m.n() as f64;
    let chol = hhat_chol(z, w, m)?;
    let tr = chol.trace_inverse();
    let tr_sq = chol.trace_inverse_sq();
    let psi_w = w.conj() * (tr / (2.0 * n));
    let lap = (2.0 / n) * (tr - w.norm_sqr() * tr_sq);
    let delta = (0.5 * chol.logdet()).exp();

    // Chain rule: ∂Δ/∂w = nΔ ∂Ψ/∂w and
    // ∂²Δ/∂w∂w̄ = n²Δ|∂Ψ/∂w|² + nΔ ∇²_wΨ/4.
    let ddelta_dw_sq = n * n * delta * delta * psi_w.norm_sqr();
    let d2delta = n * n * delta * psi_w.norm_sqr() + n * delta * lap / 4.0;

    Ok(SpdeCoefficients {
        psi_drift: 2.0 * psi_w.norm_sqr(),
        psi_qv: lap / (4.0 * n * n),
        fk_drift: (d2delta + 3.0 * ddelta_dw_sq / delta) / (2.0 * n),
    })
}

/// One fully evaluated field point.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub z: Complex64,
    pub w: Complex64,
    pub psi: f64,
    pub fk_det: f64,
    pub dpsi_dw: Complex64,
    pub lap_w_psi: f64,
    pub mu_lambda: f64,
    pub mu_overlap: f64,
}

impl FieldSample {
    /// Evaluate every field quantity at (z, w). One factorization serves the
    /// closed forms; four more supply the finite-difference z-Laplacian.
    pub fn evaluate(z: Complex64, w: Complex64, m: &ComplexMatrix) -> Result<FieldSample> {
        let n = m.n() as f64;
        let chol = hhat_chol(z, w, m)?;
        let logdet = chol.logdet();
        let tr = chol.trace_inverse();
        let tr_sq = chol.trace_inverse_sq();
        let psi_val = logdet / (2.0 * n);
        let psi_w = w.conj() * (tr / (2.0 * n));
        Ok(FieldSample {
            z,
            w,
            psi: psi_val,
            fk_det: (0.5 * logdet).exp(),
            dpsi_dw: psi_w,
            lap_w_psi: (2.0 / n) * (tr - w.norm_sqr() * tr_sq),
            mu_lambda: mu_lambda_fd(z, w, m)?,
            mu_overlap: 4.0 / std::f64::consts::PI * psi_w.norm_sqr(),
        })
    }
}

/// Rectangular z-grid and decreasing |w| sequence for a field sweep.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
    /// Regularization moduli, strictly decreasing, all positive.
    pub w_sequence: Vec<f64>,
}

impl FieldGrid {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config("field grid needs nx, ny >= 1".into()));
        }
        if !(self.x0.is_finite()
            && self.x1.is_finite()
            && self.y0.is_finite()
            && self.y1.is_finite())
            || self.x1 < self.x0
            || self.y1 < self.y0
        {
            return Err(Error::Config(
                "field grid bounds must be finite with x1 >= x0, y1 >= y0".into(),
            ));
        }
        if self.w_sequence.is_empty() {
            return Err(Error::Config(
                "field grid needs a nonempty w sequence".into(),
            ));
        }
        for pair in self.w_sequence.windows(2) {
            if pair[1] >= pair[0] {
                return Err(Error::Config(
                    "w sequence must be strictly decreasing".into(),
                ));
            }
        }
        if self.w_sequence.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::Config("w values must be positive and finite".into()));
        }
        Ok(())
    }

    /// Grid nodes in row-major order (y outer, x inner). A single point along
    /// an axis sits at that axis's lower bound.
    pub fn nodes(&self) -> Vec<Complex64> {
        let xs = linspace(self.x0, self.x1, self.nx);
        let ys = linspace(self.y0, self.y1, self.ny);
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for y in &ys {
            for x in &xs {
                out.push(Complex64::new(*x, *y));
            }
        }
        out
    }
}

fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    let step = (b - a) / (count - 1) as f64;
    (0..count).map(|i| a + step * i as f64).collect()
}

/// Evaluate the field on every (w, z) pair of the grid, w outer, nodes in
/// grid order. Parallel over points; output order is deterministic.
pub fn field_sweep(m: &ComplexMatrix, grid: &FieldGrid) -> Result<Vec<FieldSample>> {
    grid.validate()?;
    let nodes = grid.nodes();
    let total = grid.w_sequence.len() * nodes.len();
    let results = exec::map_indexed(total, |idx| {
        let w = Complex64::new(grid.w_sequence[idx / nodes.len()], 0.0);
        let z = nodes[idx % nodes.len()];
        FieldSample::evaluate(z, w, m)
    });
    results.into_iter().collect()
}

/// Pairings of the regularized densities against a test function along a
/// decreasing w sequence, together with the exact atomic pairings they must
/// approach.
#[derive(Debug, Clone)]
pub struct PairingSweep {
    pub w_values: Vec<f64>,
    /// ⟨mu_lambda(·, w), phi⟩ per w.
    pub lambda_pairings: Vec<f64>,
    /// ⟨mu_overlap(·, w), phi⟩ per w.
    pub overlap_pairings: Vec<f64>,
    /// Pairing at the smallest w: the reported limit.
    pub lambda_limit: f64,
    pub overlap_limit: f64,
    /// Exact pairings of the atomic eigenvalue and overlap measures.
    pub exact_lambda: f64,
    pub exact_overlap: f64,
}

/// Integrate both densities against `phi` for each w in the (strictly
/// decreasing) sequence and report the smallest-w pairing as the limit value,
/// alongside the exact atomic pairings computed from the spectral frame.
pub fn pairing_limit_w0(
    m: &ComplexMatrix,
    phi: &dyn Fn(Complex64) -> f64,
    w_sequence: &[f64],
) -> Result<PairingSweep> {
    if w_sequence.is_empty() {
        return Err(Error::Config(
            "pairing limit needs a nonempty w sequence".into(),
        ));
    }
    for pair in w_sequence.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::Config(
                "w sequence must be strictly decreasing".into(),
            ));
        }
    }
    if w_sequence.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::Config("w values must be positive and finite".into()));
    }

    let frame = build_frame(m, 0.0, crate::tol::GAP_TOL)?;
    let n = m.n();
    let atoms: Vec<Complex64> = frame.lambda.clone();
    let mut exact_lambda = 0.0;
    let mut exact_overlap = 0.0;
    for j in 0..n {
        exact_lambda += phi(frame.lambda[j]) / n as f64;
        exact_overlap += frame.overlap[(j, j)].re * phi(frame.lambda[j]) / (n * n) as f64;
    }

    let bounds = QuadBox::covering(&atoms, 6.0);
    let mut lambda_pairings = Vec::with_capacity(w_sequence.len());
    let mut overlap_pairings = Vec::with_capacity(w_sequence.len());
    for &wr in w_sequence {
        let w = Complex64::new(wr, 0.0);
        let mut f_lambda = |z: Complex64| -> f64 {
            // ĥ is positive definite for w > 0, so the unwrap cannot fire.
            mu_lambda_fd(z, w, m).expect("hhat positive definite for w > 0") * phi(z)
        };
        lambda_pairings.push(integrate_peaked(&mut f_lambda, &atoms, wr, bounds)?);
        let mut f_overlap = |z: Complex64| -> f64 {
            let psi_w = dpsi_dw(z, w, m).expect("hhat positive definite for w > 0");
            4.0 / std::f64::consts::PI * psi_w.norm_sqr() * phi(z)
        };
        overlap_pairings.push(integrate_peaked(&mut f_overlap, &atoms, wr, bounds)?);
    }

    Ok(PairingSweep {
        w_values: w_sequence.to_vec(),
        lambda_limit: *lambda_pairings.last().unwrap(),
        overlap_limit: *overlap_pairings.last().unwrap(),
        lambda_pairings,
        overlap_pairings,
        exact_lambda,
        exact_overlap,
    })
}

/// |det m| through the LU factorization (used by determinant property tests
/// and by callers that need the unregularized w → 0 value exactly).
pub fn abs_det(m: &ComplexMatrix) -> Result<f64> {
    Ok(lu_factor(m)?.det().norm())
}

/// Relative defects of the closed derivative formulas against central
/// finite differences at one (z, w, m) point, plus the residual of the
/// drift closure identity (which holds as exact algebra, not merely up to
/// discretization).
#[derive(Debug, Clone, Copy)]
pub struct DerivativeDefects {
    /// ∂Ψ/∂w closed form vs Wirtinger finite difference, relative.
    pub dpsi_dw_rel: f64,
    /// ∇²_w Ψ closed form vs five-point finite difference, relative.
    pub lap_w_rel: f64,
    /// Directional m-derivative from ∂Ψ/∂m vs finite difference, relative.
    pub dpsi_dm_rel: f64,
    /// |lhs − rhs| / max(1, |lhs|) of the closure identity.
    pub meq7_rel: f64,
}

impl DerivativeDefects {
    /// Largest of the three finite-difference defects.
    pub fn max_fd(&self) -> f64 {
        self.dpsi_dw_rel.max(self.lap_w_rel).max(self.dpsi_dm_rel)
    }
}

/// Check every closed derivative at (z, w, m) against central finite
/// differences; `direction` seeds the directional probe of ∂Ψ/∂m (it is
/// normalized internally and must be nonzero).
pub fn derivative_defects(
    z: Complex64,
    w: Complex64,
    m: &ComplexMatrix,
    direction: &ComplexMatrix,
) -> Result<DerivativeDefects> {
    let scale = w.norm().max(1.0);

    // ∂Ψ/∂w: Wirtinger derivative (∂_x − i ∂_y)/2 of the real field Ψ.
    let hw = 1e-5 * scale;
    let fx = (psi(z, w + Complex64::new(hw, 0.0), m)? - psi(z, w - Complex64::new(hw, 0.0), m)?)
        / (2.0 * hw);
    let fy = (psi(z, w + Complex64::new(0.0, hw), m)? - psi(z, w - Complex64::new(0.0, hw), m)?)
        / (2.0 * hw);
    let fd_w = Complex64::new(fx, -fy) / 2.0;
    let closed_w = dpsi_dw(z, w, m)?;
    let dpsi_dw_rel = (fd_w - closed_w).norm() / closed_w.norm().max(tol::SMALL_FLOOR);

    // ∇²_w Ψ: five-point stencil in the w-plane.
    let hl = 1e-4 * scale;
    let lap_fd = (psi(z, w + Complex64::new(hl, 0.0), m)?
        + psi(z, w - Complex64::new(hl, 0.0), m)?
        + psi(z, w + Complex64::new(0.0, hl), m)?
        + psi(z, w - Complex64::new(0.0, hl), m)?
        - 4.0 * psi(z, w, m)?)
        / (hl * hl);
    let lap_closed = lap_w_psi(z, w, m)?;
    let lap_w_rel = (lap_fd - lap_closed).abs() / lap_closed.abs().max(tol::SMALL_FLOOR);

    // ∂Ψ/∂m along a fixed direction V: d/ds Ψ(m + sV) = 2 Re Σ (∂Ψ/∂m)·V.
    let nrm = direction.frobenius();
    if nrm == 0.0 {
        return Err(Error::Config(
            "derivative probe direction must be nonzero".into(),
        ));
    }
    let v = direction.scale(Complex64::new(1.0 / nrm, 0.0));
    let hm = 1e-5;
    let plus = m.add(&v.scale(Complex64::new(hm, 0.0)));
    let minus = m.sub(&v.scale(Complex64::new(hm, 0.0)));
    let fd_m = (psi(z, w, &plus)? - psi(z, w, &minus)?) / (2.0 * hm);
    let (grad_m, _) = dpsi_dm(z, w, m)?;
    let n = m.n();
    let mut pairing = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            pairing += grad_m[(j, k)] * v[(j, k)];
        }
    }
    let closed_m = 2.0 * pairing.re;
    let dpsi_dm_rel = (fd_m - closed_m).abs() / closed_m.abs().max(tol::SMALL_FLOOR);

    // Closure identity, two code paths, exact algebra.
    let (lhs, rhs) = meq7_check(z, w, m)?;
    let meq7_rel = (lhs - rhs).abs() / lhs.abs().max(1.0);

    Ok(DerivativeDefects {
        dpsi_dw_rel,
        lap_w_rel,
        dpsi_dm_rel,
        meq7_rel,
    })
}
