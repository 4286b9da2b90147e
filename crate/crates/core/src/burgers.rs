//! Deterministic side of the laboratory: the inviscid Burgers equation
//! solved by characteristics, and the density fields it predicts.
//!
//! Taking expectations of the stochastic field dynamics removes the
//! martingale term and leaves a first-order PDE for the expected potential
//! φ(z, w; t).  Because φ depends on w only through r = |w|, its radial
//! derivative v̂ := ½·∂φ/∂r obeys the inviscid Burgers equation
//!
//! ```text
//!     ∂v̂/∂t = 2 v̂ ∂v̂/∂r,
//! ```
//!
//! whose solution is implicit along characteristics:
//!
//! ```text
//!     v̂(z, r; t) = v̂₀(z, r + 2t·v̂(z, r; t)),
//! ```
//!
//! with v̂₀ the radial derivative of the initial potential.  Both initial
//! functions are spectral sums over κ_i(z), the eigenvalues of the Hermitian
//! matrix (m₀ − z)†(m₀ − z):
//!
//! ```text
//!     φ₀(z, s) = (1/2N) Σ_i log(κ_i + s²),
//!     v̂₀(z, s) = (s/N) Σ_i 1/(2(κ_i + s²)).
//! ```
//!
//! From the transported potential the two density fields follow:
//! ρ(t, z) = (1/2π)·∇²_z φ(z, 0; t) is the eigenvalue density and
//! 𝒪(t, z) = (4/π)·v̂(z, 0; t)² is the overlap-weighted density.  The module
//! provides the characteristic solver, grid evaluation of both fields with
//! mass quadrature, and the closed forms for the two reference initial
//! conditions (a single source at the origin and a symmetric pair of
//! sources), which the solver must reproduce to solver accuracy.
//!
//! A remark on shocks: for every admissible initial matrix, the initial
//! slope satisfies s·v̂₀′(s) − v̂₀(s) = −(s³/N)·Σ 1/(κ+s²)² < 0, which puts
//! every characteristic fold at a negative radius.  Characteristics
//! therefore never cross in the physical region r ≥ 0 and the solution is
//! global in time.  The shock guard below is defensive plumbing: it can
//! only fire on initial slope data that does not come from a spectrum.

use crate::error::{Error, Result};
use crate::exec;
use crate::field;
use crate::linalg::eigen::eigenvalues_only;
use crate::linalg::matrix::ComplexMatrix;
use crate::tol;
use num_complex::Complex64;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// ---------------------------------------------------------------------------
// Initial spectra
// ---------------------------------------------------------------------------

/// Eigenvalues κ_i ≥ 0 of (m₀ − z)†(m₀ − z) at one probe point z, sorted
/// ascending.  One decomposition serves every (r, t) evaluation at that z,
/// so the grid sweeps cache this per node.
#[derive(Debug, Clone)]
pub struct Kappas {
    values: Vec<f64>,
}

impl Kappas {
    /// Spectrum of the shifted Gram matrix at z.  The Gram construction is
    /// exactly Hermitian positive semi-definite, so the eigenvalues are
    /// real up to solver roundoff; tiny negative parts are clamped to zero.
    pub fn at(m0: &ComplexMatrix, z: Complex64) -> Result<Kappas> {
        let b = m0.sub_scalar_identity(z);
        let h = b.gram();
        let mut values: Vec<f64> = eigenvalues_only(&h)?
            .into_iter()
            .map(|e| e.re.max(0.0))
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("kappa values are finite"));
        Ok(Kappas { values })
    }

    /// Matrix size N.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the spectrum is empty (never true for a valid matrix).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Smallest κ: the squared distance of z to the spectrum of m₀ in the
    /// normal case (and a lower bound in general).
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    /// Initial potential φ₀(z, s) = (1/2N)·Σ log(κ_i + s²).  Diverges to
    /// −∞ when s = 0 on the spectrum.
    pub fn phi0(&self, s: f64) -> f64 {
        let n = self.values.len() as f64;
        self.values.iter().map(|k| (k + s * s).ln()).sum::<f64>() / (2.0 * n)
    }

    /// Initial slope v̂₀(z, s) = (s/2N)·Σ 1/(κ_i + s²).
    pub fn vhat0(&self, s: f64) -> f64 {
        if s == 0.0 {
            // Limit value: 0 off the spectrum, +∞ on it (the 1/κ term).
            return if self.min() > 0.0 { 0.0 } else { f64::INFINITY };
        }
        let n = self.values.len() as f64;
        s * self.values.iter().map(|k| 1.0 / (k + s * s)).sum::<f64>() / (2.0 * n)
    }

    /// Radial derivative ∂v̂₀/∂s = (1/2N)·Σ (κ_i − s²)/(κ_i + s²)².
    pub fn vhat0_prime(&self, s: f64) -> f64 {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .map(|k| {
                let d = k + s * s;
                (k - s * s) / (d * d)
            })
            .sum::<f64>()
            / (2.0 * n)
    }

    /// q(z) = (1/N)·Σ 1/κ_i, the initial slope of v̂₀ at s = 0 times two.
    /// A positive characteristic root at r = 0 exists exactly when
    /// t·q(z) > 1, which defines the support of the densities; q = ∞ on the
    /// spectrum, which is always inside the support for t > 0.
    pub fn inverse_kappa_mean(&self) -> f64 {
        let n = self.values.len() as f64;
        self.values.iter().map(|k| 1.0 / k).sum::<f64>() / n
    }
}

// ---------------------------------------------------------------------------
// Characteristic root solver (private, closure-driven so the defensive
// branches are testable with synthetic slope profiles)
// ---------------------------------------------------------------------------

struct RootSettings {
    residual_target: f64,
    residual_limit: f64,
    shock_guard: f64,
    max_newton: usize,
}

/// One damped Newton solve of F(u) = u − v̂₀(r + 2tu) from the start value
/// `u0`, constrained to u ≥ 0.  Returns the root and the derivative
/// F′ = 1 − 2t·v̂₀′ at it, or the last derivative seen on failure.
fn newton_root(
    v0: &dyn Fn(f64) -> f64,
    v0p: &dyn Fn(f64) -> f64,
    r: f64,
    t: f64,
    u0: f64,
    cfg: &RootSettings,
) -> (Option<f64>, f64) {
    let mut u = u0.max(0.0);
    let mut fp = 1.0 - 2.0 * t * v0p(r + 2.0 * t * u);
    for _ in 0..cfg.max_newton {
        let s = r + 2.0 * t * u;
        let f = u - v0(s);
        fp = 1.0 - 2.0 * t * v0p(s);
        if f.abs() <= cfg.residual_target {
            return (Some(u), fp);
        }
        if fp.abs() < cfg.shock_guard {
            return (None, fp);
        }
        let step = f / fp;
        let mut damp = 1.0;
        loop {
            let un = u - damp * step;
            if un >= 0.0 && (un - v0(r + 2.0 * t * un)).abs() < f.abs() {
                u = un;
                break;
            }
            damp *= 0.5;
            if damp < 1e-6 {
                return (None, fp);
            }
        }
    }
    let f = u - v0(r + 2.0 * t * u);
    if f.abs() <= cfg.residual_limit {
        (Some(u), fp)
    } else {
        (None, fp)
    }
}

/// Track the characteristic root from t = 0 to the target time at fixed
/// r > 0, restarting with finer continuation whenever a step loses the
/// branch.  The branch followed is by construction the one continuously
/// connected to v̂₀ as t → 0.
fn continued_root(
    v0: &dyn Fn(f64) -> f64,
    v0p: &dyn Fn(f64) -> f64,
    r: f64,
    t: f64,
    cfg: &RootSettings,
    n: usize,
) -> Result<f64> {
    let mut last_fp = 1.0;
    let mut steps = 1usize;
    while steps <= tol::CONTINUATION_STEPS {
        let mut u = v0(r);
        let mut ok = true;
        for i in 1..=steps {
            let ti = t * i as f64 / steps as f64;
            let (root, fp) = newton_root(v0, v0p, r, ti, u, cfg);
            last_fp = fp;
            match root {
                Some(root) => {
                    if fp.abs() < cfg.shock_guard {
                        return Err(Error::ShockDetected {
                            derivative: fp.abs(),
                            guard: cfg.shock_guard,
                        });
                    }
                    u = root;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(u);
        }
        steps *= 2;
    }
    // The finest continuation still lost the root.  A collapsing
    // characteristic-map derivative identifies a fold (crossing
    // characteristics); anything else is a plain convergence failure.
    if last_fp.abs() < 1e-2 {
        Err(Error::ShockDetected {
            derivative: last_fp.abs(),
            guard: cfg.shock_guard,
        })
    } else {
        Err(Error::NoConvergence {
            budget: cfg.max_newton * tol::CONTINUATION_STEPS,
            n,
        })
    }
}

/// Positive characteristic root at r = 0: solve u = v̂₀(2tu) for u > 0,
/// rejecting the trivial root u = 0.  Bisection on a bracket derived from
/// the a-priori bound u ≤ 1/(2√t), then a short Newton polish where the
/// slope is healthy.  The shock guard does not apply here: the derivative
/// F′ legitimately approaches zero at the support boundary.
fn positive_root(
    v0: &dyn Fn(f64) -> f64,
    v0p: &dyn Fn(f64) -> f64,
    t: f64,
    cfg: &RootSettings,
    n: usize,
) -> Result<f64> {
    let g = |u: f64| v0(2.0 * t * u) - u;
    let hi = 0.5 / t.sqrt();
    if g(hi) >= 0.0 {
        // v̂₀(s) ≤ 1/(2s) with equality only for an all-zero spectrum, in
        // which case the bound itself is the root.
        return Ok(hi);
    }
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if g(lo) > 0.0 {
            break;
        }
        if lo < 1e-300 {
            return Err(Error::NoRoot);
        }
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if g(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= f64::EPSILON * b {
            break;
        }
    }
    let mut u = 0.5 * (a + b);
    for _ in 0..4 {
        let s = 2.0 * t * u;
        let fp = 1.0 - 2.0 * t * v0p(s);
        if fp.abs() < 1e-3 {
            break;
        }
        let un = u - (u - v0(s)) / fp;
        if un > a && un < b {
            u = un;
        } else {
            break;
        }
    }
    let res = (u - v0(2.0 * t * u)).abs();
    if res <= cfg.residual_limit {
        Ok(u)
    } else {
        Err(Error::NoConvergence {
            budget: cfg.max_newton,
            n,
        })
    }
}

// ---------------------------------------------------------------------------
// Public solver
// ---------------------------------------------------------------------------

/// Characteristics solver for one initial matrix.
///
/// All evaluators report values with fixed-point residual at most
/// `residual_limit` (the solver targets `residual_target`, three orders
/// tighter, so that finite differences of φ across grid steps keep their
/// digits), and every reported v̂ is nonnegative.
#[derive(Debug, Clone)]
pub struct Burgers {
    m0: ComplexMatrix,
    /// Residual the root polish aims for.
    pub residual_target: f64,
    /// Largest accepted fixed-point residual |v̂ − v̂₀(r + 2t·v̂)|.
    pub residual_limit: f64,
    /// Minimum allowed |1 − 2t·∂v̂₀/∂r| along continuation.
    pub shock_guard: f64,
    /// Newton iteration budget per continuation step.
    pub max_newton: usize,
}

impl Burgers {
    /// Solver for the initial matrix `m0` with the contract tolerances.
    pub fn new(m0: ComplexMatrix) -> Burgers {
        Burgers {
            m0,
            residual_target: tol::BURGERS_TARGET,
            residual_limit: tol::BURGERS_RESIDUAL,
            shock_guard: tol::SHOCK_GUARD,
            max_newton: 50,
        }
    }

    /// The initial matrix.
    pub fn m0(&self) -> &ComplexMatrix {
        &self.m0
    }

    /// Matrix size N.
    pub fn n(&self) -> usize {
        self.m0.n()
    }

    fn settings(&self) -> RootSettings {
        RootSettings {
            residual_target: self.residual_target,
            residual_limit: self.residual_limit,
            shock_guard: self.shock_guard,
            max_newton: self.max_newton,
        }
    }

    /// Initial spectrum κ_i(z) at one probe point.
    pub fn kappas(&self, z: Complex64) -> Result<Kappas> {
        Kappas::at(&self.m0, z)
    }

    /// Initial potential φ(z, w; 0) at radius r = |w|, evaluated through
    /// the field-side Cholesky route so the two halves of the crate agree
    /// on the initial data by construction.
    ///
    /// Requires r > 0, or r = 0 with z off the spectrum of m₀; on the
    /// spectrum the regularized Gram matrix is singular.
    pub fn initial_phi(&self, z: Complex64, r: f64) -> Result<f64> {
        field::psi(z, c(r, 0.0), &self.m0)
    }

    /// Initial slope v̂₀(z, r) = (r/2N)·Tr ĥ⁻¹, the radial derivative
    /// ½·∂φ/∂r of the initial potential.  Same domain as [`initial_phi`].
    ///
    /// [`initial_phi`]: Burgers::initial_phi
    pub fn initial_vhat(&self, z: Complex64, r: f64) -> Result<f64> {
        Ok(field::dpsi_dw(z, c(r, 0.0), &self.m0)?.re)
    }

    /// Characteristic solution v̂(z, r; t) with residual at most
    /// `residual_limit`.
    ///
    /// At r = 0 the trivial root u = 0 is rejected whenever a positive root
    /// exists (t·q(z) > 1); outside that region the point is off-support
    /// and the solve reports [`Error::NoRoot`].  For r > 0 the root is
    /// tracked by continuation from t = 0, which selects the branch
    /// continuously connected to the initial slope.
    pub fn solve_vhat(&self, z: Complex64, r: f64, t: f64) -> Result<f64> {
        let k = self.kappas(z)?;
        self.solve_vhat_cached(&k, r, t)
    }

    /// [`solve_vhat`] against a cached spectrum.
    ///
    /// [`solve_vhat`]: Burgers::solve_vhat
    pub fn solve_vhat_cached(&self, k: &Kappas, r: f64, t: f64) -> Result<f64> {
        if !(r >= 0.0) || !(t >= 0.0) || !r.is_finite() || !t.is_finite() {
            return Err(Error::Config(format!(
                "solve_vhat requires r >= 0 and t >= 0, got r = {r}, t = {t}"
            )));
        }
        let cfg = self.settings();
        if t == 0.0 {
            return Ok(k.vhat0(r));
        }
        if r == 0.0 {
            if !(t * k.inverse_kappa_mean() > 1.0) {
                return Err(Error::NoRoot);
            }
            positive_root(&|s| k.vhat0(s), &|s| k.vhat0_prime(s), t, &cfg, k.len())
        } else {
            continued_root(&|s| k.vhat0(s), &|s| k.vhat0_prime(s), r, t, &cfg, k.len())
        }
    }

    /// Transported potential φ(z, r; t) = φ₀(z, r₀) − 2t·v̂₀(z, r₀)² with
    /// r₀ = r + 2t·v̂ the foot of the characteristic through (r, t).  Off
    /// the support at r = 0 the characteristic is stationary and the
    /// initial potential is returned unchanged.
    pub fn phi_along(&self, z: Complex64, r: f64, t: f64) -> Result<f64> {
        let k = self.kappas(z)?;
        self.phi_along_cached(&k, r, t)
    }

    /// [`phi_along`] against a cached spectrum.
    ///
    /// [`phi_along`]: Burgers::phi_along
    pub fn phi_along_cached(&self, k: &Kappas, r: f64, t: f64) -> Result<f64> {
        let u = match self.solve_vhat_cached(k, r, t) {
            Ok(u) => u,
            Err(Error::NoRoot) => 0.0,
            Err(e) => return Err(e),
        };
        let r0 = r + 2.0 * t * u;
        Ok(k.phi0(r0) - 2.0 * t * u * u)
    }

    /// Pointwise eigenvalue density ρ(t, z) = (1/2π)·∇²_z φ(z, 0; t) by a
    /// five-point Laplacian with step `h` (used by the PDE-residual tests;
    /// the grid sweep uses the grid spacing with a Richardson correction).
    pub fn rho_at(&self, z: Complex64, t: f64, h: f64) -> Result<f64> {
        let p = |z: Complex64| self.phi_along(z, 0.0, t);
        let lap = (p(z + c(h, 0.0))? + p(z - c(h, 0.0))? + p(z + c(0.0, h))? + p(z - c(0.0, h))?
            - 4.0 * p(z)?)
            / (h * h);
        Ok(lap / (2.0 * PI))
    }

    /// Pointwise overlap density 𝒪(t, z) = (4/π)·v̂(z, 0; t)², zero off
    /// the support.
    pub fn overlap_at(&self, z: Complex64, t: f64) -> Result<f64> {
        match self.solve_vhat(z, 0.0, t) {
            Ok(u) => Ok(4.0 / PI * u * u),
            Err(Error::NoRoot) => Ok(0.0),
            Err(e) => Err(e),
        }
    }

    /// Evaluate both density fields on a grid at one time.
    ///
    /// Per node, ρ comes from five-point Laplacians of the transported
    /// potential at the grid spacing, Richardson-corrected with the
    /// double-step stencil (fourth order).  Nodes whose stencil straddles
    /// the support boundary see the curvature jump of φ and are reported
    /// with the value of the nearest uncontaminated in-support node
    /// instead (the densities extend continuously to the boundary); the
    /// `trusted` mask records which nodes carry pure finite-difference
    /// values.  The overlap density is direct per node and needs no such
    /// repair.  Masses are midpoint sums with boundary cells subsampled
    /// 8×8 against the support test, which keeps the quadrature honest to
    /// O(h²) despite the support edge; the grid must contain the support
    /// for the masses to mean anything.
    pub fn density_fields(&self, t: f64, grid: &DensityGrid) -> Result<DensityField> {
        grid.validate()?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Config(format!(
                "density_fields requires t > 0, got t = {t}"
            )));
        }
        let (nx, ny) = (grid.nx, grid.ny);
        let (hx, hy) = grid.spacing();
        // Potential and root on the grid plus a two-node halo for the
        // wide stencil.
        let (mx, my) = (nx + 4, ny + 4);
        let halo: Vec<HaloNode> = exec::map_indexed(mx * my, |idx| {
            let jx = idx % mx;
            let jy = idx / mx;
            let z = c(
                grid.x0 + (jx as f64 - 2.0) * hx,
                grid.y0 + (jy as f64 - 2.0) * hy,
            );
            self.halo_node(z, t)
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let at = |ix: i64, iy: i64| &halo[(iy + 2) as usize * mx + (ix + 2) as usize];

        let mut rho_raw = vec![0.0; nx * ny];
        let mut trusted = vec![false; nx * ny];
        let mut support = vec![false; nx * ny];
        let mut overlap = vec![0.0; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let (jx, jy) = (ix as i64, iy as i64);
                let center = at(jx, jy);
                let idx = iy * nx + ix;
                support[idx] = center.support;
                overlap[idx] = if center.support {
                    4.0 / PI * center.u * center.u
                } else {
                    0.0
                };
                let lap_h = (at(jx + 1, jy).phi + at(jx - 1, jy).phi - 2.0 * center.phi)
                    / (hx * hx)
                    + (at(jx, jy + 1).phi + at(jx, jy - 1).phi - 2.0 * center.phi) / (hy * hy);
                let lap_2h = (at(jx + 2, jy).phi + at(jx - 2, jy).phi - 2.0 * center.phi)
                    / (4.0 * hx * hx)
                    + (at(jx, jy + 2).phi + at(jx, jy - 2).phi - 2.0 * center.phi)
                        / (4.0 * hy * hy);
                rho_raw[idx] = (4.0 * lap_h - lap_2h) / 3.0 / (2.0 * PI);
                trusted[idx] = (-2..=2).all(|d| {
                    d == 0
                        || (at(jx + d, jy).support == center.support
                            && at(jx, jy + d).support == center.support)
                });
            }
        }

        // Boundary-band repair: nearest trusted in-support value.
        let nearest = |ix: usize, iy: usize| -> Option<f64> {
            for radius in 1..=8i64 {
                let mut best: Option<(f64, f64)> = None;
                for dy in -radius..=radius {
                    for dx in -radius..=radius {
                        if dx.abs() != radius && dy.abs() != radius {
                            continue;
                        }
                        let (cx, cy) = (ix as i64 + dx, iy as i64 + dy);
                        if cx < 0 || cy < 0 || cx >= nx as i64 || cy >= ny as i64 {
                            continue;
                        }
                        let cand = cy as usize * nx + cx as usize;
                        if trusted[cand] && support[cand] {
                            let d2 = (dx as f64 * hx).powi(2) + (dy as f64 * hy).powi(2);
                            if best.map_or(true, |(bd, _)| d2 < bd) {
                                best = Some((d2, rho_raw[cand]));
                            }
                        }
                    }
                }
                if let Some((_, v)) = best {
                    return Some(v);
                }
            }
            None
        };
        let mut rho = vec![0.0; nx * ny];
        let mut rho_limit = vec![0.0; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let idx = iy * nx + ix;
                let near = nearest(ix, iy);
                rho_limit[idx] = if trusted[idx] && support[idx] {
                    rho_raw[idx]
                } else {
                    near.unwrap_or_else(|| rho_raw[idx].max(0.0))
                };
                rho[idx] = if !support[idx] {
                    0.0
                } else if trusted[idx] {
                    rho_raw[idx]
                } else {
                    rho_limit[idx]
                };
            }
        }

        // Mass quadrature: midpoint cells, with cells whose 3×3 halo
        // neighborhood changes support membership subsampled 8×8.
        let cell = hx * hy;
        let contributions: Vec<Result<(f64, f64)>> = exec::map_indexed(nx * ny, |idx| {
            let ix = idx % nx;
            let iy = idx / nx;
            let (jx, jy) = (ix as i64, iy as i64);
            let center = at(jx, jy);
            let straddle = (-1..=1i64)
                .any(|dy| (-1..=1i64).any(|dx| at(jx + dx, jy + dy).support != center.support));
            if !straddle {
                return Ok(if center.support {
                    (cell * rho[idx], cell * overlap[idx])
                } else {
                    (0.0, 0.0)
                });
            }
            let z0 = grid.node(ix, iy);
            let mut inside = 0usize;
            let mut ov_sum = 0.0;
            for sy in 0..8 {
                for sx in 0..8 {
                    let zs = z0
                        + c(
                            ((sx as f64 + 0.5) / 8.0 - 0.5) * hx,
                            ((sy as f64 + 0.5) / 8.0 - 0.5) * hy,
                        );
                    let k = Kappas::at(&self.m0, zs)?;
                    if t * k.inverse_kappa_mean() > 1.0 {
                        inside += 1;
                        match self.solve_vhat_cached(&k, 0.0, t) {
                            Ok(u) => ov_sum += 4.0 / PI * u * u,
                            Err(Error::NoRoot) => {}
                            Err(e) => return Err(e),
                        }
                    }
                }
            }
            let fraction = inside as f64 / 64.0;
            Ok((cell * fraction * rho_limit[idx], cell / 64.0 * ov_sum))
        });
        let mut mass_rho = 0.0;
        let mut mass_overlap = 0.0;
        for contribution in contributions {
            let (dr, dv) = contribution?;
            mass_rho += dr;
            mass_overlap += dv;
        }

        Ok(DensityField {
            grid: grid.clone(),
            t,
            rho,
            overlap_density: overlap,
            support_mask: support,
            trusted,
            mass_rho,
            mass_overlap,
        })
    }

    fn halo_node(&self, z: Complex64, t: f64) -> Result<HaloNode> {
        let k = Kappas::at(&self.m0, z)?;
        let (support, u) = if t * k.inverse_kappa_mean() > 1.0 {
            match self.solve_vhat_cached(&k, 0.0, t) {
                Ok(u) => (true, u),
                // A floating-point boundary case: treat as off-support.
                Err(Error::NoRoot) => (false, 0.0),
                Err(e) => return Err(e),
            }
        } else {
            (false, 0.0)
        };
        let r0 = 2.0 * t * u;
        let phi = k.phi0(r0) - 2.0 * t * u * u;
        Ok(HaloNode { phi, u, support })
    }
}

struct HaloNode {
    phi: f64,
    u: f64,
    support: bool,
}

// ---------------------------------------------------------------------------
// Grid and field containers
// ---------------------------------------------------------------------------

/// Rectangular evaluation grid for the density fields.  Nodes run y-outer,
/// x-inner, matching the field sweep convention.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl DensityGrid {
    /// Square grid covering [−half, half]² with `n` nodes per side.
    pub fn square(half: f64, n: usize) -> DensityGrid {
        DensityGrid {
            x0: -half,
            x1: half,
            y0: -half,
            y1: half,
            nx: n,
            ny: n,
        }
    }

    /// Check the grid is finite, ordered, and at least 2×2 (the Laplacian
    /// stencil needs a spacing).
    pub fn validate(&self) -> Result<()> {
        let vals = [self.x0, self.x1, self.y0, self.y1];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("density grid bounds must be finite".into()));
        }
        if !(self.x1 > self.x0) || !(self.y1 > self.y0) {
            return Err(Error::Config(
                "density grid requires x1 > x0 and y1 > y0".into(),
            ));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Config(
                "density grid requires at least 2 nodes per axis".into(),
            ));
        }
        Ok(())
    }

    /// Node spacing (hx, hy).
    pub fn spacing(&self) -> (f64, f64) {
        (
            (self.x1 - self.x0) / (self.nx - 1) as f64,
            (self.y1 - self.y0) / (self.ny - 1) as f64,
        )
    }

    /// Node position at index (ix, iy).
    pub fn node(&self, ix: usize, iy: usize) -> Complex64 {
        let (hx, hy) = self.spacing();
        c(self.x0 + ix as f64 * hx, self.y0 + iy as f64 * hy)
    }

    /// All nodes in storage order (y outer, x inner).
    pub fn nodes(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out.push(self.node(ix, iy));
            }
        }
        out
    }
}

/// Density fields on a grid at one time.
///
/// `rho` is everywhere ≥ −1e−6 (pure finite differences at trusted nodes,
/// boundary-limit values in the straddle band, zero outside the support);
/// `overlap_density` is nonnegative and zero outside `support_mask`.  The
/// stored masses are the boundary-corrected midpoint quadratures of both
/// fields over the grid.
#[derive(Debug, Clone)]
pub struct DensityField {
    pub grid: DensityGrid,
    pub t: f64,
    /// Eigenvalue density per node, storage order y-outer x-inner.
    pub rho: Vec<f64>,
    /// Overlap density per node.
    pub overlap_density: Vec<f64>,
    /// Whether the node lies in the support (a positive characteristic
    /// root exists).
    pub support_mask: Vec<bool>,
    /// Whether the node's ρ came from an uncontaminated stencil (all nine
    /// points on one side of the support boundary).
    pub trusted: Vec<bool>,
    /// Quadrature of ρ over the grid.
    pub mass_rho: f64,
    /// Quadrature of the overlap density over the grid.
    pub mass_overlap: f64,
}

impl DensityField {
    /// Linear index of node (ix, iy).
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.grid.nx + ix
    }
}

// ---------------------------------------------------------------------------
// Reference initial matrices and closed forms
// ---------------------------------------------------------------------------

/// Initial matrix with two opposite source points: diag(c, …, c, −c, …, −c)
/// with n_total/2 copies of each.  Requires even, nonzero n_total.
pub fn two_sources(c0: Complex64, n_total: usize) -> Result<ComplexMatrix> {
    if n_total == 0 || n_total % 2 != 0 {
        return Err(Error::Config(format!(
            "two-source initial matrix requires even size, got {n_total}"
        )));
    }
    let entries: Vec<Complex64> = (0..n_total)
        .map(|j| if j < n_total / 2 { c0 } else { -c0 })
        .collect();
    Ok(ComplexMatrix::diagonal(&entries))
}

/// Closed-form density values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedDensity {
    pub rho: f64,
    pub overlap: f64,
    pub in_support: bool,
    /// The evaluation point sits on the symmetry axis where the printed
    /// two-source density is 0/0; the value reported is the symmetric
    /// limit.
    pub removable_singularity: bool,
}

/// Closed forms for the single source at the origin: support |z| ≤ √t,
/// ρ = 1/(πt), 𝒪 = (t − |z|²)/(πt²).
pub fn example1_closed(t: f64, z: Complex64) -> ClosedDensity {
    let a = z.norm_sqr();
    let in_support = a <= t;
    if !in_support {
        return ClosedDensity {
            rho: 0.0,
            overlap: 0.0,
            in_support,
            removable_singularity: false,
        };
    }
    ClosedDensity {
        rho: 1.0 / (PI * t),
        overlap: (t - a) / (PI * t * t),
        in_support,
        removable_singularity: false,
    }
}

/// Closed forms for the two-source initial condition at ±c: support
/// t(|c|² + |z|²) ≥ |c² − z²|², and with u = z̄c + zc̄ and
/// s = √(t² + 4u²),
///
/// ```text
///     ρ(t, z) = 1/(πt) − 2|c|²/(π·s·(s + t)),
///     𝒪(t, z) = (t/2 − |c|² − |z|² + s/2)/(πt²).
/// ```
///
/// The ρ expression is the algebraic rewriting of the textbook form
/// (√(t²+4u²)(2u² − t|c|²) + t²|c|²) / (2πt·u²·√(t²+4u²)), exact for all
/// u and finite on the symmetry axis u = 0, where the textbook form is
/// 0/0; within 1e−6 of the axis the `removable_singularity` flag is set.
pub fn example2_closed(t: f64, z: Complex64, c0: Complex64) -> ClosedDensity {
    let u = 2.0 * (z.conj() * c0).re;
    let csq = c0.norm_sqr();
    let zsq = z.norm_sqr();
    let in_support = t * (csq + zsq) >= (c0 * c0 - z * z).norm_sqr();
    if !in_support {
        return ClosedDensity {
            rho: 0.0,
            overlap: 0.0,
            in_support,
            removable_singularity: false,
        };
    }
    let s = t.hypot(2.0 * u);
    let rho = 1.0 / (PI * t) - 2.0 * csq / (PI * s * (s + t));
    let overlap = (0.5 * t - csq - zsq + 0.5 * s) / (PI * t * t);
    ClosedDensity {
        rho,
        overlap,
        in_support,
        removable_singularity: u.abs() < tol::EXAMPLE2_AXIS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{NoiseStream, Purpose};

    fn single_source(n: usize) -> Burgers {
        Burgers::new(ComplexMatrix::zeros(n))
    }

    #[test]
    fn initial_functions_match_both_reference_cases() {
        // Single source, n = 2: φ₀ = ½·log(|z|² + r²), v̂₀ = r/(2(|z|²+r²)).
        let b = single_source(2);
        let z = c(1.0, 0.0);
        let r = 0.5;
        assert!((b.initial_phi(z, r).unwrap() - 0.5 * 1.25f64.ln()).abs() < 1e-12);
        assert!((b.initial_vhat(z, r).unwrap() - 0.5 / 2.5).abs() < 1e-12);
        // r = 0 off the spectrum: φ finite, v̂ = 0.
        assert!((b.initial_phi(z, 0.0).unwrap() - 0.0f64).abs() < 1e-12);
        assert_eq!(b.initial_vhat(z, 0.0).unwrap(), 0.0);

        // Two sources at ±1, N = 2:
        // v̂₀ = (r/4)(1/(|z−c|²+r²) + 1/(|z+c|²+r²)).
        let b2 = Burgers::new(two_sources(c(1.0, 0.0), 2).unwrap());
        let z = c(0.3, 0.4);
        let want = r / 4.0
            * (1.0 / ((z - c(1.0, 0.0)).norm_sqr() + r * r)
                + 1.0 / ((z + c(1.0, 0.0)).norm_sqr() + r * r));
        assert!((b2.initial_vhat(z, r).unwrap() - want).abs() < 1e-12);
        let want_phi = 0.25
            * (((z - c(1.0, 0.0)).norm_sqr() + r * r).ln()
                + ((z + c(1.0, 0.0)).norm_sqr() + r * r).ln());
        assert!((b2.initial_phi(z, r).unwrap() - want_phi).abs() < 1e-12);

        // The initial functions do not depend on the matrix size.
        let b8 = single_source(8);
        for (zz, rr) in [(c(0.7, -0.2), 0.3), (c(-1.1, 0.5), 1.0)] {
            assert!(
                (b.initial_phi(zz, rr).unwrap() - b8.initial_phi(zz, rr).unwrap()).abs() < 1e-12
            );
            assert!(
                (b.initial_vhat(zz, rr).unwrap() - b8.initial_vhat(zz, rr).unwrap()).abs() < 1e-12
            );
        }
    }

    #[test]
    fn initial_functions_reject_spectrum_points_at_zero_radius() {
        let b = single_source(2);
        assert!(matches!(
            b.initial_phi(c(0.0, 0.0), 0.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            b.initial_vhat(c(0.0, 0.0), 0.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn spectral_and_cholesky_routes_agree_on_initial_data() {
        let stream = NoiseStream::new(91, Purpose::Fixtures);
        let m0 = stream.gaussian_matrix(3, 0, 0, 0, 1.0);
        let b = Burgers::new(m0);
        for (z, r) in [
            (c(0.4, -0.7), 0.6),
            (c(-1.2, 0.1), 0.05),
            (c(2.0, 2.0), 1.5),
        ] {
            let k = b.kappas(z).unwrap();
            assert!((k.vhat0(r) - b.initial_vhat(z, r).unwrap()).abs() < 1e-11);
            assert!((k.phi0(r) - b.initial_phi(z, r).unwrap()).abs() < 1e-11);
        }
    }

    #[test]
    fn characteristic_root_reproduces_the_hand_values() {
        let b = single_source(2);
        // |z|² = 0.5, t = 1, r = 0: the positive root solves
        // |z|² + 4t²u² = t, so u = √(t − |z|²)/(2t).
        let z = c(0.5f64.sqrt(), 0.0);
        let u = b.solve_vhat(z, 0.0, 1.0).unwrap();
        assert!((u - 0.5f64.sqrt() / 2.0).abs() < 1e-10, "u = {u}");
        // Residual contract.
        let k = b.kappas(z).unwrap();
        assert!((u - k.vhat0(2.0 * u)).abs() <= tol::BURGERS_RESIDUAL);
        // |z|² = 2 at t = 1: outside the support.
        assert!(matches!(
            b.solve_vhat(c(2.0f64.sqrt(), 0.0), 0.0, 1.0),
            Err(Error::NoRoot)
        ));
        // On the spectrum itself the root is the a-priori bound 1/(2√t).
        let u0 = b.solve_vhat(c(0.0, 0.0), 0.0, 4.0).unwrap();
        assert!((u0 - 0.25).abs() < 1e-12, "u0 = {u0}");
    }

    #[test]
    fn short_time_root_returns_to_the_initial_slope() {
        let b = single_source(2);
        let z = c(0.6, -0.3);
        let r = 0.7;
        let u = b.solve_vhat(z, r, 1e-8).unwrap();
        assert!((u - b.initial_vhat(z, r).unwrap()).abs() < 1e-8);
        // And t = 0 is the initial slope (up to the roundoff between the
        // spectral-sum and Cholesky-trace routes).
        assert!((b.solve_vhat(z, r, 0.0).unwrap() - b.initial_vhat(z, r).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn roots_are_nonnegative_with_tight_residuals_everywhere() {
        let cases = [
            single_source(2),
            Burgers::new(two_sources(c(1.0, 0.0), 2).unwrap()),
        ];
        for b in &cases {
            for &t in &[0.5, 2.0] {
                for &r in &[0.0, 0.1, 1.0] {
                    for iy in -2..=2 {
                        for ix in -2..=2 {
                            let z = c(ix as f64 * 0.45, iy as f64 * 0.45);
                            let k = b.kappas(z).unwrap();
                            match b.solve_vhat_cached(&k, r, t) {
                                Ok(u) => {
                                    assert!(u >= 0.0);
                                    let res = (u - k.vhat0(r + 2.0 * t * u)).abs();
                                    assert!(
                                        res <= tol::BURGERS_RESIDUAL,
                                        "residual {res} at z = {z}, r = {r}, t = {t}"
                                    );
                                }
                                Err(Error::NoRoot) => assert_eq!(r, 0.0),
                                Err(e) => panic!("unexpected error {e} at z = {z}"),
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn transported_potential_satisfies_the_pde() {
        // ∂φ/∂t = 2v̂² along the solution, checked by central differences.
        let cases = [
            single_source(2),
            Burgers::new(two_sources(c(1.0, 0.0), 2).unwrap()),
        ];
        let dt = 1e-4;
        for b in &cases {
            for (z, r, t) in [
                (c(0.3, 0.2), 0.4, 0.8),
                (c(-0.5, 0.6), 0.1, 1.5),
                (c(0.9, -0.1), 1.2, 0.6),
            ] {
                let u = b.solve_vhat(z, r, t).unwrap();
                let dphi = (b.phi_along(z, r, t + dt).unwrap()
                    - b.phi_along(z, r, t - dt).unwrap())
                    / (2.0 * dt);
                assert!(
                    (dphi - 2.0 * u * u).abs() < 1e-5,
                    "PDE residual {} at z = {z}",
                    dphi - 2.0 * u * u
                );
            }
        }
    }

    #[test]
    fn potential_is_initial_and_harmonic_off_the_support() {
        let b = single_source(2);
        // Outside the disk at r = 0 the characteristics are stationary.
        let z = c(2.0, 0.0);
        let phi = b.phi_along(z, 0.0, 1.0).unwrap();
        assert!((phi - 2.0f64.ln()).abs() < 1e-12);
        // And the potential is harmonic there: ρ vanishes.
        let rho = b.rho_at(z, 1.0, 1e-3).unwrap();
        assert!(rho.abs() < 1e-6, "rho = {rho}");
        // At t = 0 the transported potential is the initial one.
        let phi0 = b.phi_along(c(0.4, 0.1), 0.3, 0.0).unwrap();
        assert!((phi0 - b.initial_phi(c(0.4, 0.1), 0.3).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_evaluate_the_reference_points() {
        // Single source at t = 1, z = 0: both densities are 1/π.
        let d = example1_closed(1.0, c(0.0, 0.0));
        assert!(d.in_support);
        assert!((d.rho - 1.0 / PI).abs() < 1e-15);
        assert!((d.overlap - 1.0 / PI).abs() < 1e-15);
        // Outside the unit disk at t = 1: zero.
        let d = example1_closed(1.0, c(1.5, 0.0));
        assert!(!d.in_support && d.rho == 0.0 && d.overlap == 0.0);

        // Two sources, c = 1, t = 1, z = 1:
        // 𝒪 = (1/π)(½ − 1 − 1 + ½√17) ≈ 0.178749.
        let d = example2_closed(1.0, c(1.0, 0.0), c(1.0, 0.0));
        assert!(d.in_support && !d.removable_singularity);
        let want = (0.5 - 2.0 + 0.5 * 17.0f64.sqrt()) / PI;
        assert!((d.overlap - want).abs() < 1e-14);
        assert!((want - 0.178748).abs() < 1e-6);
        // The stable ρ agrees with the direct textbook expression away
        // from the symmetry axis.
        for (z, t) in [(c(1.0, 0.0), 1.0), (c(0.5, 0.3), 2.0), (c(-0.2, 0.8), 3.0)] {
            let c0 = c(1.0, 0.0);
            let d = example2_closed(t, z, c0);
            if !d.in_support {
                continue;
            }
            let u = 2.0 * (z.conj() * c0).re;
            let s = (t * t + 4.0 * u * u).sqrt();
            let direct = (s * (2.0 * u * u - t) + t * t) / (2.0 * PI * t * u * u * s);
            assert!((d.rho - direct).abs() < 1e-12, "z = {z}, t = {t}");
        }

        // On the symmetry axis the flag is set and the value is the limit
        // (t − |c|²)/(πt²) at z on the imaginary axis.
        let d = example2_closed(2.0, c(0.0, 0.5), c(1.0, 0.0));
        assert!(d.in_support && d.removable_singularity);
        assert!((d.rho - (2.0 - 1.0) / (PI * 4.0)).abs() < 1e-14);

        // Boundary point of the two-source support: overlap vanishes.
        let d = example2_closed(1.0, c(0.0, 0.0), c(1.0, 0.0));
        assert!(d.in_support);
        assert!(d.overlap.abs() < 1e-15);

        // A vanishing source point degenerates to the single-source case.
        for z in [c(0.2, 0.1), c(0.9, -0.4)] {
            let a = example1_closed(1.0, z);
            let b = example2_closed(1.0, z, c(0.0, 0.0));
            assert!((a.rho - b.rho).abs() < 1e-14);
            assert!((a.overlap - b.overlap).abs() < 1e-14);
            assert_eq!(a.in_support, b.in_support);
        }
    }

    #[test]
    fn two_sources_requires_an_even_size() {
        assert!(matches!(two_sources(c(1.0, 0.0), 5), Err(Error::Config(_))));
        assert!(matches!(two_sources(c(1.0, 0.0), 0), Err(Error::Config(_))));
        let m = two_sources(c(2.0, 1.0), 4).unwrap();
        assert_eq!(m.n(), 4);
        assert_eq!(m[(0, 0)], c(2.0, 1.0));
        assert_eq!(m[(3, 3)], c(-2.0, -1.0));
        assert_eq!(m[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn grid_fields_match_single_source_closed_forms() {
        let b = single_source(2);
        let grid = DensityGrid::square(1.3, 41);
        let f = b.density_fields(1.0, &grid).unwrap();
        let mut checked = 0;
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let idx = f.idx(ix, iy);
                let z = grid.node(ix, iy);
                let closed = example1_closed(1.0, z);
                if f.trusted[idx] && f.support_mask[idx] {
                    assert!(
                        (f.rho[idx] - closed.rho).abs() < 1e-6,
                        "rho mismatch {} at {z}",
                        f.rho[idx] - closed.rho
                    );
                    assert!(
                        (f.overlap_density[idx] - closed.overlap).abs() < 1e-6,
                        "overlap mismatch at {z}"
                    );
                    checked += 1;
                }
                // The support mask can disagree with the closed form only
                // within a node spacing of the boundary.
                if f.support_mask[idx] != closed.in_support {
                    assert!((z.norm() - 1.0).abs() < 0.07, "mask mismatch at {z}");
                }
            }
        }
        assert!(checked > 500, "only {checked} trusted nodes");
        assert!((f.mass_rho - 1.0).abs() < 2e-3, "mass_rho = {}", f.mass_rho);
        assert!(
            (f.mass_overlap - 0.5).abs() < 2e-3,
            "mass_overlap = {}",
            f.mass_overlap
        );
    }

    #[test]
    fn grid_fields_match_two_source_closed_forms() {
        let c0 = c(1.0, 0.0);
        let b = Burgers::new(two_sources(c0, 2).unwrap());
        let grid = DensityGrid::square(1.8, 101);
        let (hx, _) = grid.spacing();
        let f = b.density_fields(1.0, &grid).unwrap();
        // Interior = an uncontaminated stencil at least two grid steps
        // from the support boundary.  The distance to the boundary curve
        // is estimated to first order from the support margin; near the
        // pinch at the origin the sixth derivative of φ blows up, which
        // is exactly why nodes closer than two steps are out of contract.
        let dist = |z: Complex64| {
            let m = |z: Complex64| (c0.norm_sqr() + z.norm_sqr()) - (c0 * c0 - z * z).norm_sqr();
            let e = 1e-6;
            let gx = (m(z + c(e, 0.0)) - m(z - c(e, 0.0))) / (2.0 * e);
            let gy = (m(z + c(0.0, e)) - m(z - c(0.0, e))) / (2.0 * e);
            m(z) / gx.hypot(gy).max(1e-12)
        };
        let mut checked = 0;
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let idx = f.idx(ix, iy);
                let z = grid.node(ix, iy);
                let closed = example2_closed(1.0, z, c0);
                if !(f.trusted[idx] && f.support_mask[idx] && closed.in_support)
                    || dist(z) < 2.0 * hx
                {
                    continue;
                }
                assert!(
                    (f.rho[idx] - closed.rho).abs() < 1e-5,
                    "rho mismatch {} at {z}",
                    f.rho[idx] - closed.rho
                );
                assert!(
                    (f.overlap_density[idx] - closed.overlap).abs() < 1e-5,
                    "overlap mismatch at {z}"
                );
                checked += 1;
            }
        }
        assert!(checked > 2000, "only {checked} interior nodes");
    }

    #[test]
    fn density_invariants_hold_on_both_examples() {
        for (b, half) in [
            (single_source(2), 1.4),
            (Burgers::new(two_sources(c(1.0, 0.0), 2).unwrap()), 1.8),
        ] {
            let grid = DensityGrid {
                x0: -half,
                x1: half,
                y0: -half * 0.9,
                y1: half * 0.9,
                nx: 31,
                ny: 29,
            };
            let f = b.density_fields(1.0, &grid).unwrap();
            for idx in 0..grid.nx * grid.ny {
                assert!(f.rho[idx] >= -1e-6);
                assert!(f.overlap_density[idx] >= -1e-6);
                if !f.support_mask[idx] {
                    assert_eq!(f.overlap_density[idx], 0.0);
                    assert_eq!(f.rho[idx], 0.0);
                }
            }
        }
    }

    #[test]
    fn grid_and_time_validation_reject_bad_inputs() {
        let b = single_source(2);
        let bad = DensityGrid {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
            nx: 1,
            ny: 5,
        };
        assert!(matches!(b.density_fields(1.0, &bad), Err(Error::Config(_))));
        let flipped = DensityGrid {
            x0: 1.0,
            x1: 0.0,
            y0: 0.0,
            y1: 1.0,
            nx: 5,
            ny: 5,
        };
        assert!(matches!(
            b.density_fields(1.0, &flipped),
            Err(Error::Config(_))
        ));
        let good = DensityGrid::square(1.0, 5);
        assert!(matches!(
            b.density_fields(0.0, &good),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            b.solve_vhat(c(0.1, 0.0), -0.5, 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn densities_are_independent_of_the_matrix_size() {
        let grid = DensityGrid::square(1.2, 11);
        let f2 = single_source(2).density_fields(1.0, &grid).unwrap();
        let f8 = single_source(8).density_fields(1.0, &grid).unwrap();
        for idx in 0..grid.nx * grid.ny {
            assert!((f2.rho[idx] - f8.rho[idx]).abs() < 1e-9);
            assert!((f2.overlap_density[idx] - f8.overlap_density[idx]).abs() < 1e-9);
            assert_eq!(f2.support_mask[idx], f8.support_mask[idx]);
        }
        let c0 = c(0.8, 0.3);
        let g2 = Burgers::new(two_sources(c0, 2).unwrap())
            .density_fields(0.7, &grid)
            .unwrap();
        let g4 = Burgers::new(two_sources(c0, 4).unwrap())
            .density_fields(0.7, &grid)
            .unwrap();
        for idx in 0..grid.nx * grid.ny {
            assert!((g2.rho[idx] - g4.rho[idx]).abs() < 1e-9);
            assert!((g2.overlap_density[idx] - g4.overlap_density[idx]).abs() < 1e-9);
        }
    }

    #[test]
    fn continuity_equation_holds_at_interior_points() {
        // ∂ρ/∂t = ¼ ∇²𝒪, by finite differences on both sides.
        let cases: [(Burgers, Vec<Complex64>); 2] = [
            (
                single_source(2),
                vec![c(0.3, 0.2), c(-0.4, 0.5), c(0.0, 0.0)],
            ),
            (
                Burgers::new(two_sources(c(1.0, 0.0), 2).unwrap()),
                vec![c(1.0, 0.0), c(-0.9, 0.2), c(0.6, -0.3)],
            ),
        ];
        let t = 1.0;
        let dt = 1e-3;
        let h = 1e-3;
        for (b, points) in &cases {
            for &z in points {
                let drho = (b.rho_at(z, t + dt, h).unwrap() - b.rho_at(z, t - dt, h).unwrap())
                    / (2.0 * dt);
                let lap_ov = (b.overlap_at(z + c(h, 0.0), t).unwrap()
                    + b.overlap_at(z - c(h, 0.0), t).unwrap()
                    + b.overlap_at(z + c(0.0, h), t).unwrap()
                    + b.overlap_at(z - c(0.0, h), t).unwrap()
                    - 4.0 * b.overlap_at(z, t).unwrap())
                    / (h * h);
                assert!(
                    (drho - 0.25 * lap_ov).abs() < 1e-3,
                    "continuity residual {} at {z}",
                    drho - 0.25 * lap_ov
                );
            }
        }
    }

    #[test]
    fn synthetic_fold_trips_the_shock_guard() {
        // No admissible spectrum can fold at r ≥ 0 (the module doc shows
        // s·v̂₀′ − v̂₀ < 0), so drive the continuation with a synthetic
        // slope profile that does: a localized bump v₀(s) = 2·exp(−(s−3)²)
        // folds at r = s − v₀/v₀′ > 0 for s < 3.
        let v0 = |s: f64| 2.0 * (-(s - 3.0) * (s - 3.0)).exp();
        let v0p = |s: f64| -2.0 * (s - 3.0) * v0(s);
        let cfg = RootSettings {
            residual_target: tol::BURGERS_TARGET,
            residual_limit: tol::BURGERS_RESIDUAL,
            shock_guard: tol::SHOCK_GUARD,
            max_newton: 50,
        };
        // Before the fold the root is fine.
        assert!(continued_root(&v0, &v0p, 1.5, 0.05, &cfg, 2).is_ok());
        // Past it, the characteristics have crossed.
        let res = continued_root(&v0, &v0p, 1.5, 2.0, &cfg, 2);
        assert!(
            matches!(res, Err(Error::ShockDetected { .. })),
            "expected a shock, got {res:?}"
        );
    }
}
