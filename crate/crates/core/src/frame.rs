//! Spectral frames: the eigenvalue/eigenvector bookkeeping attached to one
//! matrix snapshot.
//!
//! A frame holds the ordered eigenvalues Λ, the right-eigenvector matrix S,
//! the left eigenvectors as rows of S⁻¹, the Gram matrices A = S†S and
//! A⁻¹ = S⁻¹(S⁻¹)†, and the eigenvector-overlap matrix 𝒪_jk = A⁻¹_jk·A_kj.
//! Left eigenvectors come from inverting S rather than a second
//! eigendecomposition so bi-orthogonality holds to solver precision by
//! construction. All scientific outputs downstream (Λ, 𝒪, Ψ) are invariant
//! under the per-eigenvector scale gauge R_j → c_j R_j, L_j → L_j/c_j.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_linear, ComplexMatrix, ShiftedQrBackend, SpectralBackend};
use crate::tol;

/// Eigenvalue/overlap data for one matrix snapshot.
#[derive(Clone, Debug)]
pub struct SpectralFrame {
    /// Snapshot time.
    pub t: f64,
    /// Ordered eigenvalues Λ_j.
    pub lambda: Vec<Complex64>,
    /// Right eigenvectors as columns.
    pub s: ComplexMatrix,
    /// Left eigenvectors as rows (S⁻¹).
    pub s_inv: ComplexMatrix,
    /// Gram matrix A = S†S.
    pub a: ComplexMatrix,
    /// Inverse Gram A⁻¹ = S⁻¹·(S⁻¹)†.
    pub a_inv: ComplexMatrix,
    /// Overlap matrix 𝒪_jk = A⁻¹_jk·A_kj (Hermitian).
    pub overlap: ComplexMatrix,
    /// Smallest pairwise eigenvalue distance.
    pub min_gap: f64,
}

/// Build the frame for a matrix snapshot, rejecting (numerically)
/// degenerate spectra.
pub fn build_frame(m: &ComplexMatrix, t: f64, gap_tol: f64) -> Result<SpectralFrame> {
    build_frame_with(&ShiftedQrBackend, m, t, gap_tol)
}

/// Build a frame with an explicit eigensolver backend.
pub fn build_frame_with(
    backend: &dyn SpectralBackend,
    m: &ComplexMatrix,
    t: f64,
    gap_tol: f64,
) -> Result<SpectralFrame> {
    let decomp = backend.eigendecompose(m)?;
    if decomp.min_gap < gap_tol {
        return Err(Error::DegenerateSpectrum {
            min_gap: decomp.min_gap,
            gap_tol,
        });
    }
    let s_inv = solve_linear(&decomp.s, &ComplexMatrix::identity(m.n()))?;
    Ok(assemble(t, decomp.lambda, decomp.s, s_inv, decomp.min_gap))
}

/// Assemble the Gram/overlap structure from (λ, S, S⁻¹).
fn assemble(
    t: f64,
    lambda: Vec<Complex64>,
    s: ComplexMatrix,
    s_inv: ComplexMatrix,
    min_gap: f64,
) -> SpectralFrame {
    let n = s.n();
    let a = s.gram();
    let a_inv = s_inv.gram_right();
    let mut overlap = ComplexMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            overlap[(j, k)] = a_inv[(j, k)] * a[(k, j)];
        }
    }
    SpectralFrame {
        t,
        lambda,
        s,
        s_inv,
        a,
        a_inv,
        overlap,
        min_gap,
    }
}

impl SpectralFrame {
    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.s.n()
    }

    /// ‖S⁻¹·S − I‖_max: bi-orthogonality defect.
    pub fn biortho_defect(&self) -> f64 {
        let n = self.n();
        self.s_inv
            .mul(&self.s)
            .sub(&ComplexMatrix::identity(n))
            .max_abs()
    }

    /// ‖M − S·diag(Λ)·S⁻¹‖_F: reconstruction defect against the source matrix.
    pub fn reconstruction_defect(&self, m: &ComplexMatrix) -> f64 {
        self.s
            .mul(&ComplexMatrix::diagonal(&self.lambda))
            .mul(&self.s_inv)
            .sub(m)
            .frobenius()
    }

    /// ‖𝒪 − 𝒪†‖_max: overlap Hermiticity defect.
    pub fn overlap_hermiticity_defect(&self) -> f64 {
        self.overlap.sub(&self.overlap.adjoint()).max_abs()
    }

    /// max_j |Σ_k 𝒪_jk − 1|: row-sum identity defect (forced by A⁻¹A = I).
    pub fn row_sum_defect(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for j in 0..n {
            let sum: Complex64 = (0..n).map(|k| self.overlap[(j, k)]).sum();
            worst = worst.max((sum - Complex64::new(1.0, 0.0)).norm());
        }
        worst
    }

    /// Apply the scale gauge R_j → c_j·R_j, L_j → L_j/c_j and rebuild the
    /// Gram/overlap structure. Λ and 𝒪 are invariant (up to roundoff).
    pub fn gauge_transform(&self, c: &[Complex64]) -> Result<SpectralFrame> {
        let n = self.n();
        assert_eq!(c.len(), n, "one gauge factor per eigenvector");
        for (j, &cj) in c.iter().enumerate() {
            let modulus = cj.norm();
            if modulus == 0.0 {
                return Err(Error::ZeroGaugeFactor { index: j });
            }
            if !(tol::GAUGE_MODULUS_MIN..=tol::GAUGE_MODULUS_MAX).contains(&modulus) {
                return Err(Error::GaugeOutOfRange {
                    index: j,
                    modulus,
                    lo: tol::GAUGE_MODULUS_MIN,
                    hi: tol::GAUGE_MODULUS_MAX,
                });
            }
        }
        let mut s = self.s.clone();
        let mut s_inv = self.s_inv.clone();
        for (j, &cj) in c.iter().enumerate() {
            s.scale_column(j, cj);
            s_inv.scale_row(j, cj.inv());
        }
        Ok(assemble(
            self.t,
            self.lambda.clone(),
            s,
            s_inv,
            self.min_gap,
        ))
    }

    /// Relabeled copy: new index j carries what the old frame held at
    /// perm[j] (eigenvalue, eigenvector column, left-eigenvector row, and
    /// both overlap indices).
    pub fn relabeled(&self, perm: &[usize]) -> SpectralFrame {
        let n = self.n();
        assert_eq!(perm.len(), n);
        let lambda: Vec<Complex64> = perm.iter().map(|&p| self.lambda[p]).collect();
        SpectralFrame {
            t: self.t,
            lambda,
            s: self.s.permuted_columns(perm),
            s_inv: self.s_inv.permuted_rows(perm),
            a: self.a.permuted_both(perm),
            a_inv: self.a_inv.permuted_both(perm),
            overlap: self.overlap.permuted_both(perm),
            min_gap: self.min_gap,
        }
    }

    /// The empirical measures (Ξ, Θ): Ξ puts weight 1/n at each eigenvalue,
    /// Θ puts weight Re(𝒪_jj)/n² (the imaginary part is numerical noise by
    /// the Hermiticity invariant).
    pub fn empirical_measures(&self) -> (EmpiricalMeasure, EmpiricalMeasure) {
        let n = self.n();
        let xi = EmpiricalMeasure {
            atoms: self.lambda.iter().map(|&l| (l, 1.0 / n as f64)).collect(),
        };
        let theta = EmpiricalMeasure {
            atoms: self
                .lambda
                .iter()
                .enumerate()
                .map(|(j, &l)| (l, self.overlap[(j, j)].re / (n * n) as f64))
                .collect(),
        };
        (xi, theta)
    }

    /// Serializable dump of the gauge-invariant content.
    pub fn dump(&self) -> FrameDump {
        let n = self.n();
        FrameDump {
            t: self.t,
            lambda: self.lambda.iter().map(|l| [l.re, l.im]).collect(),
            overlap: (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| {
                            let v = self.overlap[(j, k)];
                            [v.re, v.im]
                        })
                        .collect()
                })
                .collect(),
            min_gap: self.min_gap,
        }
    }
}

/// JSON-facing frame snapshot: time, eigenvalues, overlap matrix, minimum
/// eigenvalue gap. Complex numbers are [re, im] pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameDump {
    pub t: f64,
    pub lambda: Vec<[f64; 2]>,
    pub overlap: Vec<Vec<[f64; 2]>>,
    pub min_gap: f64,
}

/// Atomic measure on ℂ: a list of (location, weight) pairs.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<(Complex64, f64)>,
}

impl EmpiricalMeasure {
    /// ⟨μ, φ⟩ = Σ weight·φ(location).
    pub fn pairing<F: Fn(Complex64) -> Complex64>(&self, phi: F) -> Complex64 {
        self.atoms.iter().map(|&(loc, w)| phi(loc) * w).sum()
    }

    /// Total mass.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }
}

// ───────────────────────── trajectory relabeling ─────────────────────────

/// Optimal-assignment permutation π minimizing Σ_j |prev[j] − next[π(j)]|,
/// used to keep eigenvalue labels continuous along a trajectory. Errors with
/// `AmbiguousMatching` when the best and second-best assignments are within
/// `tol::AMBIGUOUS_MATCH` of each other in total cost — the signature of a
/// near-collision, where relabeling by proximity is no longer meaningful.
pub fn match_permutation(prev: &[Complex64], next: &[Complex64]) -> Result<Vec<usize>> {
    assert_eq!(prev.len(), next.len(), "lists must have equal length");
    let n = prev.len();
    if n == 1 {
        return Ok(vec![0]);
    }
    let cost = |j: usize, k: usize| (prev[j] - next[k]).norm();
    let (best, best_cost, second_cost) = if n <= 3 {
        // Tiny systems: enumerate all permutations outright.
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut second = f64::INFINITY;
        for perm in all_permutations(n) {
            let total: f64 = perm.iter().enumerate().map(|(j, &k)| cost(j, k)).sum();
            match &best {
                Some((_, bc)) if total < *bc => {
                    second = *bc;
                    best = Some((perm, total));
                }
                Some((_, bc)) => second = second.min(total.max(*bc)),
                None => best = Some((perm, total)),
            }
        }
        let (bp, bc) = best.expect("n ≥ 2 has permutations");
        (bp, bc, second)
    } else {
        let (best, best_cost) = hungarian(n, &cost);
        // Exact second-best: any permutation other than the best must avoid
        // the edge (j, best[j]) for at least one j, so re-solving n times
        // with one edge forbidden and taking the minimum is exact.
        let mut second = f64::INFINITY;
        for j in 0..n {
            let forbidden = best[j];
            let restricted = |r: usize, c: usize| {
                if r == j && c == forbidden {
                    FORBIDDEN_COST
                } else {
                    cost(r, c)
                }
            };
            let (_, total) = hungarian(n, &restricted);
            if total < FORBIDDEN_COST / 2.0 {
                second = second.min(total);
            }
        }
        (best, best_cost, second)
    };
    let gap = second_cost - best_cost;
    if gap < tol::AMBIGUOUS_MATCH {
        return Err(Error::AmbiguousMatching { gap });
    }
    Ok(best)
}

const FORBIDDEN_COST: f64 = 1e100;

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    permute_into(&mut items, 0, &mut out);
    out
}

fn permute_into(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute_into(items, k + 1, out);
        items.swap(k, i);
    }
}

/// O(n³) Hungarian algorithm (shortest augmenting paths with potentials).
/// Returns (perm, total) with perm[row] = column and the minimal total cost.
fn hungarian(n: usize, cost: &dyn Fn(usize, usize) -> f64) -> (Vec<usize>, f64) {
    // 1-indexed internals; p[j] = row currently matched to column j.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    let total: f64 = (0..n).map(|r| cost(r, perm[r])).sum();
    (perm, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{NoiseStream, Purpose};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hand_matrix() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(2, &[0.0, 1.0, 0.0, 1.0])
    }

    #[test]
    fn normal_matrix_has_identity_overlap() {
        let m = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let f = build_frame(&m, 0.0, tol::GAP_TOL).unwrap();
        let i2 = ComplexMatrix::identity(2);
        assert!(f.overlap.sub(&i2).max_abs() < 1e-14);
        assert!(f.a.sub(&i2).max_abs() < 1e-14);
        assert!(f.a_inv.sub(&i2).max_abs() < 1e-14);
    }

    #[test]
    fn hand_frame_overlap_matrix() {
        // R₁ = (1,0), R₂ ∝ (1,1), L₁ = (1,−1), L₂ = (0,√2)·(1/√2):
        // 𝒪 = [[2, −1], [−1, 2]], row sums 1.
        let f = build_frame(&hand_matrix(), 0.0, tol::GAP_TOL).unwrap();
        let expected = ComplexMatrix::from_real_rows(2, &[2.0, -1.0, -1.0, 2.0]);
        assert!(f.overlap.sub(&expected).max_abs() < 1e-12);
        assert!(f.row_sum_defect() < tol::ROW_SUM);
        assert!((f.lambda[0] - c(0.0, 0.0)).norm() < 1e-14);
        assert!((f.lambda[1] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn random_frame_satisfies_invariants() {
        let stream = NoiseStream::new(202, Purpose::Fixtures);
        let n = 5;
        let m = stream.gaussian_matrix(n, 0, 0, 0, (1.0 / (2.0 * n as f64)).sqrt());
        let f = build_frame(&m, 0.0, tol::GAP_TOL).unwrap();
        assert!(f.biortho_defect() < tol::BIORTHO * n as f64);
        assert!(f.reconstruction_defect(&m) < tol::RECONSTRUCT * m.frobenius() * n as f64);
        assert!(f.overlap_hermiticity_defect() < tol::OVERLAP_HERMITIAN * f.overlap.max_abs());
        for j in 0..n {
            let d = f.overlap[(j, j)];
            assert!(d.re >= 1.0 - tol::DIAG_OVERLAP, "diag {d}");
            assert!(d.im.abs() <= tol::DIAG_OVERLAP * d.norm(), "diag {d}");
        }
        assert!(f.row_sum_defect() < tol::ROW_SUM);
    }

    #[test]
    fn hermitian_matrix_degenerates_to_identity_overlap() {
        let stream = NoiseStream::new(203, Purpose::Fixtures);
        let b = stream.gaussian_matrix(4, 0, 0, 0, 1.0);
        let m = b.hermitian_part();
        let f = build_frame(&m, 0.0, tol::GAP_TOL).unwrap();
        assert!(
            f.overlap.sub(&ComplexMatrix::identity(4)).max_abs() < 1e-8,
            "Hermitian matrices have trivial overlap"
        );
    }

    #[test]
    fn identity_gauge_is_noise_level() {
        let f = build_frame(&hand_matrix(), 0.0, tol::GAP_TOL).unwrap();
        let g = f.gauge_transform(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(f.s.sub(&g.s).max_abs() < 1e-14);
        assert!(f.overlap.sub(&g.overlap).max_abs() < 1e-14);
        assert_eq!(f.lambda, g.lambda);
    }

    #[test]
    fn scale_gauge_moves_gram_but_not_overlap() {
        let f = build_frame(&hand_matrix(), 0.0, tol::GAP_TOL).unwrap();
        let g = f.gauge_transform(&[c(2.0, 0.0), c(0.5, 0.0)]).unwrap();
        // A entries scale as c̄_j·c_k.
        assert!((g.a[(0, 0)].re / f.a[(0, 0)].re - 4.0).abs() < 1e-12);
        assert!((g.a[(1, 1)].re / f.a[(1, 1)].re - 0.25).abs() < 1e-12);
        assert!(f.overlap.sub(&g.overlap).max_abs() < 1e-12);
    }

    #[test]
    fn random_gauge_leaves_overlap_invariant() {
        let stream = NoiseStream::new(204, Purpose::Fixtures);
        let n = 5;
        let m = stream.gaussian_matrix(n, 1, 0, 0, (1.0 / (2.0 * n as f64)).sqrt());
        let f = build_frame(&m, 0.0, tol::GAP_TOL).unwrap();
        // Moduli in [0.1, 10): u ∈ (0,1) mapped through 0.1·10^(2u).
        let c_factors: Vec<Complex64> = (0..n)
            .map(|j| {
                let (g1, g2) = stream.gauss_pair(2, 0, j as u64, 0);
                let modulus = 0.1 * 10f64.powf(2.0 / (1.0 + g1.abs()));
                let phase = g2;
                Complex64::from_polar(modulus, phase)
            })
            .collect();
        let g = f.gauge_transform(&c_factors).unwrap();
        assert_eq!(f.lambda, g.lambda, "eigenvalues are gauge-exact");
        assert!(
            f.overlap.sub(&g.overlap).max_abs() < tol::GAUGE_INVARIANCE,
            "overlap drifted {}",
            f.overlap.sub(&g.overlap).max_abs()
        );
    }

    #[test]
    fn gauge_guards_reject_bad_factors() {
        let f = build_frame(&hand_matrix(), 0.0, tol::GAP_TOL).unwrap();
        match f.gauge_transform(&[c(0.0, 0.0), c(1.0, 0.0)]) {
            Err(Error::ZeroGaugeFactor { index }) => assert_eq!(index, 0),
            _ => panic!("expected ZeroGaugeFactor"),
        }
        match f.gauge_transform(&[c(1.0, 0.0), c(1e9, 0.0)]) {
            Err(Error::GaugeOutOfRange { index, .. }) => assert_eq!(index, 1),
            _ => panic!("expected GaugeOutOfRange"),
        }
    }

    #[test]
    fn degenerate_spectrum_is_rejected() {
        let m = ComplexMatrix::from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]);
        match build_frame(&m, 0.0, tol::GAP_TOL) {
            Err(Error::DegenerateSpectrum { .. }) => {}
            _ => panic!("expected DegenerateSpectrum"),
        }
    }

    #[test]
    fn permutation_equivariance() {
        let stream = NoiseStream::new(205, Purpose::Fixtures);
        let n = 4;
        let m = stream.gaussian_matrix(n, 3, 0, 0, 0.5);
        let perm = [2usize, 0, 3, 1];
        let pm = m.permuted_both(&perm);
        let f1 = build_frame(&m, 0.0, tol::GAP_TOL).unwrap();
        let f2 = build_frame(&pm, 0.0, tol::GAP_TOL).unwrap();
        // Canonical eigenvalue ordering makes the frames agree outright.
        for (a, b) in f1.lambda.iter().zip(&f2.lambda) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!(f1.overlap.sub(&f2.overlap).max_abs() < 1e-9);
    }

    #[test]
    fn empirical_measures_weights() {
        // Normal diag(1,2): Θ weights (1/4, 1/4), total 1/2.
        let m = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let f = build_frame(&m, 0.0, tol::GAP_TOL).unwrap();
        let (xi, theta) = f.empirical_measures();
        assert!((xi.total_mass() - 1.0).abs() < 1e-15);
        for &(_, w) in &theta.atoms {
            assert!((w - 0.25).abs() < 1e-12);
        }
        assert!((theta.total_mass() - 0.5).abs() < 1e-12);

        // Hand matrix: Θ weights (1/2, 1/2) at 0 and 1.
        let f = build_frame(&hand_matrix(), 0.0, tol::GAP_TOL).unwrap();
        let (_, theta) = f.empirical_measures();
        assert!((theta.atoms[0].0 - c(0.0, 0.0)).norm() < 1e-12);
        assert!((theta.atoms[0].1 - 0.5).abs() < 1e-12);
        assert!((theta.atoms[1].0 - c(1.0, 0.0)).norm() < 1e-12);
        assert!((theta.atoms[1].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pairing_examples() {
        let m = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let f = build_frame(&m, 0.0, tol::GAP_TOL).unwrap();
        let (xi, _) = f.empirical_measures();
        let one = xi.pairing(|_| c(1.0, 0.0));
        assert!((one - c(1.0, 0.0)).norm() < 1e-15);
        let mean = xi.pairing(|z| z);
        assert!((mean - c(1.5, 0.0)).norm() < 1e-15);

        // n = 1 at the origin: Θ = δ₀ with weight 1, so the Gaussian bump
        // pairs to exactly 1.
        let m1 = ComplexMatrix::diagonal(&[c(0.0, 0.0)]);
        let f1 = build_frame(&m1, 0.0, tol::GAP_TOL).unwrap();
        let (_, theta1) = f1.empirical_measures();
        let bump = theta1.pairing(|z| c((-z.norm_sqr()).exp(), 0.0));
        assert!((bump - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn matching_recovers_swap_and_identity() {
        let prev = [c(0.0, 0.0), c(1.0, 0.0)];
        let next = [c(1.01, 0.0), c(0.01, 0.0)];
        assert_eq!(match_permutation(&prev, &next).unwrap(), vec![1, 0]);
        assert_eq!(match_permutation(&prev, &prev).unwrap(), vec![0, 1]);
    }

    #[test]
    fn matching_recovers_known_shuffle() {
        // 6 points, next = shuffled with a small perturbation; validated
        // against brute force over all 720 permutations.
        let prev: Vec<Complex64> = (0..6).map(|i| c(f64::from(i), f64::from(i % 3))).collect();
        let shuffle = [3usize, 0, 4, 5, 1, 2];
        let next: Vec<Complex64> = (0..6)
            .map(|k| {
                let j = shuffle.iter().position(|&s| s == k).unwrap();
                prev[j] + c(1e-3 * (k as f64 + 1.0), -2e-3)
            })
            .collect();
        let got = match_permutation(&prev, &next).unwrap();
        assert_eq!(got, shuffle.to_vec());

        let mut best_cost = f64::INFINITY;
        let mut best_perm = Vec::new();
        for perm in all_permutations(6) {
            let total: f64 = perm
                .iter()
                .enumerate()
                .map(|(j, &k)| (prev[j] - next[k]).norm())
                .sum();
            if total < best_cost {
                best_cost = total;
                best_perm = perm;
            }
        }
        assert_eq!(got, best_perm, "Hungarian must agree with brute force");
    }

    #[test]
    fn equidistant_matching_is_ambiguous() {
        let prev = [c(0.0, 0.0), c(1.0, 0.0)];
        let next = [c(0.5, 0.0), c(0.5, 0.0)];
        match match_permutation(&prev, &next) {
            Err(Error::AmbiguousMatching { gap }) => assert!(gap.abs() < 1e-15),
            other => panic!("expected AmbiguousMatching, got {other:?}"),
        }
    }

    #[test]
    fn relabeling_permutes_every_field_consistently() {
        let f = build_frame(&hand_matrix(), 0.0, tol::GAP_TOL).unwrap();
        let r = f.relabeled(&[1, 0]);
        assert_eq!(r.lambda[0], f.lambda[1]);
        assert_eq!(r.overlap[(0, 1)], f.overlap[(1, 0)]);
        assert_eq!(r.s[(0, 0)], f.s[(0, 1)]);
        assert_eq!(r.s_inv[(0, 0)], f.s_inv[(1, 0)]);
        // Double relabel restores the original.
        let rr = r.relabeled(&[1, 0]);
        assert_eq!(rr.lambda, f.lambda);
        assert_eq!(rr.overlap, f.overlap);
    }

    #[test]
    fn frame_dump_round_trips_through_json() {
        let f = build_frame(&hand_matrix(), 0.25, tol::GAP_TOL).unwrap();
        let dump = f.dump();
        let text = serde_json::to_string(&dump).unwrap();
        let back: FrameDump = serde_json::from_str(&text).unwrap();
        assert_eq!(back.t, 0.25);
        assert_eq!(back.lambda.len(), 2);
        assert_eq!(
            back.overlap[0][1],
            [f.overlap[(0, 1)].re, f.overlap[(0, 1)].im]
        );
        assert_eq!(back.min_gap, f.min_gap);
    }
}
