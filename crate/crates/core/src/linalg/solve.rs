//! LU factorization with partial pivoting, and the linear solves built on it.
//!
//! This is the single entry point for S⁻¹ (solve against the identity) and
//! for any isolated right-hand side. The pivot guard is relative to the
//! Frobenius norm of the input so that uniformly scaled systems behave
//! identically.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::matrix::ComplexMatrix;
use crate::tol;

/// Packed LU factors of a square matrix with row pivoting: P·A = L·U.
pub struct LuFactor {
    lu: ComplexMatrix,
    perm: Vec<usize>,
    /// Frobenius norm of the original matrix, for the relative pivot guard.
    norm: f64,
}

/// Factor a matrix, failing if any pivot falls below the relative threshold.
pub fn lu_factor(a: &ComplexMatrix) -> Result<LuFactor> {
    let n = a.n();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let norm = a.frobenius();
    let threshold = tol::SINGULAR_PIVOT * norm.max(f64::MIN_POSITIVE);

    for k in 0..n {
        // Partial pivot: largest modulus in column k at or below the diagonal.
        let mut pivot_row = k;
        let mut pivot_mag = lu[(k, k)].norm();
        for i in (k + 1)..n {
            let mag = lu[(i, k)].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag < threshold {
            return Err(Error::SingularMatrix {
                pivot: pivot_mag,
                threshold,
            });
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            perm.swap(k, pivot_row);
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            for j in (k + 1)..n {
                let v = lu[(i, j)] - factor * lu[(k, j)];
                lu[(i, j)] = v;
            }
        }
    }
    Ok(LuFactor { lu, perm, norm })
}

impl LuFactor {
    /// Solve A·x = b for a single right-hand side.
    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.n();
        assert_eq!(b.len(), n);
        // Forward substitution on the permuted right-hand side (L has unit diagonal).
        let mut y: Vec<Complex64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            for j in 0..i {
                let v = y[i] - self.lu[(i, j)] * y[j];
                y[i] = v;
            }
        }
        // Back substitution with U.
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                let v = y[i] - self.lu[(i, j)] * y[j];
                y[i] = v;
            }
            y[i] /= self.lu[(i, i)];
        }
        y
    }

    /// Solve A·X = B column by column.
    pub fn solve(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.lu.n();
        assert_eq!(b.n(), n);
        let mut x = ComplexMatrix::zeros(n);
        for j in 0..n {
            let col = self.solve_vec(&b.column(j));
            for i in 0..n {
                x[(i, j)] = col[i];
            }
        }
        x
    }

    /// Frobenius norm of the matrix that was factored.
    pub fn input_norm(&self) -> f64 {
        self.norm
    }

    /// Determinant: product of U's diagonal times the pivot parity.
    pub fn det(&self) -> Complex64 {
        let n = self.lu.n();
        let mut d = Complex64::new(1.0, 0.0);
        for i in 0..n {
            d *= self.lu[(i, i)];
        }
        // Permutation parity from the cycle structure of the row map.
        let mut seen = vec![false; n];
        let mut transpositions = 0usize;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0usize;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.perm[i];
                len += 1;
            }
            transpositions += len - 1;
        }
        if transpositions % 2 == 1 {
            -d
        } else {
            d
        }
    }
}

/// Solve A·X = B, checking the residual ‖A·X − B‖_max against the relative
/// solve tolerance. The inverse is `solve_linear(a, I)`.
pub fn solve_linear(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let f = lu_factor(a)?;
    let x = f.solve(b);
    let residual = a.mul(&x).sub(b).max_abs();
    let scale = f.input_norm().max(1.0) * x.max_abs().max(1.0);
    if residual > tol::SOLVE_RESIDUAL * scale {
        return Err(Error::SingularMatrix {
            pivot: residual,
            threshold: tol::SOLVE_RESIDUAL * scale,
        });
    }
    Ok(x)
}

/// Inverse via LU against the identity.
pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    solve_linear(a, &ComplexMatrix::identity(a.n()))
}
