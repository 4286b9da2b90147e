//! Dense square complex matrix: the universal carrier for M(t), S, S⁻¹, A,
//! A⁻¹, 𝒪, and the regularized Gram matrix ĥ.
//!
//! Row-major storage, value semantics, no aliasing tricks. Sizes are desk
//! scale (n ≤ 64), so clarity wins over blocking; the only concession to
//! speed is the i-k-j loop order in the product kernels.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense n×n complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    a: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix(n = {})", self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let v = self[(i, j)];
                    format!("{:+.4}{:+.4}i", v.re, v.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    /// Zero matrix of size n.
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        ComplexMatrix {
            n,
            a: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    /// Identity matrix of size n.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn diagonal(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Build from row-major entries; length must be a perfect square matching n².
    pub fn from_rows(n: usize, entries: &[Complex64]) -> Self {
        assert_eq!(entries.len(), n * n, "entry count must equal n²");
        ComplexMatrix {
            n,
            a: entries.to_vec(),
        }
    }

    /// Build from real row-major entries (imaginary parts zero).
    pub fn from_real_rows(n: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), n * n, "entry count must equal n²");
        ComplexMatrix {
            n,
            a: entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// Dimension n.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Raw row-major slice.
    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.a
    }

    /// True if every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-norm (largest entry modulus).
    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        Self {
            n: self.n,
            a: self.a.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Matrix product self · rhs.
    pub fn mul(&self, rhs: &ComplexMatrix) -> Self {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix product");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// Entrywise sum self + rhs.
    pub fn add(&self, rhs: &ComplexMatrix) -> Self {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix sum");
        let mut out = self.clone();
        for (o, r) in out.a.iter_mut().zip(&rhs.a) {
            *o += r;
        }
        out
    }

    /// Entrywise difference self − rhs.
    pub fn sub(&self, rhs: &ComplexMatrix) -> Self {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix difference");
        let mut out = self.clone();
        for (o, r) in out.a.iter_mut().zip(&rhs.a) {
            *o -= r;
        }
        out
    }

    /// Entrywise scale by a complex factor.
    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.a.iter_mut() {
            *v *= c;
        }
        out
    }

    /// self − z·I.
    pub fn sub_scalar_identity(&self, z: Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out[(i, i)] -= z;
        }
        out
    }

    /// Add c·I in place.
    pub fn add_scalar_identity(&mut self, c: Complex64) {
        for i in 0..self.n {
            let v = self[(i, i)] + c;
            self[(i, i)] = v;
        }
    }

    /// A = self† · self, with the upper triangle mirrored from the lower so
    /// the result is Hermitian to the last bit.
    pub fn gram(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += self[(k, i)].conj() * self[(k, j)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s.conj();
            }
            out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
        }
        out
    }

    /// A = self · self†, with exact Hermitian mirroring as in `gram`.
    pub fn gram_right(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += self[(i, k)] * self[(j, k)].conj();
                }
                out[(i, j)] = s;
                out[(j, i)] = s.conj();
            }
            out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
        }
        out
    }

    /// Hermitian part (self + self†)/2, mirrored exactly.
    pub fn hermitian_part(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)].conj());
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
            out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
        }
        out
    }

    /// Trace.
    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Column j as a vector.
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    /// Multiply column j by a scalar, in place.
    pub fn scale_column(&mut self, j: usize, c: Complex64) {
        for i in 0..self.n {
            let v = self[(i, j)] * c;
            self[(i, j)] = v;
        }
    }

    /// Multiply row i by a scalar, in place.
    pub fn scale_row(&mut self, i: usize, c: Complex64) {
        for j in 0..self.n {
            let v = self[(i, j)] * c;
            self[(i, j)] = v;
        }
    }

    /// Permuted copy: column j of the result is column perm[j] of self and
    /// row i of the result is row perm[i] of self (simultaneous relabeling,
    /// P·self·Pᵀ with P the permutation sending perm[i] → i).
    pub fn permuted_both(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self[(perm[i], perm[j])];
            }
        }
        out
    }

    /// Copy with columns relabeled: result column j = self column perm[j].
    pub fn permuted_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for j in 0..n {
            for i in 0..n {
                out[(i, j)] = self[(i, perm[j])];
            }
        }
        out
    }

    /// Copy with rows relabeled: result row i = self row perm[i].
    pub fn permuted_rows(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self[(perm[i], j)];
            }
        }
        out
    }

    // ── Text fixture format ────────────────────────────────────────────
    //
    // First line: n. Then n lines of n whitespace-separated "re,im" pairs,
    // 17 significant digits (round-trip exact for f64).

    /// Serialize in the matrix text fixture format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{}\n", self.n));
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let v = self[(i, j)];
                    format!("{:.17e},{:.17e}", v.re, v.im)
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parse the matrix text fixture format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::MatrixFormat("empty input".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::MatrixFormat(format!("bad dimension line: {e}")))?;
        if n == 0 {
            return Err(Error::MatrixFormat("dimension must be positive".into()));
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::MatrixFormat(format!("missing row {i}")))?;
            let cells: Vec<&str> = line.split_whitespace().collect();
            if cells.len() != n {
                return Err(Error::MatrixFormat(format!(
                    "row {i} has {} entries, expected {n}",
                    cells.len()
                )));
            }
            for (j, cell) in cells.iter().enumerate() {
                let (re, im) = cell.split_once(',').ok_or_else(|| {
                    Error::MatrixFormat(format!("entry ({i},{j}) is not a re,im pair"))
                })?;
                let re: f64 = re
                    .trim()
                    .parse()
                    .map_err(|e| Error::MatrixFormat(format!("entry ({i},{j}) real part: {e}")))?;
                let im: f64 = im.trim().parse().map_err(|e| {
                    Error::MatrixFormat(format!("entry ({i},{j}) imaginary part: {e}"))
                })?;
                m[(i, j)] = Complex64::new(re, im);
            }
        }
        if !m.is_finite() {
            return Err(Error::MatrixFormat("non-finite entry".into()));
        }
        Ok(m)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.n && j < self.n);
        &self.a[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.a[i * self.n + j]
    }
}

/// Matrix-vector product m·x.
pub fn matvec(m: &ComplexMatrix, x: &[Complex64]) -> Vec<Complex64> {
    let n = m.n();
    assert_eq!(x.len(), n);
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..n {
            s += m[(i, j)] * x[j];
        }
        y[i] = s;
    }
    y
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_and_product() {
        let i3 = ComplexMatrix::identity(3);
        let m = ComplexMatrix::from_rows(
            3,
            &[
                c(1.0, 2.0),
                c(0.0, -1.0),
                c(3.0, 0.0),
                c(2.0, 2.0),
                c(1.0, 1.0),
                c(0.5, 0.0),
                c(-1.0, 0.0),
                c(0.0, 0.0),
                c(4.0, -3.0),
            ],
        );
        assert_eq!(i3.mul(&m), m);
        assert_eq!(m.mul(&i3), m);
    }

    #[test]
    fn gram_is_exactly_hermitian() {
        let m =
            ComplexMatrix::from_rows(2, &[c(1.0, 0.3), c(-0.2, 1.7), c(0.0, -0.4), c(2.1, 0.9)]);
        let g = m.gram();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g[(i, j)], g[(j, i)].conj());
            }
            assert_eq!(g[(i, i)].im, 0.0);
        }
        // Against a naive adjoint product (values, not bits).
        let naive = m.adjoint().mul(&m);
        assert!(g.sub(&naive).max_abs() < 1e-14);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = ComplexMatrix::from_rows(
            2,
            &[
                c(1.0 / 3.0, -2.0 / 7.0),
                c(0.1, 0.2),
                c(-5.5e-13, 1.0),
                c(std::f64::consts::PI, -std::f64::consts::E),
            ],
        );
        let back = ComplexMatrix::from_text(&m.to_text()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m[(i, j)], back[(i, j)], "round trip must be bit exact");
            }
        }
    }

    #[test]
    fn text_rejects_malformed() {
        assert!(ComplexMatrix::from_text("").is_err());
        assert!(ComplexMatrix::from_text("2\n1,0 2,0\n").is_err());
        assert!(ComplexMatrix::from_text("1\nnot-a-pair\n").is_err());
        assert!(ComplexMatrix::from_text("1\n1.0;2.0\n").is_err());
    }

    #[test]
    fn permutations_relabel_consistently() {
        let m = ComplexMatrix::from_rows(
            3,
            &[
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(2.0, 0.0),
                c(10.0, 0.0),
                c(11.0, 0.0),
                c(12.0, 0.0),
                c(20.0, 0.0),
                c(21.0, 0.0),
                c(22.0, 0.0),
            ],
        );
        let perm = [2usize, 0, 1];
        let p = m.permuted_both(&perm);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p[(i, j)], m[(perm[i], perm[j])]);
            }
        }
    }
}
