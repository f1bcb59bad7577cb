//! Small dense matrices, pivoted determinants, and the strict (unpivoted)
//! LDU factorization used for biorthogonalization.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged row lengths".into()));
        }
        Ok(DenseMatrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Copy with the given rows and columns removed (for complementary minors).
    pub fn minor_removing(&self, drop_rows: &[usize], drop_cols: &[usize]) -> DenseMatrix {
        let keep_rows: Vec<usize> = (0..self.rows).filter(|i| !drop_rows.contains(i)).collect();
        let keep_cols: Vec<usize> = (0..self.cols).filter(|j| !drop_cols.contains(j)).collect();
        DenseMatrix::from_fn(keep_rows.len(), keep_cols.len(), |i, j| {
            self[(keep_rows[i], keep_cols[j])]
        })
    }

    /// Determinant by partial-pivot Gaussian elimination; a singular matrix
    /// yields exactly 0.
    pub fn det(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "determinant of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(1.0);
        }
        let mut a = self.data.clone();
        let mut sign = 1.0f64;
        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_val = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = i;
                }
            }
            if pivot_val == 0.0 {
                return Ok(0.0);
            }
            if pivot_row != k {
                for j in 0..n {
                    a.swap(k * n + j, pivot_row * n + j);
                }
                sign = -sign;
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let factor = a[i * n + k] / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in k..n {
                    a[i * n + j] -= factor * a[k * n + j];
                }
            }
        }
        let mut det = sign;
        for k in 0..n {
            det *= a[k * n + k];
        }
        Ok(det)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of `M = L D U` with unit-triangular `L`, `U`.
#[derive(Debug, Clone)]
pub struct LduFactors {
    pub l: DenseMatrix,
    pub d: Vec<f64>,
    pub u: DenseMatrix,
}

/// Relative pivot threshold separating genuine rank deficiency from roundoff.
pub const LDU_PIVOT_TOL: f64 = 1e-12;

/// Strict LDU factorization without pivoting. Existence is exactly the
/// non-degeneracy of all leading principal minors; the first failing pivot is
/// reported as a [`Error::DegeneratePairing`].
pub fn ldu_biorthogonalize(m: &DenseMatrix) -> Result<LduFactors> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "LDU of non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let scale = m.max_abs();
    let tol = LDU_PIVOT_TOL * scale;
    let mut l = DenseMatrix::identity(n);
    let mut u = DenseMatrix::identity(n);
    let mut d = vec![0.0f64; n];
    for k in 0..n {
        let mut pivot = m[(k, k)];
        for j in 0..k {
            pivot -= l[(k, j)] * d[j] * u[(j, k)];
        }
        if !(pivot.abs() > tol) {
            return Err(Error::DegeneratePairing { index: k, pivot });
        }
        d[k] = pivot;
        for i in (k + 1)..n {
            let mut s = m[(i, k)];
            for j in 0..k {
                s -= l[(i, j)] * d[j] * u[(j, k)];
            }
            l[(i, k)] = s / pivot;
        }
        for i in (k + 1)..n {
            let mut s = m[(k, i)];
            for j in 0..k {
                s -= l[(k, j)] * d[j] * u[(j, i)];
            }
            u[(k, i)] = s / pivot;
        }
    }
    Ok(LduFactors { l, d, u })
}

impl LduFactors {
    /// Reassemble `L D U` (multiply-back oracle for tests).
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.d.len();
        let mut ld = self.l.clone();
        for i in 0..n {
            for j in 0..n {
                ld[(i, j)] *= self.d[j];
            }
        }
        ld.mul(&self.u).expect("square factors")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;

    /// Cofactor-expansion determinant: the independent oracle.
    fn det_cofactor(m: &DenseMatrix) -> f64 {
        let n = m.rows();
        if n == 0 {
            return 1.0;
        }
        if n == 1 {
            return m[(0, 0)];
        }
        let mut acc = 0.0;
        for j in 0..n {
            let sub = m.minor_removing(&[0], &[j]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * m[(0, j)] * det_cofactor(&sub);
        }
        acc
    }

    fn random_matrix(rng: &mut RngStream, n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, n, |_, _| rng.uniform_in(-1.0, 1.0))
    }

    #[test]
    fn det_identity_and_2x2() {
        assert_eq!(DenseMatrix::identity(4).det().unwrap(), 1.0);
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!((m.det().unwrap() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn det_matches_cofactor_oracle() {
        let mut rng = RngStream::new(101);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 5);
            let d = m.det().unwrap();
            let oracle = det_cofactor(&m);
            assert!(
                (d - oracle).abs() <= 1e-12 * oracle.abs().max(1e-3),
                "lu {d} vs cofactor {oracle}"
            );
        }
    }

    #[test]
    fn det_singular_is_zero() {
        let m = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.5, 1.0, 2.0],
        ])
        .unwrap();
        let d = m.det().unwrap();
        assert!(d.abs() < 1e-14, "got {d}");
    }

    #[test]
    fn det_multiplicative() {
        let mut rng = RngStream::new(77);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 5);
            let b = random_matrix(&mut rng, 5);
            let dab = a.mul(&b).unwrap().det().unwrap();
            let prod = a.det().unwrap() * b.det().unwrap();
            assert!((dab - prod).abs() <= 1e-10 * prod.abs().max(1e-6));
        }
    }

    #[test]
    fn ldu_identity() {
        let f = ldu_biorthogonalize(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(f.l, DenseMatrix::identity(3));
        assert_eq!(f.u, DenseMatrix::identity(3));
        assert_eq!(f.d, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn ldu_rank_one_fails_at_second_pivot() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        match ldu_biorthogonalize(&m) {
            Err(Error::DegeneratePairing { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn ldu_reconstructs_diagonally_dominant() {
        let mut rng = RngStream::new(4242);
        for _ in 0..10 {
            let n = 5;
            let mut m = random_matrix(&mut rng, n);
            for i in 0..n {
                m[(i, i)] += 10.0;
            }
            let f = ldu_biorthogonalize(&m).unwrap();
            let back = f.reconstruct();
            let scale = m.max_abs();
            for i in 0..n {
                for j in 0..n {
                    assert!((back[(i, j)] - m[(i, j)]).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}
