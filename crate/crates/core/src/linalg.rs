//! Dense linear algebra: row-major matrices, orthonormal bases, and dense
//! Johnson-Lindenstrauss projections.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Residual norm under which Gram-Schmidt declares the input rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: "matrix row",
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self · x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    /// `selfᵀ · x`, accumulating over rows in ascending order.
    pub fn matvec_transposed(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "transposed matrix-vector product",
                expected: self.rows,
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += m * xr;
            }
        }
        Ok(out)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
}

/// A set of mutually orthonormal vectors in `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalBasis {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl OrthonormalBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<Vec<f64>> {
        self.vectors
    }

    /// Pairwise inner products of the basis vectors.
    pub fn gram(&self) -> Matrix {
        let n = self.vectors.len();
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                g.set(i, j, dot(&self.vectors[i], &self.vectors[j]));
            }
        }
        g
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
pub fn gram_schmidt(vectors: &[Vec<f64>]) -> Result<OrthonormalBasis> {
    let dim = match vectors.first() {
        Some(v) => v.len(),
        None => return Err(Error::Empty("gram_schmidt input")),
    };
    if vectors.len() > dim {
        return Err(Error::TooManyVectors {
            requested: vectors.len(),
            dim,
        });
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "gram_schmidt vector",
                expected: dim,
                found: v.len(),
            });
        }
        let mut w = v.clone();
        for _pass in 0..2 {
            for q in &basis {
                let proj = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= proj * qi;
                }
            }
        }
        let residual = norm(&w);
        if residual.is_nan() || residual < RANK_TOLERANCE {
            return Err(Error::RankDeficient { index, residual });
        }
        for wi in &mut w {
            *wi /= residual;
        }
        basis.push(w);
    }
    Ok(OrthonormalBasis {
        dim,
        vectors: basis,
    })
}

/// `n` orthonormal vectors in `R^dim`, from Gram-Schmidt on a seeded Gaussian matrix.
pub fn random_orthonormal_basis(n: usize, dim: usize, seed: u64) -> Result<OrthonormalBasis> {
    if dim == 0 {
        return Err(Error::InvalidArgument("basis dimension must be at least 1".into()));
    }
    if n > dim {
        return Err(Error::TooManyVectors { requested: n, dim });
    }
    if n == 0 {
        return Ok(OrthonormalBasis {
            dim,
            vectors: Vec::new(),
        });
    }
    let mut rng = rng::seeded(seed);
    let raw: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    gram_schmidt(&raw)
}

/// Dense JLT: a `target_dim × source_dim` matrix of i.i.d. `N(0, 1/target_dim)` entries.
pub fn jlt_create(source_dim: usize, target_dim: usize, seed: u64) -> Result<Matrix> {
    if target_dim == 0 {
        return Err(Error::InvalidArgument("JLT target dimension must be at least 1".into()));
    }
    if source_dim <= target_dim {
        return Err(Error::InvalidArgument(alloc::format!(
            "JLT source dimension {source_dim} must exceed target dimension {target_dim}"
        )));
    }
    let scale = 1.0 / libm::sqrt(target_dim as f64);
    let mut rng = rng::seeded(seed);
    let data = (0..source_dim * target_dim)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g * scale
        })
        .collect();
    Ok(Matrix {
        rows: target_dim,
        cols: source_dim,
        data,
    })
}

pub fn jlt_apply(transform: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    transform.matvec(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn assert_identity(g: &Matrix, tol: f64) {
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - expected).abs() < tol, "gram[{i}][{j}] = {}", g.get(i, j));
            }
        }
    }

    #[test]
    fn single_random_vector_is_unit() {
        let b = random_orthonormal_basis(1, 3, 123).unwrap();
        assert!((norm(&b.vectors()[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_random_basis_is_orthonormal() {
        assert_identity(&random_orthonormal_basis(3, 3, 5).unwrap().gram(), 1e-10);
        assert_identity(&random_orthonormal_basis(4, 8, 42).unwrap().gram(), 1e-10);
    }

    #[test]
    fn random_basis_rejects_overcomplete() {
        assert!(matches!(
            random_orthonormal_basis(4, 3, 0),
            Err(Error::TooManyVectors { requested: 4, dim: 3 })
        ));
    }

    #[test]
    fn random_basis_is_deterministic() {
        let a = random_orthonormal_basis(5, 9, 77).unwrap();
        let b = random_orthonormal_basis(5, 9, 77).unwrap();
        for (x, y) in a.vectors().iter().zip(b.vectors()) {
            for (p, q) in x.iter().zip(y) {
                assert_eq!(p.to_bits(), q.to_bits());
            }
        }
        assert_ne!(a, random_orthonormal_basis(5, 9, 78).unwrap());
    }

    #[test]
    fn gram_schmidt_axis_aligned() {
        let b = gram_schmidt(&[vec![2.0, 0.0], vec![0.0, 5.0]]).unwrap();
        assert_eq!(b.vectors(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn gram_schmidt_hand_computed() {
        let b = gram_schmidt(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let expected = [[s, s], [s, -s]];
        for (v, e) in b.vectors().iter().zip(expected) {
            for (a, b) in v.iter().zip(e) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gram_schmidt_rejects_dependent_inputs() {
        let err = gram_schmidt(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { index: 1, .. }));
    }

    #[test]
    fn gram_schmidt_near_dependent_stays_orthogonal() {
        let eps = 1e-9;
        let b = gram_schmidt(&[vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0 + eps], vec![1.0, 1.0 + eps, 1.0]]).unwrap();
        assert_identity(&b.gram(), 1e-10);
    }

    #[test]
    fn jlt_shape_and_zero() {
        let t = jlt_create(100, 32, 0).unwrap();
        assert_eq!((t.rows(), t.cols()), (32, 100));
        assert!(jlt_apply(&t, &[0.0; 100]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jlt_rejects_non_reducing_dims() {
        assert!(jlt_create(8, 8, 0).is_err());
        assert!(jlt_create(8, 0, 0).is_err());
    }

    #[test]
    fn jlt_of_basis_vector_is_column() {
        let t = jlt_create(3, 2, 7).unwrap();
        assert_eq!(jlt_apply(&t, &[1.0, 0.0, 0.0]).unwrap(), t.column(0));
    }

    #[test]
    fn identity_transform() {
        let t = Matrix::identity(2);
        assert_eq!(jlt_apply(&t, &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn jlt_dimension_mismatch() {
        let t = jlt_create(5, 2, 1).unwrap();
        assert!(matches!(
            jlt_apply(&t, &[1.0; 4]),
            Err(Error::DimensionMismatch { expected: 5, found: 4, .. })
        ));
    }

    #[test]
    fn transposed_matvec_matches_explicit_transpose() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(m.matvec_transposed(&[1.0, 0.0, -1.0]).unwrap(), vec![-4.0, -4.0]);
        assert_eq!(m.matvec(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0, 11.0]);
    }

    #[test]
    fn matrix_rejects_non_finite() {
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![1.0]).is_err());
    }
}
