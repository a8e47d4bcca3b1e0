//! Minimal dense real linear algebra for small matrices.
//!
//! Everything here targets the sizes that occur in this crate (a few to a
//! few tens of rows): symmetric eigendecomposition via cyclic Jacobi
//! rotations, PSD tests, inverse square roots on the support, Cholesky
//! factorization and Gram matrices. Real arithmetic only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative eigenvalue threshold below which a mode counts as part of the
/// null space (pseudo-inverse convention).
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Off-diagonal Frobenius norm at which the Jacobi sweep stops.
const JACOBI_OFF_TOL: f64 = 1e-14;
/// Sweep cap for the Jacobi iteration.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense row-major real matrix, not necessarily square or symmetric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
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

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    /// Rank-one matrix `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m.set(i, j, ui * vj);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "vector length must match column count");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.clone();
        for x in &mut m.data {
            *x *= factor;
        }
        m
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Dense symmetric matrix with exact `entries[i][j] == entries[j][i]`,
/// enforced at construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds the matrix from `f(i, j)` evaluated once per unordered pair,
    /// so symmetry holds bit-exactly.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Builds from explicit rows, rejecting any exact asymmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        for i in 0..m.rows() {
            for j in (i + 1)..m.cols() {
                if m.get(i, j) != m.get(j, i) {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self {
            dim: m.rows(),
            data: m.data,
        })
    }

    /// Symmetrizes a nearly-symmetric product as `(m + mᵀ)/2`.
    pub fn symmetrized(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        Ok(Self::from_fn(m.rows(), |i, j| {
            0.5 * (m.get(i, j) + m.get(j, i))
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, v.len());
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Quadratic form `vᵀ M v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(&self.matvec(v), v)
    }

    /// Bilinear form `uᵀ M v`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(&self.matvec(v), u)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.clone();
        for x in &mut m.data {
            *x *= factor;
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        m
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Full spectral decomposition by cyclic Jacobi rotations.
    ///
    /// Eigenvalues come back sorted ascending; each eigenvector is sign-fixed
    /// so its largest-magnitude component is positive, which makes the
    /// decomposition deterministic. Converges when the off-diagonal Frobenius
    /// norm drops below 1e-14, with a cap of 100 sweeps.
    pub fn sym_eigen(&self) -> Result<EigenDecomposition> {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut v = Matrix::identity(n);

        let off_norm = |a: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let x = a[i * n + j];
                    s += 2.0 * x * x;
                }
            }
            s.sqrt()
        };

        let mut converged = n < 2 || off_norm(&a) < JACOBI_OFF_TOL;
        let mut sweeps = 0;
        while !converged && sweeps < JACOBI_MAX_SWEEPS {
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    // stable tangent of the rotation angle
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;

                    for k in 0..n {
                        if k == p || k == q {
                            continue;
                        }
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[p * n + k] = a[k * n + p];
                        a[k * n + q] = s * akp + c * akq;
                        a[q * n + k] = a[k * n + q];
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    a[p * n + p] = app - t * apq;
                    a[q * n + q] = aqq + t * apq;
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;

                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
            sweeps += 1;
            converged = off_norm(&a) < JACOBI_OFF_TOL;
        }
        if !converged {
            return Err(Error::NonConvergence {
                iterations: JACOBI_MAX_SWEEPS,
            });
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a[i * n + i]
                .partial_cmp(&a[j * n + j])
                .expect("eigenvalues are finite")
        });

        let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
        let mut eigenvectors = Matrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            // sign convention: largest-magnitude component positive
            let mut best = 0;
            for k in 1..n {
                if v.get(k, src).abs() > v.get(best, src).abs() {
                    best = k;
                }
            }
            let flip = if v.get(best, src) < 0.0 { -1.0 } else { 1.0 };
            for k in 0..n {
                eigenvectors.set(k, col, flip * v.get(k, src));
            }
        }

        Ok(EigenDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    /// PSD test: true iff the minimum eigenvalue is at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> Result<PsdCheck> {
        if tol.is_nan() || tol < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tol must be >= 0, got {tol}"
            )));
        }
        let eig = self.sym_eigen()?;
        let min_eigenvalue = eig.eigenvalues[0];
        Ok(PsdCheck {
            is_psd: min_eigenvalue >= -tol,
            min_eigenvalue,
        })
    }

    /// Inverse square root on the support of a PSD matrix.
    ///
    /// Eigenvalues below `rank_tol` relative to the largest eigenvalue are
    /// treated as zero; an eigenvalue below the negative of that cutoff is a
    /// not-PSD error.
    pub fn inv_sqrt_psd(&self, rank_tol: f64) -> Result<SymMatrix> {
        let eig = self.sym_eigen()?;
        let scale = eig.eigenvalues.last().copied().unwrap_or(0.0).abs();
        let cutoff = rank_tol * scale;
        let min = eig.eigenvalues[0];
        if min < -cutoff {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
        Ok(eig.map_eigenvalues(|l| if l <= cutoff { 0.0 } else { 1.0 / l.sqrt() }))
    }

    /// Lower-triangular Cholesky factor `L` with `self = L Lᵀ`.
    ///
    /// Tolerates positive-semidefinite inputs: a pivot within `tol` of zero
    /// zeroes out its column, so rank-deficient Gram matrices factor cleanly.
    /// A pivot below `-tol` is a not-positive-definite error.
    pub fn cholesky_psd(&self, tol: f64) -> Result<Matrix> {
        let n = self.dim;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut pivot = self.get(j, j);
            for k in 0..j {
                pivot -= l.get(j, k) * l.get(j, k);
            }
            if pivot <= tol {
                if pivot < -tol {
                    return Err(Error::NotPositiveDefinite { pivot: j });
                }
                continue; // zero column: semidefinite direction
            }
            let ljj = pivot.sqrt();
            l.set(j, j, ljj);
            for i in (j + 1)..n {
                let mut acc = self.get(i, j);
                for k in 0..j {
                    acc -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, acc / ljj);
            }
        }
        Ok(l)
    }

    /// Strict Cholesky for positive-definite matrices.
    pub fn cholesky(&self) -> Result<Matrix> {
        let n = self.dim;
        let scale = (0..n).fold(1.0f64, |acc, i| acc.max(self.get(i, i).abs()));
        let tol = 1e-12 * scale;
        let l = self.cholesky_psd(tol)?;
        for j in 0..n {
            if l.get(j, j) == 0.0 {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
        }
        Ok(l)
    }
}

/// Result of [`SymMatrix::is_psd`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// Spectral decomposition of a symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    /// Eigenvalues sorted ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues` order.
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvector for the given index as an owned column.
    pub fn eigenvector(&self, idx: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|k| self.eigenvectors.get(k, idx))
            .collect()
    }

    /// Assembles `Σ f(λ_i) v_i v_iᵀ`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for (idx, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            if fl == 0.0 {
                continue;
            }
            let v = self.eigenvector(idx);
            for i in 0..n {
                for j in 0..n {
                    out.set(i, j, out.get(i, j) + fl * v[i] * v[j]);
                }
            }
        }
        SymMatrix::symmetrized(&out).expect("square by construction")
    }

    /// Reassembles the original matrix, `Σ λ_i v_i v_iᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        self.map_eigenvalues(|l| l)
    }
}

/// Gram matrix of a vector family: `entries[i][j] = ⟨v_i, v_j⟩`.
pub fn gram(vectors: &[Vec<f64>]) -> Result<SymMatrix> {
    let n = vectors.len();
    let dim = vectors.first().map_or(0, Vec::len);
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    Ok(SymMatrix::from_fn(n, |i, j| dot(&vectors[i], &vectors[j])))
}

/// Plain dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Returns `v / ||v||`, or `None` for a numerically zero vector.
pub fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    if n < 1e-12 {
        return None;
    }
    Some(v.iter().map(|x| x / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Test-only determinant by cofactor expansion, independent of the
    /// Jacobi path. Only sane for n <= 6.
    fn det_cofactor(m: &Matrix) -> f64 {
        let n = m.rows();
        assert_eq!(n, m.cols());
        if n == 1 {
            return m.get(0, 0);
        }
        let mut acc = 0.0;
        let mut sign = 1.0;
        for col in 0..n {
            let mut minor = Matrix::zeros(n - 1, n - 1);
            for i in 1..n {
                let mut jj = 0;
                for j in 0..n {
                    if j == col {
                        continue;
                    }
                    minor.set(i - 1, jj, m.get(i, j));
                    jj += 1;
                }
            }
            acc += sign * m.get(0, col) * det_cofactor(&minor);
            sign = -sign;
        }
        acc
    }

    fn char_poly_at(m: &SymMatrix, lambda: f64) -> f64 {
        let n = m.dim();
        let mut shifted = m.to_matrix();
        for i in 0..n {
            shifted.set(i, i, shifted.get(i, i) - lambda);
        }
        det_cofactor(&shifted)
    }

    fn equal_overlap_gram(n: usize, s: f64) -> SymMatrix {
        SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { s })
    }

    #[test]
    fn eigen_identity() {
        let eig = SymMatrix::identity(3).sym_eigen().unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn eigen_two_by_two_overlap() {
        // [[1, s], [s, 1]] has eigenvalues 1 -+ s
        let eig = equal_overlap_gram(2, 0.5).sym_eigen().unwrap();
        assert!((eig.eigenvalues[0] - 0.5).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn eigen_equal_overlap_gram_matches_characteristic_polynomial() {
        // expected spectrum: 1 - s (x3) and 1 + (N-1)s, for N=4, s=0.3
        let g = equal_overlap_gram(4, 0.3);
        let eig = g.sym_eigen().unwrap();
        let low = 0.7;
        let high = 1.9;
        assert!(char_poly_at(&g, low).abs() < 1e-12);
        assert!(char_poly_at(&g, high).abs() < 1e-12);
        let low_count = eig
            .eigenvalues
            .iter()
            .filter(|l| (*l - low).abs() < 1e-12)
            .count();
        let high_count = eig
            .eigenvalues
            .iter()
            .filter(|l| (*l - high).abs() < 1e-12)
            .count();
        assert_eq!(low_count, 3);
        assert_eq!(high_count, 1);
    }

    #[test]
    fn eigen_reconstruction_and_orthonormality() {
        let g = equal_overlap_gram(6, 0.45);
        let eig = g.sym_eigen().unwrap();
        assert!(eig.reconstruct().max_abs_diff(&g) < 1e-12);
        let vt_v = eig.eigenvectors.transpose().matmul(&eig.eigenvectors);
        assert!(vt_v.max_abs_diff(&Matrix::identity(6)) < 1e-12);
    }

    #[test]
    fn eigen_handles_the_largest_intended_dimension() {
        // dense 20x20, the top of the size range this kernel targets
        let mut rng = crate::rng::RngStream::from_seed(555);
        let n = 20;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = 2.0 * rng.next_f64() - 1.0;
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        let m = SymMatrix::from_rows(&rows).unwrap();
        let eig = m.sym_eigen().unwrap();
        assert!(eig.reconstruct().max_abs_diff(&m) < 1e-12);
        let vt_v = eig.eigenvectors.transpose().matmul(&eig.eigenvectors);
        assert!(vt_v.max_abs_diff(&Matrix::identity(n)) < 1e-12);
    }

    #[test]
    fn psd_check_examples() {
        let id = SymMatrix::identity(2).is_psd(0.0).unwrap();
        assert!(id.is_psd);
        assert!((id.min_eigenvalue - 1.0).abs() < 1e-14);

        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let check = m.is_psd(1e-10).unwrap();
        assert!(!check.is_psd);
        assert!((check.min_eigenvalue + 1.0).abs() < 1e-14);

        assert!(m.is_psd(-1.0).is_err());
    }

    #[test]
    fn inv_sqrt_diagonal() {
        let id = SymMatrix::identity(3);
        assert!(id.inv_sqrt_psd(DEFAULT_RANK_TOL).unwrap().max_abs_diff(&id) < 1e-15);

        let d = SymMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = d.inv_sqrt_psd(DEFAULT_RANK_TOL).unwrap();
        let expected = SymMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(r.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn inv_sqrt_of_two_state_mixture_matches_spectral_form() {
        // rho = (1/2) (|a><a| + |b><b|) for unit vectors with overlap s = 0.5;
        // eigenvalues (1 -+ s)/2 with eigenvectors along a -+ b.
        let s: f64 = 0.5;
        let a = vec![1.0, 0.0];
        let b = vec![s, (1.0 - s * s).sqrt()];
        let mut mixture = Matrix::outer(&a, &a).scaled(0.5);
        mixture.add_assign(&Matrix::outer(&b, &b).scaled(0.5));
        let rho = SymMatrix::symmetrized(&mixture).unwrap();

        let r = rho.inv_sqrt_psd(DEFAULT_RANK_TOL).unwrap();

        let plus = normalized(&[a[0] + b[0], a[1] + b[1]]).unwrap();
        let minus = normalized(&[a[0] - b[0], a[1] - b[1]]).unwrap();
        let lp = (1.0 + s) / 2.0;
        let lm = (1.0 - s) / 2.0;
        let mut expected = Matrix::outer(&plus, &plus).scaled(1.0 / lp.sqrt());
        expected.add_assign(&Matrix::outer(&minus, &minus).scaled(1.0 / lm.sqrt()));
        assert!(r.to_matrix().max_abs_diff(&expected) < 1e-12);

        // R rho R is the projector onto the support (identity here)
        let rrr = r
            .to_matrix()
            .matmul(&rho.to_matrix())
            .matmul(&r.to_matrix());
        assert!(rrr.max_abs_diff(&Matrix::identity(2)) < 1e-10);
    }

    #[test]
    fn inv_sqrt_rejects_indefinite() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            m.inv_sqrt_psd(DEFAULT_RANK_TOL),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn inv_sqrt_rank_deficient_uses_pseudo_inverse() {
        // rank-1 projector scaled by 4: inverse sqrt on support is 0.5 * projector
        let u = normalized(&[3.0, 4.0]).unwrap();
        let m = SymMatrix::symmetrized(&Matrix::outer(&u, &u).scaled(4.0)).unwrap();
        let r = m.inv_sqrt_psd(DEFAULT_RANK_TOL).unwrap();
        let expected = Matrix::outer(&u, &u).scaled(0.5);
        assert!(r.to_matrix().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn gram_examples() {
        let basis = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!(gram(&basis).unwrap().max_abs_diff(&SymMatrix::identity(3)) < 1e-15);

        let bad = vec![vec![1.0, 0.0], vec![1.0, 0.0, 0.0]];
        assert!(matches!(gram(&bad), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cholesky_round_trip_and_failure() {
        let g = equal_overlap_gram(4, 0.3);
        let l = g.cholesky().unwrap();
        let back = l.matmul(&l.transpose());
        assert!(back.max_abs_diff(&g.to_matrix()) < 1e-14);

        let indefinite = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(indefinite.cholesky().is_err());
    }

    #[test]
    fn cholesky_psd_handles_rank_deficiency() {
        // all-ones Gram: rank one, rows of L collapse onto the first axis
        let ones = SymMatrix::from_fn(3, |_, _| 1.0);
        let l = ones.cholesky_psd(1e-12).unwrap();
        let back = l.matmul(&l.transpose());
        assert!(back.max_abs_diff(&ones.to_matrix()) < 1e-12);
        for i in 0..3 {
            assert!((l.get(i, 0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_constructor_rejects_asymmetry() {
        let rows = vec![vec![1.0, 0.5], vec![0.5 + 1e-16, 1.0]];
        assert!(SymMatrix::from_rows(&rows).is_err());
    }

    proptest! {
        #[test]
        fn eigen_reconstructs_random_symmetric(values in proptest::collection::vec(-2.0f64..2.0, 15)) {
            // 5x5 symmetric matrix from the 15 upper-triangle entries
            let mut it = values.into_iter();
            let mut entries = std::collections::BTreeMap::new();
            for i in 0..5usize {
                for j in i..5usize {
                    entries.insert((i, j), it.next().unwrap());
                }
            }
            let m = SymMatrix::from_fn(5, |i, j| entries[&(i.min(j), i.max(j))]);
            let eig = m.sym_eigen().unwrap();
            prop_assert!(eig.reconstruct().max_abs_diff(&m) < 1e-12);
            let vt_v = eig.eigenvectors.transpose().matmul(&eig.eigenvectors);
            prop_assert!(vt_v.max_abs_diff(&Matrix::identity(5)) < 1e-12);
        }

        #[test]
        fn inv_sqrt_commutes_with_input(values in proptest::collection::vec(-1.0f64..1.0, 10)) {
            // PSD 4x4 built as B Bᵀ + small ridge
            let mut it = values.into_iter();
            let mut b = Matrix::zeros(4, 4);
            for i in 0..4 {
                for j in 0..4 {
                    if i >= j {
                        b.set(i, j, it.next().unwrap_or(0.1));
                    }
                }
            }
            let mut psd = b.matmul(&b.transpose());
            for i in 0..4 {
                psd.set(i, i, psd.get(i, i) + 0.05);
            }
            let m = SymMatrix::symmetrized(&psd).unwrap();
            let r = m.inv_sqrt_psd(DEFAULT_RANK_TOL).unwrap().to_matrix();
            let mm = m.to_matrix();
            let comm = r.matmul(&mm).sub(&mm.matmul(&r));
            prop_assert!(comm.max_abs() < 1e-10);
        }
    }
}
