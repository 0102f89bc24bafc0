use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::TOL_FEAS;

/// Dense complex Hermitian matrix.
///
/// Construction always symmetrizes the input as `(A + Aᴴ) / 2`, so the
/// stored entries satisfy `a[i][j] == conj(a[j][i])` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

/// Eigen-decomposition `U diag(λ) Uᴴ` with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl HermitianMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Self {
        assert!(m.is_square(), "Hermitian matrix must be square");
        let adj = m.adjoint();
        let mut data = (m + adj).map(|z| z * 0.5);
        for i in 0..data.nrows() {
            data[(i, i)].im = 0.0;
        }
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim),
        }
    }

    /// `v vᴴ`.
    pub fn outer(v: &DVector<Complex64>) -> Self {
        Self::new(v * v.adjoint())
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            data[(i, i)] = Complex64::new(d, 0.0);
        }
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    /// `Re tr(self · other)`, which is the Frobenius inner product for
    /// Hermitian arguments.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// `vᴴ · self · v`.
    pub fn quadratic_form(&self, v: &DVector<Complex64>) -> f64 {
        (v.adjoint() * &self.data * v)[(0, 0)].re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            data: self.data.map(|z| z * s),
        }
    }

    /// Number of entries with nonzero magnitude.
    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|z| z.norm_sqr() > 0.0).count()
    }

    pub fn eigen(&self) -> HermitianEigen {
        let n = self.dim();
        if n == 0 {
            return HermitianEigen {
                values: Vec::new(),
                vectors: DMatrix::zeros(0, 0),
            };
        }
        let eig = SymmetricEigen::new(self.data.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        HermitianEigen { values, vectors }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().values.last().copied().unwrap_or(0.0)
    }

    /// Factor `F` with `F Fᴴ = self`, after clipping eigenvalues below zero.
    ///
    /// Eigenvalues in `[-TOL_FEAS, 0)` are treated as round-off and clipped;
    /// anything more negative is clipped too but indicates a caller bug, so
    /// it trips a debug assertion.
    pub fn psd_sqrt_factor(&self) -> DMatrix<Complex64> {
        let eig = self.eigen();
        let scale = eig.values.first().map_or(0.0, |v| v.abs()).max(1.0);
        debug_assert!(
            eig.values.last().map_or(true, |&v| v >= -TOL_FEAS * scale),
            "matrix is not PSD: min eigenvalue {:?}",
            eig.values.last()
        );
        let mut f = eig.vectors;
        for (j, &lambda) in eig.values.iter().enumerate() {
            let s = lambda.max(0.0).sqrt();
            f.column_mut(j).scale_mut(s);
        }
        f
    }

    /// Real symmetric embedding `[[Re, -Im], [Im, Re]]` of dimension `2n`.
    pub fn embed(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            for i in 0..n {
                let z = self.data[(i, j)];
                out[(i, j)] = z.re;
                out[(i + n, j + n)] = z.re;
                out[(i + n, j)] = z.im;
                out[(i, j + n)] = -z.im;
            }
        }
        out
    }

    /// Inverse of [`embed`](Self::embed), averaging the two copies of each block.
    pub fn from_embedding(y: &DMatrix<f64>) -> Self {
        assert!(y.is_square() && y.nrows() % 2 == 0);
        let n = y.nrows() / 2;
        let mut data = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                let re = 0.5 * (y[(i, j)] + y[(i + n, j + n)]);
                let im = 0.5 * (y[(i + n, j)] - y[(i, j + n)]);
                data[(i, j)] = Complex64::new(re, im);
            }
        }
        Self::new(data)
    }
}
