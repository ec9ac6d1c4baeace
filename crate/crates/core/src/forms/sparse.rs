use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Compressed sparse matrix assembled from summed triplets.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    mat: SparseColMat<usize, f64>,
}

impl SparseOperator {
    /// Duplicate entries are summed.
    pub fn from_triplets(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> Self {
        let triplets: Vec<Triplet<usize, usize, f64>> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::try_new_from_triplets(rows, cols, &triplets).expect("triplet indices in range");
        Self { mat }
    }

    pub fn nrows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.mat.val().len()
    }

    pub fn as_faer(&self) -> &SparseColMat<usize, f64> {
        &self.mat
    }

    /// Stored entries as `(row, col, value)`, column by column.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let sym = self.mat.symbolic();
        let ptr = sym.col_ptr();
        let rows = sym.row_idx();
        let vals = self.mat.val();
        (0..self.ncols()).flat_map(move |c| (ptr[c]..ptr[c + 1]).map(move |k| (rows[k], c, vals[k])))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.mat.get(row, col).copied().unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols());
        let mut y = vec![0.0; self.nrows()];
        for (r, c, v) in self.entries() {
            y[r] += v * x[c];
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<(usize, usize, f64)> = self.entries().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols(), self.nrows(), &t)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols()]; self.nrows()];
        for (r, c, v) in self.entries() {
            d[r][c] += v;
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.val().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A − Aᵀ|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.entries().map(|(r, c, v)| (v - self.get(c, r)).abs()).fold(0.0, f64::max)
    }

    /// Symmetric up to `1e-12 · max|A|`.
    pub fn is_symmetric(&self) -> bool {
        self.nrows() == self.ncols() && self.max_asymmetry() <= 1e-12 * self.max_abs()
    }

    pub fn factorize(&self) -> Result<Factorization> {
        let lu = self.mat.sp_lu().map_err(|e| Error::SingularSystem(format!("{e:?}")))?;
        Ok(Factorization { lu, n: self.nrows() })
    }

    /// One-shot sparse LU solve.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.factorize()?.solve(rhs)
    }
}

/// Sparse LU factors of a square operator.
pub struct Factorization {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl Factorization {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.run(rhs, false)
    }

    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.run(rhs, true)
    }

    fn run(&self, rhs: &[f64], transpose: bool) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.n);
        let b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = if transpose { self.lu.solve_transpose(&b) } else { self.lu.solve(&b) };
        let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("non-finite solution from sparse LU".into()));
        }
        Ok(out)
    }
}
