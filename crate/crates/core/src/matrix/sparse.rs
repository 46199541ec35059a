use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::{DenseBlock, C64};

/// Compressed sparse row matrix of complex scalars.
///
/// Column indices are strictly increasing within each row and all stored
/// values are finite. Construction goes through [`SparseMatrix::from_triplets`],
/// which sums duplicates and enforces both properties.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets (0-based). Duplicate
    /// positions are summed; entries that sum to exactly zero are kept.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(i, j, v) in &entries {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite value at ({i}, {j})")));
            }
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n_rows, n_cols, row_ptr, col_idx, values })
    }

    /// Assembles directly from CSR arrays that already satisfy the invariants.
    pub(crate) fn from_csr_unchecked(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<C64>,
    ) -> Self {
        debug_assert_eq!(row_ptr.len(), n_rows + 1);
        debug_assert_eq!(col_idx.len(), values.len());
        Self { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Stores every nonzero of a dense matrix.
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let trip = (0..m.nrows()).flat_map(|i| {
            (0..m.ncols()).filter_map(move |j| {
                let v = m[(i, j)];
                (v != C64::new(0.0, 0.0)).then_some((i, j, v))
            })
        });
        Self::from_triplets(m.nrows(), m.ncols(), trip).expect("dense input is finite")
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut d = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Iterates `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).1.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self + alpha * other`; both must have the same shape.
    pub fn add_scaled(&self, alpha: C64, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch {
                context: "sparse add",
                expected: self.n_rows,
                found: other.n_rows,
            });
        }
        let trip = self.iter().chain(other.iter().map(|(i, j, v)| (i, j, alpha * v)));
        SparseMatrix::from_triplets(self.n_rows, self.n_cols, trip)
    }

    /// `y = M x` for a single vector.
    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = C64::new(0.0, 0.0);
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    /// Sparse matrix times dense block. Columns are computed independently
    /// (and in parallel for wide enough blocks), so each output column is
    /// bitwise identical to a single-vector product.
    pub fn spmm(&self, x: &DenseBlock) -> Result<DenseBlock> {
        if x.nrows() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "spmm",
                expected: self.n_cols,
                found: x.nrows(),
            });
        }
        let mut out = DenseBlock::zeros(self.n_rows, x.ncols());
        if x.ncols() == 0 || self.n_rows == 0 {
            return Ok(out);
        }
        let n_in = self.n_cols;
        let work = self.nnz() * x.ncols();
        let input = x.as_slice();
        if x.ncols() > 1 && work > 1 << 16 {
            out.as_mut_slice()
                .par_chunks_mut(self.n_rows)
                .enumerate()
                .for_each(|(c, col)| self.mul_vec_into(&input[c * n_in..(c + 1) * n_in], col));
        } else {
            for (c, col) in out.as_mut_slice().chunks_mut(self.n_rows).enumerate() {
                self.mul_vec_into(&input[c * n_in..(c + 1) * n_in], col);
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`SparseMatrix::spmm`].
pub fn spmm(m: &SparseMatrix, x: &DenseBlock) -> Result<DenseBlock> {
    m.spmm(x)
}
