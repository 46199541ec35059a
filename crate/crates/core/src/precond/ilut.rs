use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;
use crate::C64;

/// Incomplete factors `L·U ≈ A − σB`. `L` is unit lower triangular with its
/// unit diagonal stored explicitly; `U` is upper triangular with nonzero diagonal.
#[derive(Debug, Clone)]
pub struct IluFactors {
    pub l: SparseMatrix,
    pub u: SparseMatrix,
    pub fill_tol: f64,
}

const PIVOT_FLOOR: f64 = 1e-12;

impl IluFactors {
    /// Row-wise ILUT. Entries below `fill_tol` times the 2-norm of the
    /// original row are dropped; the diagonal is always kept, and pivots
    /// smaller than `1e-12` times the row norm are lifted to that magnitude.
    pub fn build(m: &SparseMatrix, fill_tol: f64) -> Result<Self> {
        let n = m.n_rows();
        if !m.is_square() {
            return Err(Error::PreconditionerBuild("ILUT needs a square matrix".into()));
        }
        if fill_tol.is_nan() || fill_tol < 0.0 {
            return Err(Error::PreconditionerBuild(format!("invalid drop tolerance {fill_tol}")));
        }
        let (mut l_ptr, mut l_idx, mut l_val) = (vec![0usize], Vec::<usize>::new(), Vec::<C64>::new());
        let (mut u_ptr, mut u_idx, mut u_val) = (vec![0usize], Vec::<usize>::new(), Vec::<C64>::new());
        // start of the strictly upper part of each U row (after the diagonal)
        let mut u_diag_pos: Vec<usize> = Vec::with_capacity(n);

        let zero = C64::new(0.0, 0.0);
        let mut work = vec![zero; n];
        let mut used = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut lower: BTreeSet<usize> = BTreeSet::new();

        for i in 0..n {
            let norm = m.row_norm(i);
            if norm == 0.0 {
                return Err(Error::PreconditionerBuild(format!("row {i} of the shifted matrix is empty")));
            }
            let drop = fill_tol * norm;
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                work[j] = v;
                used[j] = true;
                touched.push(j);
                if j < i {
                    lower.insert(j);
                }
            }
            let mut row_l: Vec<(usize, C64)> = Vec::new();
            while let Some(k) = lower.pop_first() {
                let wk = work[k] / u_val[u_diag_pos[k]];
                if wk.norm() < drop || wk == zero {
                    work[k] = zero;
                    continue;
                }
                work[k] = wk;
                row_l.push((k, wk));
                for p in u_diag_pos[k] + 1..u_ptr[k + 1] {
                    let j = u_idx[p];
                    if !used[j] {
                        used[j] = true;
                        touched.push(j);
                        if j < i {
                            lower.insert(j);
                        }
                    }
                    work[j] -= wk * u_val[p];
                }
            }
            for (k, v) in row_l {
                l_idx.push(k);
                l_val.push(v);
            }
            l_idx.push(i);
            l_val.push(C64::new(1.0, 0.0));
            l_ptr.push(l_idx.len());

            let mut pivot = if used[i] { work[i] } else { zero };
            if pivot.norm() < PIVOT_FLOOR * norm {
                let phase = if pivot == zero { C64::new(1.0, 0.0) } else { pivot / pivot.norm() };
                pivot = phase * (PIVOT_FLOOR * norm);
            }
            u_diag_pos.push(u_idx.len());
            u_idx.push(i);
            u_val.push(pivot);
            let mut upper: Vec<usize> = touched.iter().copied().filter(|&j| j > i).collect();
            upper.sort_unstable();
            for j in upper {
                let v = work[j];
                if v.norm() >= drop && v != zero {
                    u_idx.push(j);
                    u_val.push(v);
                }
            }
            u_ptr.push(u_idx.len());

            for &j in &touched {
                work[j] = zero;
                used[j] = false;
            }
            touched.clear();
        }
        Ok(Self {
            l: SparseMatrix::from_csr_unchecked(n, n, l_ptr, l_idx, l_val),
            u: SparseMatrix::from_csr_unchecked(n, n, u_ptr, u_idx, u_val),
            fill_tol,
        })
    }

    /// Solves `L·U·x = b` in place.
    pub fn solve_in_place(&self, x: &mut [C64]) {
        let n = x.len();
        for i in 0..n {
            let (cols, vals) = self.l.row(i);
            let mut s = x[i];
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    s -= v * x[j];
                }
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let (cols, vals) = self.u.row(i);
            let mut s = x[i];
            for (&j, &v) in cols.iter().zip(vals).skip(1) {
                s -= v * x[j];
            }
            x[i] = s / vals[0];
        }
    }
}
