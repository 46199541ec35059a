use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::{DenseBlock, C64};

/// Default column drop threshold, relative to the input block norm.
pub const DEFAULT_DROP_TOL: f64 = 1e-10;

/// Orthonormalizes the columns of `x` by classical Gram–Schmidt with one
/// full re-orthogonalization pass.
///
/// A column whose norm after orthogonalization is below `drop_tol · ‖x‖_F`
/// is dropped. Returns the orthonormal block and the number of retained
/// columns, or [`Error::EmptyBlock`] when nothing survives.
pub fn orth(x: &DenseBlock, drop_tol: f64) -> Result<(DenseBlock, usize)> {
    let out = orth_tracked(&[], &[x], drop_tol);
    let rank = out.kept.len();
    if rank == 0 {
        return Err(Error::EmptyBlock);
    }
    Ok((out.parts.into_iter().next().unwrap(), rank))
}

/// Result of [`orth_tracked`]: one output block per input part, plus the
/// indices of the input columns that were kept.
#[derive(Debug, Clone)]
pub(crate) struct Orthonormalized {
    pub parts: Vec<DenseBlock>,
    pub kept: Vec<usize>,
}

/// Orthonormalizes `x[0]` against the orthonormal blocks `bases[b][0]` and
/// internally, applying the identical column operations to the companion
/// parts `x[1..]` using the companions `bases[b][1..]`.
///
/// Companions carry images such as `A·x` and `B·x`, so the products of the
/// orthonormalized block come out without new matrix applications. Each
/// column is projected twice against everything accepted so far.
pub(crate) fn orth_tracked(
    bases: &[Vec<&DenseBlock>],
    x: &[&DenseBlock],
    drop_tol: f64,
) -> Orthonormalized {
    let n_parts = x.len();
    debug_assert!(bases.iter().all(|b| b.len() == n_parts));
    let n = x[0].nrows();
    let threshold = drop_tol * x[0].norm();

    let mut accepted: Vec<Vec<DVector<C64>>> = vec![Vec::new(); n_parts];
    let mut kept = Vec::new();
    for j in 0..x[0].ncols() {
        let mut w: Vec<DVector<C64>> = x.iter().map(|p| p.column(j).into_owned()).collect();
        for _pass in 0..2 {
            for base in bases {
                if base[0].ncols() == 0 {
                    continue;
                }
                let h = base[0].ad_mul(&w[0]);
                for (p, wp) in w.iter_mut().enumerate() {
                    wp.gemv(C64::new(-1.0, 0.0), base[p], &h, C64::new(1.0, 0.0));
                }
            }
            let h: Vec<C64> = accepted[0].iter().map(|q| q.dotc(&w[0])).collect();
            for (p, wp) in w.iter_mut().enumerate() {
                for (q, &hq) in accepted[p].iter().zip(&h) {
                    wp.axpy(-hq, q, C64::new(1.0, 0.0));
                }
            }
        }
        let norm = w[0].norm();
        if norm.is_nan() || norm <= threshold || norm == 0.0 {
            continue;
        }
        let inv = C64::new(1.0 / norm, 0.0);
        for (p, wp) in w.into_iter().enumerate() {
            accepted[p].push(wp * inv);
        }
        kept.push(j);
    }
    let parts = accepted
        .into_iter()
        .map(|cols| {
            if cols.is_empty() {
                DenseBlock::zeros(n, 0)
            } else {
                DenseBlock::from_columns(&cols)
            }
        })
        .collect();
    Orthonormalized { parts, kept }
}

/// `x ← x − Σ_b B_b (B_bᴴ x)` for orthonormal blocks `B_b`.
pub(crate) fn project_out(x: &mut DenseBlock, bases: &[&DenseBlock]) {
    for b in bases {
        if b.ncols() == 0 || x.ncols() == 0 {
            continue;
        }
        let h = b.ad_mul(x);
        x.gemm(C64::new(-1.0, 0.0), b, &h, C64::new(1.0, 0.0));
    }
}
