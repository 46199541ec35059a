//! Blocks carried together with their images under `A` and `B`, and the
//! subspace construction shared by the drivers.

use nalgebra::DMatrix;

use crate::dense::{orth_tracked, DEFAULT_DROP_TOL};
use crate::error::{Error, Result};
use crate::matrix::PencilOperator;
use crate::precond::{apply_projected_prec_multi, Preconditioner};
use crate::{DenseBlock, C64};

/// Looser drop tolerance for `P`: its images are formed by linear
/// combination, so strongly cancelling columns would carry inaccurate images.
pub(crate) const P_DROP_TOL: f64 = 1e-6;

/// A block `x` with `ax = A·x` and `bx = B·x` (`bx = x` when `B = I`).
#[derive(Debug, Clone)]
pub(crate) struct Tracked {
    pub x: DenseBlock,
    pub ax: DenseBlock,
    pub bx: DenseBlock,
}

impl Tracked {
    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn parts(&self) -> Vec<&DenseBlock> {
        vec![&self.x, &self.ax, &self.bx]
    }

    pub fn columns(&self, start: usize, count: usize) -> Tracked {
        Tracked {
            x: self.x.columns(start, count).into_owned(),
            ax: self.ax.columns(start, count).into_owned(),
            bx: self.bx.columns(start, count).into_owned(),
        }
    }

    /// `(A − σB)·x`.
    pub fn shifted(&self, sigma: C64) -> DenseBlock {
        &self.ax - &self.bx * sigma
    }

    /// `[Z_1 … Z_b]·y` for the horizontally stacked blocks.
    pub fn combine(blocks: &[&Tracked], y: &DMatrix<C64>) -> Tracked {
        let n = blocks[0].x.nrows();
        let mut out = Tracked {
            x: DenseBlock::zeros(n, y.ncols()),
            ax: DenseBlock::zeros(n, y.ncols()),
            bx: DenseBlock::zeros(n, y.ncols()),
        };
        let one = C64::new(1.0, 0.0);
        let mut row = 0;
        for b in blocks {
            let c = b.ncols();
            if c == 0 {
                continue;
            }
            let yb = y.rows(row, c);
            out.x.gemm(one, &b.x, &yb, one);
            out.ax.gemm(one, &b.ax, &yb, one);
            out.bx.gemm(one, &b.bx, &yb, one);
            row += c;
        }
        out
    }

    /// Scales every column of `x` to unit norm, and the images alike.
    pub fn normalize_columns(&mut self) {
        for j in 0..self.ncols() {
            let nrm = self.x.column(j).norm();
            if nrm > 0.0 {
                let s = C64::new(1.0 / nrm, 0.0);
                self.x.column_mut(j).scale_mut(1.0 / nrm);
                self.ax.column_mut(j).iter_mut().for_each(|z| *z *= s);
                self.bx.column_mut(j).iter_mut().for_each(|z| *z *= s);
            }
        }
    }
}

pub(crate) fn hcat(blocks: &[&DenseBlock]) -> DenseBlock {
    let n = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DenseBlock::zeros(n, cols);
    let mut c = 0;
    for b in blocks {
        out.columns_mut(c, b.ncols()).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Column 2-norms.
pub(crate) fn column_norms(x: &DenseBlock) -> Vec<f64> {
    x.column_iter().map(|c| c.norm()).collect()
}

/// Operator access plus the work counters of one solve.
pub(crate) struct Ctx<'a, O: PencilOperator + ?Sized> {
    pub op: &'a O,
    pub t: &'a Preconditioner,
    pub right_projector: bool,
    pub matvecs: usize,
    pub precs: usize,
}

impl<'a, O: PencilOperator + ?Sized> Ctx<'a, O> {
    pub fn new(op: &'a O, t: &'a Preconditioner, right_projector: bool) -> Result<Self> {
        if t.dim() != op.dim() {
            return Err(Error::DimensionMismatch { context: "preconditioner", expected: op.dim(), found: t.dim() });
        }
        Ok(Self { op, t, right_projector, matvecs: 0, precs: 0 })
    }

    pub fn standard(&self) -> bool {
        self.op.is_standard()
    }

    pub fn products(&mut self, x: DenseBlock) -> Tracked {
        self.matvecs += x.ncols();
        let ax = self.op.apply_a(&x);
        let bx = if self.standard() { x.clone() } else { self.op.apply_b(&x) };
        Tracked { x, ax, bx }
    }

    /// `(I − VVᴴ)·T·(I − QQᴴ)·r`, including any deflation bases.
    pub fn precondition(&mut self, r: &DenseBlock, v: &DenseBlock, q: &DenseBlock) -> Result<DenseBlock> {
        self.precs += r.ncols();
        let mut vs = vec![v];
        let mut qs = vec![q];
        if let Some((v0, q0)) = self.op.deflation() {
            vs.insert(0, v0);
            qs.insert(0, q0);
        }
        apply_projected_prec_multi(self.t, &vs, &qs, r, self.right_projector)
    }
}

/// Submatrix of `m` at the given row/column indices.
fn select(m: &DMatrix<C64>, idx: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// The trial blocks beyond `V`: `W`, `S_1 … S_l` and possibly `P`.
pub(crate) struct Expansion {
    pub blocks: Vec<Tracked>,
}

/// Builds `W = orth(T_L·resid)`, the chain `S_l = orth(T_L(A S_{l−1} M_B − B S_{l−1} M_A))`
/// and the orthogonalized `P`, all mutually orthonormal and orthogonal to `V`.
///
/// `resid`, `m_a`, `m_b` refer to the active (unlocked) columns only.
#[allow(clippy::too_many_arguments)]
pub(crate) fn expand<O: PencilOperator + ?Sized>(
    ctx: &mut Ctx<'_, O>,
    v: &Tracked,
    qproj: &DenseBlock,
    resid: &DenseBlock,
    m_a: &DMatrix<C64>,
    m_b: &DMatrix<C64>,
    m: usize,
    p: Option<&Tracked>,
) -> Result<Expansion> {
    let scale = v.ax.norm() + v.bx.norm();
    if resid.ncols() == 0 || resid.norm() <= 1e-14 * scale {
        return Err(Error::Stagnation);
    }
    let raw = ctx.precondition(resid, &v.x, qproj)?;
    let w = orth_tracked(&[vec![&v.x]], &[&raw], DEFAULT_DROP_TOL);
    if w.kept.is_empty() {
        return Err(Error::Stagnation);
    }
    let mut idx = w.kept;
    let mut blocks = vec![ctx.products(w.parts.into_iter().next().unwrap())];

    for _ in 0..m {
        let prev = blocks.last().unwrap();
        let ma = select(m_a, &idx);
        let mb = select(m_b, &idx);
        let r = &prev.ax * mb - &prev.bx * ma;
        let raw = ctx.precondition(&r, &v.x, qproj)?;
        let mut bases = vec![vec![&v.x]];
        bases.extend(blocks.iter().map(|b| vec![&b.x]));
        let s = orth_tracked(&bases, &[&raw], DEFAULT_DROP_TOL);
        if s.kept.is_empty() {
            log::debug!("S block collapsed; expansion stops at {} blocks", blocks.len() - 1);
            break;
        }
        idx = s.kept.iter().map(|&i| idx[i]).collect();
        let s = ctx.products(s.parts.into_iter().next().unwrap());
        blocks.push(s);
    }

    if let Some(p) = p.filter(|p| p.ncols() > 0) {
        let mut bases = vec![v.parts()];
        bases.extend(blocks.iter().map(|b| b.parts()));
        let out = orth_tracked(&bases, &p.parts(), P_DROP_TOL);
        if !out.kept.is_empty() {
            let mut it = out.parts.into_iter();
            blocks.push(Tracked { x: it.next().unwrap(), ax: it.next().unwrap(), bx: it.next().unwrap() });
        }
    }
    Ok(Expansion { blocks })
}

/// `U = [Q, orth((A − σB)·[W, S, P])]` with the new part orthogonal to `Q`.
pub(crate) fn test_space(q: &DenseBlock, blocks: &[Tracked], sigma: C64) -> Result<DenseBlock> {
    let shifted: Vec<DenseBlock> = blocks.iter().map(|b| b.shifted(sigma)).collect();
    let refs: Vec<&DenseBlock> = shifted.iter().collect();
    let x = hcat(&refs);
    let out = orth_tracked(&[vec![q]], &[&x], DEFAULT_DROP_TOL);
    if out.kept.len() < x.ncols() {
        return Err(Error::SingularPencil(format!(
            "(A − σB) maps the trial space onto a space of lower dimension ({} of {} directions); \
             σ is probably an eigenvalue or the pencil is singular",
            q.ncols() + out.kept.len(),
            q.ncols() + x.ncols()
        )));
    }
    Ok(hcat(&[q, &out.parts[0]]))
}

/// `orth(x)` requiring full column rank; a rank drop means `A − σB` is singular on the block.
pub(crate) fn orth_or_singular(x: &DenseBlock) -> Result<DenseBlock> {
    let singular = || {
        Error::SingularPencil(
            "(A − σB) is rank deficient on the current block; σ is probably an eigenvalue or the pencil is singular".into(),
        )
    };
    let (q, rank) = crate::dense::orth(x, DEFAULT_DROP_TOL).map_err(|_| singular())?;
    if rank < x.ncols() {
        return Err(singular());
    }
    Ok(q)
}

/// `(UᴴAZ, UᴴBZ)` for `Z` the stacked blocks.
pub(crate) fn projected_pair(u: &DenseBlock, z: &[&Tracked]) -> (DMatrix<C64>, DMatrix<C64>) {
    let az: Vec<&DenseBlock> = z.iter().map(|b| &b.ax).collect();
    let bz: Vec<&DenseBlock> = z.iter().map(|b| &b.bx).collect();
    (u.ad_mul(&hcat(&az)), u.ad_mul(&hcat(&bz)))
}

/// `‖ZᴴZ − I‖_F` for the stacked blocks.
pub(crate) fn gram_error(z: &[&Tracked]) -> f64 {
    let xs: Vec<&DenseBlock> = z.iter().map(|b| &b.x).collect();
    let zz = hcat(&xs);
    let s = zz.ncols();
    (zz.ad_mul(&zz) - DMatrix::<C64>::identity(s, s)).norm()
}

/// Relative violation of `(A − σB)V = Q(R_A − σR_B)`, computed with fresh products.
pub(crate) fn schur_identity_error<O: PencilOperator + ?Sized>(
    op: &O,
    v: &DenseBlock,
    q: &DenseBlock,
    r_a: &DMatrix<C64>,
    r_b: &DMatrix<C64>,
    sigma: C64,
    shifted_norm: f64,
) -> f64 {
    let av = op.apply_a(v);
    let bv = if op.is_standard() { v.clone() } else { op.apply_b(v) };
    let lhs = av - bv * sigma;
    let rhs = q * (r_a - r_b * sigma);
    (lhs - rhs).norm() / shifted_norm
}
