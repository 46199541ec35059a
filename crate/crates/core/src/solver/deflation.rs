use nalgebra::DMatrix;

use super::blocks::hcat;
use super::{gplhr_solve, ConvergenceState, PartialSchurResult, SolverConfig};
use crate::dense::{project_out, GeneralizedEigenvalue};
use crate::error::Result;
use crate::matrix::{Pencil, PencilOperator};
use crate::precond::Preconditioner;
use crate::{DenseBlock, C64};

/// The pair `((I − Q₀Q₀ᴴ)A(I − V₀V₀ᴴ), (I − Q₀Q₀ᴴ)B(I − V₀V₀ᴴ))`, applied
/// implicitly around the sparse products. For `B = I`, `Q₀ = V₀` and `B` stays the identity.
pub struct DeflatedPencil<'a> {
    base: &'a Pencil,
    v0: DenseBlock,
    q0: DenseBlock,
}

impl<'a> DeflatedPencil<'a> {
    /// `v0`, `q0` must have orthonormal columns; `q0` is ignored when `B = I`.
    pub fn new(base: &'a Pencil, v0: DenseBlock, q0: DenseBlock) -> Self {
        let q0 = if base.is_standard() { v0.clone() } else { q0 };
        Self { base, v0, q0 }
    }

    fn around(&self, x: &DenseBlock, apply: impl Fn(&DenseBlock) -> DenseBlock) -> DenseBlock {
        let mut y = x.clone();
        project_out(&mut y, &[&self.v0]);
        let mut z = apply(&y);
        project_out(&mut z, &[&self.q0]);
        z
    }
}

impl PencilOperator for DeflatedPencil<'_> {
    fn dim(&self) -> usize {
        self.base.n()
    }

    fn is_standard(&self) -> bool {
        self.base.is_standard()
    }

    fn apply_a(&self, x: &DenseBlock) -> DenseBlock {
        self.around(x, |y| self.base.apply_a(y))
    }

    fn apply_b(&self, x: &DenseBlock) -> DenseBlock {
        if self.base.is_standard() {
            return x.clone();
        }
        self.around(x, |y| self.base.apply_b(y))
    }

    fn shifted_norm(&self, sigma: C64) -> f64 {
        self.base.shifted_norm(sigma)
    }

    fn deflation(&self) -> Option<(&DenseBlock, &DenseBlock)> {
        Some((&self.v0, &self.q0))
    }
}

fn reorthogonalize(x: &mut DenseBlock, basis: &DenseBlock) {
    project_out(x, &[basis]);
    project_out(x, &[basis]);
    for mut c in x.column_iter_mut() {
        let nrm = c.norm();
        if nrm > 0.0 {
            c.scale_mut(1.0 / nrm);
        }
    }
}

/// Computes `batches·k` eigenvalues by repeated solves on the pencil deflated
/// by all previously converged Schur vectors. Batch `b` uses seed `cfg.seed + b`.
///
/// The combined `R_A`, `R_B` are block upper triangular with off-diagonal
/// blocks `Q_iᴴ A V_j`, `Q_iᴴ B V_j`. If a batch fails or does not converge,
/// the accumulation so far is returned, flagged as not converged.
pub fn deflated_solve(p: &Pencil, cfg: &SolverConfig, t: &Preconditioner, batches: usize) -> Result<PartialSchurResult> {
    let first = gplhr_solve(p, cfg, t, None)?;
    if batches <= 1 {
        return Ok(first);
    }
    let n = p.n();
    let mut ok = first.converged();
    let mut vs = vec![first.v];
    let mut qs = vec![if p.is_standard() { vs[0].clone() } else { first.q }];
    let mut eigenvalues: Vec<GeneralizedEigenvalue> = first.eigenvalues;
    let mut residuals = first.residuals;
    let mut state = first.state;

    for b in 1..batches {
        if !ok {
            break;
        }
        let v_acc = hcat(&vs.iter().collect::<Vec<_>>());
        let q_acc = hcat(&qs.iter().collect::<Vec<_>>());
        if v_acc.ncols() + cfg.k > n {
            log::warn!("batch {b} would exceed the problem dimension; stopping");
            ok = false;
            break;
        }
        let op = DeflatedPencil::new(p, v_acc.clone(), q_acc.clone());
        let batch_cfg = SolverConfig { seed: cfg.seed.wrapping_add(b as u64), ..cfg.clone() };
        let res = match gplhr_solve(&op, &batch_cfg, t, None) {
            Ok(res) => res,
            Err(e) => {
                log::error!("deflation batch {b} failed: {e}");
                ok = false;
                break;
            }
        };
        ok = res.converged();
        let mut v = res.v;
        reorthogonalize(&mut v, &v_acc);
        let q = if p.is_standard() {
            v.clone()
        } else {
            let mut q = res.q;
            reorthogonalize(&mut q, &q_acc);
            q
        };
        vs.push(v);
        qs.push(q);
        eigenvalues.extend(res.eigenvalues);
        residuals.extend(res.residuals);
        merge_state(&mut state, res.state);
    }

    let v = hcat(&vs.iter().collect::<Vec<_>>());
    let q = hcat(&qs.iter().collect::<Vec<_>>());
    let av = p.apply_a(&v);
    let bv = p.apply_b(&v);
    let mut r_a = q.ad_mul(&av);
    let mut r_b = q.ad_mul(&bv);
    let total = v.ncols();
    for j in 0..total {
        for i in j + 1..total {
            r_a[(i, j)] = C64::new(0.0, 0.0);
            r_b[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    // Keep the per-batch triangles' diagonals as the reported eigenvalues.
    for (j, ev) in eigenvalues.iter().enumerate() {
        if p.is_standard() {
            r_a[(j, j)] = ev.ratio();
            r_b[(j, j)] = C64::new(1.0, 0.0);
        } else {
            r_a[(j, j)] = ev.alpha;
            r_b[(j, j)] = ev.beta;
        }
    }
    state.converged = residuals.iter().map(|&r| ok && r <= cfg.tol).collect();
    let r = p.is_standard().then(|| r_a.clone());
    if p.is_standard() {
        r_b = DMatrix::identity(total, total);
    }
    Ok(PartialSchurResult { v, q, r_a, r_b, r, eigenvalues, residuals, state })
}

fn merge_state(acc: &mut ConvergenceState, next: ConvergenceState) {
    acc.iterations += next.iterations;
    acc.matvec_count += next.matvec_count;
    acc.prec_count += next.prec_count;
    acc.locked += next.locked;
    acc.current_m = next.current_m;
    acc.residual_history.extend(next.residual_history);
    acc.schur_residual_history.extend(next.schur_residual_history);
    acc.m_history.extend(next.m_history);
    acc.locked_history.extend(next.locked_history);
    acc.stagnated |= next.stagnated;
    acc.locked_drift = acc.locked_drift.max(next.locked_drift);
    acc.max_schur_identity_error = acc.max_schur_identity_error.max(next.max_schur_identity_error);
    acc.max_gram_error = acc.max_gram_error.max(next.max_gram_error);
}
