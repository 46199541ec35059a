use nalgebra::{DMatrix, DVector};

use super::blocks::{self, Ctx, Tracked};
use super::schur::{initial_basis, Monitor};
use super::{adapt_m, relative_eig_residual, ConvergenceState, DirectionMode, SolverConfig};
use crate::dense::{dense_eig_pair, orth_tracked, GeneralizedEigenvalue, DEFAULT_DROP_TOL};
use crate::error::{Error, Result};
use crate::matrix::PencilOperator;
use crate::precond::Preconditioner;
use crate::{DenseBlock, C64};

/// Output of the eigenvector driver.
#[derive(Debug, Clone)]
pub struct EigResult {
    /// Unit-norm approximate eigenvectors.
    pub x: DenseBlock,
    /// `x_jᴴ A x_j`.
    pub lambda_a: Vec<C64>,
    /// `x_jᴴ B x_j`.
    pub lambda_b: Vec<C64>,
    pub eigenvalues: Vec<GeneralizedEigenvalue>,
    pub residuals: Vec<f64>,
    pub state: ConvergenceState,
}

impl EigResult {
    pub fn converged(&self) -> bool {
        self.state.all_converged()
    }
}

fn bilinear(x: &Tracked) -> (Vec<C64>, Vec<C64>) {
    (0..x.ncols())
        .map(|j| (x.x.column(j).dotc(&x.ax.column(j)), x.x.column(j).dotc(&x.bx.column(j))))
        .unzip()
}

/// Eigenvector variant: keeps approximate eigenvectors `X` with eigenvalue
/// estimates from the bilinear forms `x_jᴴAx_j / x_jᴴBx_j`, and extracts from
/// the projected pair by eigenvectors instead of Schur vectors.
///
/// A defective projected eigenvalue gives [`Error::Deficient`]; the Schur
/// driver handles such problems.
pub fn gplhr_eig_solve<O: PencilOperator + ?Sized>(
    p: &O,
    cfg: &SolverConfig,
    t: &Preconditioner,
    x0: Option<&DenseBlock>,
) -> Result<EigResult> {
    let n = p.dim();
    cfg.validate(n)?;
    let k = cfg.k;
    let sigma = cfg.sigma;
    let mut ctx = Ctx::new(p, t, cfg.right_projector)?;
    let monitor = Monitor::new(p, cfg);
    let mut state = ConvergenceState { current_m: cfg.m, ..Default::default() };

    let mut x = ctx.products(initial_basis(p, k, cfg.seed, x0)?);
    x.normalize_columns();
    let mut p_dir: Option<Tracked> = None;
    let (mut la, mut lb) = bilinear(&x);

    loop {
        state.iterations += 1;
        let eigenvalues: Vec<GeneralizedEigenvalue> =
            la.iter().zip(&lb).map(|(&a, &b)| GeneralizedEigenvalue::new_unchecked(a, b)).collect();
        let resid = &x.ax * DMatrix::from_diagonal(&DVector::from_column_slice(&lb))
            - &x.bx * DMatrix::from_diagonal(&DVector::from_column_slice(&la));
        let res: Vec<f64> = (0..k)
            .map(|j| {
                relative_eig_residual(&eigenvalues[j], &x.ax.column(j).into_owned(), &x.bx.column(j).into_owned())
            })
            .collect();
        state.record(res, blocks::column_norms(&resid), cfg.tol);
        if state.all_converged() || state.iterations >= cfg.max_iter {
            break;
        }
        let q_locked = state.locked;
        if q_locked == k {
            break;
        }
        let m = adapt_m(cfg.m, k, q_locked);
        state.current_m = m;
        state.m_history.push(m);
        let a = k - q_locked;

        let vo = orth_tracked(&[], &x.parts(), DEFAULT_DROP_TOL);
        let mut it = vo.parts.into_iter();
        let v = Tracked { x: it.next().unwrap(), ax: it.next().unwrap(), bx: it.next().unwrap() };
        let q = blocks::orth_or_singular(&x.shifted(sigma))?;
        let qproj = if ctx.standard() { v.x.clone() } else { q.clone() };
        let ma = DMatrix::from_diagonal(&DVector::from_column_slice(&la[q_locked..]));
        let mb = DMatrix::from_diagonal(&DVector::from_column_slice(&lb[q_locked..]));
        let resid_act = resid.columns(q_locked, a).into_owned();
        let p_act = p_dir.as_ref().map(|p| match cfg.direction_mode {
            DirectionMode::Lobpcg => p.columns(q_locked, a),
            _ => p.columns(0, a.min(p.ncols())),
        });
        let ex = match blocks::expand(&mut ctx, &v, &qproj, &resid_act, &ma, &mb, m, p_act.as_ref()) {
            Ok(ex) => ex,
            Err(Error::Stagnation) => {
                state.stagnated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let mut z: Vec<&Tracked> = vec![&v];
        z.extend(ex.blocks.iter());
        if monitor.check {
            state.max_gram_error = state.max_gram_error.max(blocks::gram_error(&z));
        }
        let u = blocks::test_space(&q, &ex.blocks, sigma)?;
        let (phi, psi) = blocks::projected_pair(&u, &z);
        let pairs = dense_eig_pair(&phi, &psi, sigma)?;
        let s = pairs.len();
        let kk = k.min(s);
        let n_extra = a.min(s - kk);
        let y = DMatrix::from_columns(&pairs.iter().take(kk).map(|(_, y)| y.clone()).collect::<Vec<_>>());
        let mut next = Tracked::combine(&z, &y);
        next.normalize_columns();
        let prev = std::mem::replace(&mut x, next);
        p_dir = match cfg.direction_mode {
            DirectionMode::ThickRestart if n_extra > 0 => {
                let ye = DMatrix::from_columns(&pairs.iter().skip(kk).take(n_extra).map(|(_, y)| y.clone()).collect::<Vec<_>>());
                Some(Tracked::combine(&z, &ye))
            }
            DirectionMode::Lobpcg => Some(prev),
            _ => None,
        };
        (la, lb) = bilinear(&x);
    }

    state.matvec_count = ctx.matvecs;
    state.prec_count = ctx.precs;
    let residuals = state.residual_history.last().cloned().unwrap_or_default();
    let eigenvalues = la.iter().zip(&lb).map(|(&a, &b)| GeneralizedEigenvalue::new_unchecked(a, b)).collect();
    Ok(EigResult { x: x.x, lambda_a: la, lambda_b: lb, eigenvalues, residuals, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::random_block;
    use crate::matrix::{Pencil, SparseMatrix};
    use crate::precond::build_preconditioner;
    use crate::solver::gplhr_solve;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn diagonal_pencil_gives_axes() {
        let d: Vec<C64> = (1..=8).map(|i| c(i as f64)).collect();
        let p = Pencil::new(SparseMatrix::from_diagonal(&d), Some(SparseMatrix::identity(8))).unwrap();
        let sigma = c(4.3);
        let t = build_preconditioner(&p, sigma, &"gmres:8".parse().unwrap()).unwrap();
        let res = gplhr_eig_solve(&p, &SolverConfig::new(sigma, 2), &t, None).unwrap();
        assert!(res.converged());
        for (j, (lam, axis)) in [(4.0, 3usize), (5.0, 4usize)].into_iter().enumerate() {
            assert!((res.eigenvalues[j].ratio() - c(lam)).norm() < 1e-8);
            let x = res.x.column(j);
            assert!((x[axis].norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn hermitian_eigenvalues_are_real() {
        let n = 40;
        let r = random_block(n, n, 3);
        let h = &r + r.adjoint();
        let p = Pencil::standard(SparseMatrix::from_dense(&h)).unwrap();
        let sigma = c(0.3);
        let t = build_preconditioner(&p, sigma, &"gmres:40".parse().unwrap()).unwrap();
        let res = gplhr_eig_solve(&p, &SolverConfig::new(sigma, 3), &t, None).unwrap();
        assert!(res.converged());
        let mut oracle: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(|a, b| (a - 0.3).abs().total_cmp(&(b - 0.3).abs()));
        for (ev, want) in res.eigenvalues.iter().zip(&oracle) {
            assert!(ev.ratio().im.abs() < 1e-10);
            assert!((ev.ratio().re - want).abs() < 1e-8 * want.abs().max(1.0));
        }
    }

    #[test]
    fn agrees_with_schur_variant() {
        let n = 50;
        let a = SparseMatrix::from_dense(&random_block(n, n, 4));
        let b = SparseMatrix::from_dense(&(random_block(n, n, 5) + DMatrix::<C64>::identity(n, n) * c(4.0)));
        let p = Pencil::new(a, Some(b)).unwrap();
        let sigma = C64::new(0.05, 0.05);
        let t = build_preconditioner(&p, sigma, &"gmres:50".parse().unwrap()).unwrap();
        let cfg = SolverConfig::new(sigma, 3);
        let eig = gplhr_eig_solve(&p, &cfg, &t, None).unwrap();
        let schur = gplhr_solve(&p, &cfg, &t, None).unwrap();
        assert!(eig.converged() && schur.converged());
        for (x, y) in eig.eigenvalues.iter().zip(&schur.eigenvalues) {
            assert!((x.ratio() - y.ratio()).norm() < 1e-8 * y.ratio().norm().max(1.0));
        }
    }
}
