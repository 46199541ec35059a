use nalgebra::DMatrix;

use super::blocks::{self, column_norms, Ctx, Tracked};
use super::{adapt_m, relative_eig_residual, ConvergenceState, DirectionMode, PartialSchurResult, SchurApprox, SolverConfig};
use crate::dense::{dense_eig_pair, ordered_qz, orth, project_out, random_block, DEFAULT_DROP_TOL};
use crate::error::{Error, Result};
use crate::matrix::PencilOperator;
use crate::precond::Preconditioner;
use crate::{DenseBlock, C64};

/// Residual blocks of the Schur form: `W_A = AV − Q·R_A`, `W_B = BV − Q·R_B`.
/// For `B = I` the single residual is `AV·M_B − V·M_A` and `W_B` is empty.
/// `norms[j] = sqrt(‖W_A(:,j)‖² + ‖W_B(:,j)‖²)`.
pub fn schur_residuals<O: PencilOperator + ?Sized>(p: &O, s: &SchurApprox) -> (DenseBlock, DenseBlock, Vec<f64>) {
    let av = p.apply_a(&s.v);
    let bv = if p.is_standard() { s.v.clone() } else { p.apply_b(&s.v) };
    let (w_a, w_b, _) = residual_blocks(p.is_standard(), &av, &bv, s);
    let na = column_norms(&w_a);
    let nb = column_norms(&w_b);
    let norms = (0..w_a.ncols()).map(|j| na[j].hypot(nb.get(j).copied().unwrap_or(0.0))).collect();
    (w_a, w_b, norms)
}

/// `(W_A, W_B, W_A·M_B − W_B·M_A)`, or for `B = I` `(AV·M_B − V·M_A, [], same)`.
fn residual_blocks(standard: bool, av: &DenseBlock, bv: &DenseBlock, s: &SchurApprox) -> (DenseBlock, DenseBlock, DenseBlock) {
    if standard {
        let w = av * &s.m_b - &s.v * &s.m_a;
        (w.clone(), DenseBlock::zeros(av.nrows(), 0), w)
    } else {
        let w_a = av - &s.q * &s.r_a;
        let w_b = bv - &s.q * &s.r_b;
        let w = &w_a * &s.m_b - &w_b * &s.m_a;
        (w_a, w_b, w)
    }
}

/// One preconditioned block Arnoldi sweep: returns `[W, S_1, …, S_m]`,
/// orthonormal and orthogonal to `V`. Blocks that collapse numerically are
/// omitted. A vanishing residual gives [`Error::Stagnation`].
pub fn krylov_arnoldi_block<O: PencilOperator + ?Sized>(
    p: &O,
    s: &SchurApprox,
    t: &Preconditioner,
    m: usize,
) -> Result<Vec<DenseBlock>> {
    let mut ctx = Ctx::new(p, t, true)?;
    let v = ctx.products(s.v.clone());
    let (_, _, resid) = residual_blocks(ctx.standard(), &v.ax, &v.bx, s);
    let qproj = if ctx.standard() { &s.v } else { &s.q };
    let ex = blocks::expand(&mut ctx, &v, qproj, &resid, &s.m_a, &s.m_b, m, None)?;
    Ok(ex.blocks.into_iter().map(|b| b.x).collect())
}

struct Extraction {
    v: Tracked,
    q: DenseBlock,
    r_a: DMatrix<C64>,
    r_b: DMatrix<C64>,
    extra: Tracked,
}

fn extract(z: &[&Tracked], u: &DenseBlock, sigma: C64, k: usize, n_extra: usize) -> Result<Extraction> {
    let (phi, psi) = blocks::projected_pair(u, z);
    let f = ordered_qz(&phi, &psi, sigma).map_err(|e| match e {
        Error::SingularPencil(msg) => Error::SingularPencil(format!(
            "projected pair is not regular ({msg}); σ is probably an eigenvalue or the pencil is singular"
        )),
        e => e,
    })?;
    let s = phi.nrows();
    let k = k.min(s);
    let n_extra = n_extra.min(s - k);
    let v = Tracked::combine(z, &f.y_r.columns(0, k).into_owned());
    let extra = Tracked::combine(z, &f.y_r.columns(k, n_extra).into_owned());
    Ok(Extraction {
        v,
        q: u * f.y_l.columns(0, k),
        r_a: f.r_a.view((0, 0), (k, k)).into_owned(),
        r_b: f.r_b.view((0, 0), (k, k)).into_owned(),
        extra,
    })
}

/// Harmonic Schur–Rayleigh–Ritz step on the trial basis `Z = [V, W, S, …, P]`
/// (orthonormal, `z_blocks[0] = V`) against `U = [Q, orth((A−σB)·[W, S, …, P])]`.
/// Returns the new approximation with its `k` leading columns and the next
/// `k` harmonic Ritz vectors as extra search directions.
pub fn harmonic_srr<O: PencilOperator + ?Sized>(
    p: &O,
    z_blocks: &[DenseBlock],
    prev_q: &DenseBlock,
    sigma: C64,
    k: usize,
) -> Result<(SchurApprox, DenseBlock)> {
    let tracked: Vec<Tracked> = z_blocks
        .iter()
        .map(|x| Tracked {
            x: x.clone(),
            ax: p.apply_a(x),
            bx: if p.is_standard() { x.clone() } else { p.apply_b(x) },
        })
        .collect();
    let u = blocks::test_space(prev_q, &tracked[1..], sigma)?;
    let refs: Vec<&Tracked> = tracked.iter().collect();
    let ex = extract(&refs, &u, sigma, k, k)?;
    let mut s = SchurApprox::new(ex.v.x, ex.q, ex.r_a, ex.r_b)?;
    s.p = ex.extra.x.clone();
    Ok((s, ex.extra.x))
}

/// Orthonormal `n×k` start block orthogonal to the deflation basis; columns
/// lost to dependence are replaced by seeded random ones.
pub(crate) fn initial_basis<O: PencilOperator + ?Sized>(op: &O, k: usize, seed: u64, v0: Option<&DenseBlock>) -> Result<DenseBlock> {
    let n = op.dim();
    let mut x = match v0 {
        Some(v0) => {
            if v0.nrows() != n || v0.ncols() != k {
                return Err(Error::InvalidInput(format!(
                    "initial block is {}x{}, expected {n}x{k}",
                    v0.nrows(),
                    v0.ncols()
                )));
            }
            v0.clone()
        }
        None => random_block(n, k, seed),
    };
    let defl: Vec<&DenseBlock> = op.deflation().map(|(v0, _)| vec![v0]).unwrap_or_default();
    let mut attempt = 0u64;
    loop {
        project_out(&mut x, &defl);
        project_out(&mut x, &defl);
        let (v, rank) = match orth(&x, DEFAULT_DROP_TOL) {
            Ok(r) => r,
            Err(Error::EmptyBlock) => (DenseBlock::zeros(n, 0), 0),
            Err(e) => return Err(e),
        };
        if rank == k {
            return Ok(v);
        }
        attempt += 1;
        if attempt > 10 {
            return Err(Error::InvalidInput(format!("cannot build {k} orthonormal start vectors")));
        }
        x = blocks::hcat(&[&v, &random_block(n, k - rank, seed.wrapping_add(0x9e37_79b9 * attempt))]);
    }
}

/// Column residuals `‖Ax − λBx‖/‖Ax‖` of the standard Rayleigh–Ritz pairs on
/// `col(V)`, in σ-distance order. Falls back to Schur residual norms scaled
/// by `‖A v_j‖` when the small problem has no eigenvector basis.
pub(crate) fn ritz_residuals(v: &Tracked, sigma: C64, schur_norms: &[f64]) -> Vec<f64> {
    let ha = v.x.ad_mul(&v.ax);
    let hb = v.x.ad_mul(&v.bx);
    match dense_eig_pair(&ha, &hb, sigma) {
        Ok(pairs) => pairs
            .iter()
            .map(|(ev, y)| {
                let ax = &v.ax * y;
                let bx = &v.bx * y;
                relative_eig_residual(ev, &ax, &bx)
            })
            .collect(),
        Err(e) => {
            log::debug!("Rayleigh–Ritz on V failed ({e}); using Schur residuals");
            schur_norms.iter().zip(column_norms(&v.ax)).map(|(r, a)| r / a.max(f64::MIN_POSITIVE)).collect()
        }
    }
}

pub(crate) struct Monitor {
    pub check: bool,
    pub shifted_norm: f64,
}

impl Monitor {
    pub fn new<O: PencilOperator + ?Sized>(op: &O, cfg: &SolverConfig) -> Self {
        let shifted_norm = if cfg.check_invariants { op.shifted_norm(cfg.sigma).max(f64::MIN_POSITIVE) } else { 1.0 };
        Self { check: cfg.check_invariants, shifted_norm }
    }
}

/// Computes `k` eigenvalues of `(A, B)` closest to `σ` with a partial
/// generalized Schur form.
///
/// Stops when every column's relative eigenresidual is below `cfg.tol`, when
/// `cfg.max_iter` passes are used up, or when the search block collapses;
/// the last two return a result flagged as not converged.
pub fn gplhr_solve<O: PencilOperator + ?Sized>(
    p: &O,
    cfg: &SolverConfig,
    t: &Preconditioner,
    v0: Option<&DenseBlock>,
) -> Result<PartialSchurResult> {
    let n = p.dim();
    cfg.validate(n)?;
    let k = cfg.k;
    let sigma = cfg.sigma;
    let mut ctx = Ctx::new(p, t, cfg.right_projector)?;
    let monitor = Monitor::new(p, cfg);
    let mut state = ConvergenceState { current_m: cfg.m, ..Default::default() };

    let v = initial_basis(p, k, cfg.seed, v0)?;
    let v = ctx.products(v);
    let q = blocks::orth_or_singular(&v.shifted(sigma))?;
    let f = ordered_qz(&q.ad_mul(&v.ax), &q.ad_mul(&v.bx), sigma)?;
    let mut v = Tracked::combine(&[&v], &f.y_r);
    let mut s = SchurApprox::new(v.x.clone(), q * &f.y_l, f.r_a, f.r_b)?;
    let mut p_dir: Option<Tracked> = None;
    if monitor.check {
        track_identity(&mut state, p, &s, sigma, &monitor);
    }

    loop {
        state.iterations += 1;
        let (w_a, w_b, resid) = residual_blocks(ctx.standard(), &v.ax, &v.bx, &s);
        let na = column_norms(&w_a);
        let nb = column_norms(&w_b);
        let schur_norms: Vec<f64> = (0..k).map(|j| na[j].hypot(nb.get(j).copied().unwrap_or(0.0))).collect();
        let res = ritz_residuals(&v, sigma, &schur_norms);
        state.record(res, schur_norms, cfg.tol);
        log::info!(
            "iteration {}: locked {}/{}, max residual {:.3e}",
            state.iterations,
            state.locked,
            k,
            state.residual_history.last().unwrap().iter().cloned().fold(0.0, f64::max)
        );
        if state.all_converged() || state.iterations >= cfg.max_iter {
            break;
        }
        let q_locked = state.locked;
        if q_locked == k {
            log::warn!("all columns locked but some residuals drifted above tol");
            break;
        }
        let m = adapt_m(cfg.m, k, q_locked);
        state.current_m = m;
        state.m_history.push(m);
        let a = k - q_locked;

        let p_act = p_dir.as_ref().map(|p| match cfg.direction_mode {
            DirectionMode::Lobpcg => p.columns(q_locked, a),
            _ => p.columns(0, a.min(p.ncols())),
        });
        let ma = s.m_a.view((q_locked, q_locked), (a, a)).into_owned();
        let mb = s.m_b.view((q_locked, q_locked), (a, a)).into_owned();
        let resid_act = resid.columns(q_locked, a).into_owned();
        let qproj = if ctx.standard() { v.x.clone() } else { s.q.clone() };
        let ex = match blocks::expand(&mut ctx, &v, &qproj, &resid_act, &ma, &mb, m, p_act.as_ref()) {
            Ok(ex) => ex,
            Err(Error::Stagnation) => {
                log::warn!("search block collapsed at iteration {}", state.iterations);
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
        let u = blocks::test_space(&s.q, &ex.blocks, sigma)?;
        let next = extract(&z, &u, sigma, k, a)?;
        let prev_v = std::mem::replace(&mut v, next.v);
        s = SchurApprox::new(v.x.clone(), next.q, next.r_a, next.r_b)?;
        p_dir = match cfg.direction_mode {
            DirectionMode::ThickRestart => Some(next.extra),
            DirectionMode::Lobpcg => Some(prev_v),
            DirectionMode::None => None,
        };
        if monitor.check {
            track_identity(&mut state, p, &s, sigma, &monitor);
        }
    }

    state.matvec_count = ctx.matvecs;
    state.prec_count = ctx.precs;
    let residuals = state.residual_history.last().cloned().unwrap_or_default();
    let eigenvalues = s.eigenvalues();
    let (q, r_a, r_b, r) = if ctx.standard() {
        let r = standard_triangle(&s.m_a, &s.m_b)?;
        (v.x.clone(), r.clone(), DMatrix::identity(k, k), Some(r))
    } else {
        (s.q, s.r_a, s.r_b, None)
    };
    Ok(PartialSchurResult { v: v.x, q, r_a, r_b, r, eigenvalues, residuals, state })
}

fn track_identity<O: PencilOperator + ?Sized>(state: &mut ConvergenceState, p: &O, s: &SchurApprox, sigma: C64, monitor: &Monitor) {
    let err = blocks::schur_identity_error(p, &s.v, &s.q, &s.r_a, &s.r_b, sigma, monitor.shifted_norm);
    state.max_schur_identity_error = state.max_schur_identity_error.max(err);
}

/// `R = M_A·M_B⁻¹`, so that `A·V·M_B = V·M_A` reads `A·V = V·R`.
fn standard_triangle(m_a: &DMatrix<C64>, m_b: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    // R·M_B = M_A  ⇔  M_Bᵀ·Rᵀ = M_Aᵀ
    m_b.transpose()
        .solve_lower_triangular(&m_a.transpose())
        .map(|rt| rt.transpose())
        .ok_or_else(|| Error::SingularPencil("M_B is singular; the standard problem has an infinite eigenvalue".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{Pencil, SparseMatrix};
    use crate::precond::{build_preconditioner, PrecKind};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn diag_pencil(vals: &[f64]) -> Pencil {
        let d: Vec<C64> = vals.iter().map(|&x| c(x)).collect();
        Pencil::standard(SparseMatrix::from_diagonal(&d)).unwrap()
    }

    fn random_pencil(n: usize, seed: u64) -> Pencil {
        let a = SparseMatrix::from_dense(&random_block(n, n, seed));
        let b = SparseMatrix::from_dense(&(random_block(n, n, seed + 1) + DMatrix::<C64>::identity(n, n) * c(3.0)));
        Pencil::new(a, Some(b)).unwrap()
    }

    fn exact_schur(p: &Pencil, k: usize, sigma: C64) -> SchurApprox {
        let (a, b) = p.to_dense();
        let f = ordered_qz(&a, &b, sigma).unwrap();
        SchurApprox::new(
            f.y_r.columns(0, k).into_owned(),
            f.y_l.columns(0, k).into_owned(),
            f.r_a.view((0, 0), (k, k)).into_owned(),
            f.r_b.view((0, 0), (k, k)).into_owned(),
        )
        .unwrap()
    }

    #[test]
    fn exact_factors_have_tiny_residuals() {
        let p = random_pencil(30, 1);
        let s = exact_schur(&p, 4, c(0.1));
        let (_, _, norms) = schur_residuals(&p, &s);
        let scale = p.a().frobenius_norm() + p.b().unwrap().frobenius_norm();
        assert!(norms.iter().all(|&r| r <= 1e-13 * scale), "{norms:?}");
    }

    #[test]
    fn diagonal_standard_residual_is_zero() {
        let p = diag_pencil(&[1.0, 2.0]);
        let e1 = DenseBlock::from_column_slice(2, 1, &[c(1.0), c(0.0)]);
        let one = DMatrix::from_element(1, 1, c(1.0));
        let s = SchurApprox::new(e1.clone(), e1, one.clone(), one).unwrap();
        let (_, w_b, norms) = schur_residuals(&p, &s);
        assert_eq!(w_b.ncols(), 0);
        assert_eq!(norms, vec![0.0]);
    }

    #[test]
    fn residual_scales_linearly_with_perturbation() {
        let p = random_pencil(30, 2);
        let exact = exact_schur(&p, 3, c(0.0));
        let e = random_block(30, 3, 3);
        let mut norms = Vec::new();
        for eps in [1e-4, 1e-6] {
            let mut s = exact.clone();
            s.v += &e * c(eps);
            norms.push(schur_residuals(&p, &s).2.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        let ratio = norms[0] / norms[1];
        assert!((ratio / 100.0 - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn arnoldi_m0_returns_w_only_and_exact_input_stagnates() {
        let p = random_pencil(25, 4);
        let t = build_preconditioner(&p, c(0.0), &PrecKind::Jacobi).unwrap();
        let exact = exact_schur(&p, 2, c(0.0));
        assert!(matches!(krylov_arnoldi_block(&p, &exact, &t, 1), Err(Error::Stagnation)));
        let mut s = exact.clone();
        s.v += random_block(25, 2, 5) * c(1e-3);
        let s = SchurApprox { v: orth(&s.v, DEFAULT_DROP_TOL).unwrap().0, ..s };
        assert_eq!(krylov_arnoldi_block(&p, &s, &t, 0).unwrap().len(), 1);
    }

    #[test]
    fn arnoldi_blocks_are_orthonormal_with_v() {
        let p = random_pencil(40, 6);
        let t = build_preconditioner(&p, c(0.2), &"ilut:1e-2".parse().unwrap()).unwrap();
        let v = orth(&random_block(40, 3, 7), DEFAULT_DROP_TOL).unwrap().0;
        let (a, b) = p.to_dense();
        let q = orth(&(&a * &v - &b * &v * c(0.2)), DEFAULT_DROP_TOL).unwrap().0;
        let f = ordered_qz(&q.ad_mul(&(&a * &v)), &q.ad_mul(&(&b * &v)), c(0.2)).unwrap();
        let s = SchurApprox::new(&v * &f.y_r, &q * &f.y_l, f.r_a, f.r_b).unwrap();
        let out = krylov_arnoldi_block(&p, &s, &t, 2).unwrap();
        assert_eq!(out.len(), 3);
        let mut all = vec![&s.v];
        all.extend(out.iter());
        let z = blocks::hcat(&all);
        let gram = z.ad_mul(&z) - DMatrix::<C64>::identity(z.ncols(), z.ncols());
        assert!(gram.norm() < 1e-12, "{}", gram.norm());
    }

    #[test]
    fn full_space_extraction_is_exact() {
        let p = diag_pencil(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let sigma = c(3.4);
        let id = DMatrix::<C64>::identity(6, 6);
        let v = id.columns(0, 2).into_owned();
        let rest = id.columns(2, 4).into_owned();
        let q = orth(&(p.a().spmm(&v).unwrap() - &v * sigma), DEFAULT_DROP_TOL).unwrap().0;
        let (s, extra) = harmonic_srr(&p, &[v, rest], &q, sigma, 2).unwrap();
        let mut ev: Vec<f64> = s.eigenvalues().iter().map(|e| e.ratio().re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] - 4.0).abs() < 1e-12);
        assert_eq!(extra.ncols(), 2);
    }

    #[test]
    fn srr_matches_projected_oracle_and_schur_identity() {
        let n = 40;
        let p = random_pencil(n, 8);
        let sigma = C64::new(0.1, 0.2);
        let z = orth(&random_block(n, 12, 9), DEFAULT_DROP_TOL).unwrap().0;
        let v = z.columns(0, 3).into_owned();
        let rest = z.columns(3, 9).into_owned();
        let (a, b) = p.to_dense();
        let q = orth(&(&a * &v - &b * &v * sigma), DEFAULT_DROP_TOL).unwrap().0;
        let (s, _) = harmonic_srr(&p, &[v.clone(), rest.clone()], &q, sigma, 3).unwrap();

        let x = (&a - &b * sigma) * &rest;
        let mut qh = x.clone();
        project_out(&mut qh, &[&q]);
        let qh = orth(&qh, DEFAULT_DROP_TOL).unwrap().0;
        let u = blocks::hcat(&[&q, &qh]);
        let oracle = dense_eig_pair(&u.ad_mul(&(&a * &z)), &u.ad_mul(&(&b * &z)), sigma).unwrap();
        for (got, (want, _)) in s.eigenvalues().iter().zip(&oracle) {
            assert!((got.ratio() - want.ratio()).norm() <= 1e-12 * want.ratio().norm().max(1.0));
        }
        let lhs = (&a - &b * sigma) * &s.v;
        let rhs = &s.q * (&s.r_a - &s.r_b * sigma);
        assert!((lhs - rhs).norm() <= 1e-12 * (&a - &b * sigma).norm());
    }

    #[test]
    fn diagonal_solve_with_exact_inverse() {
        let p = diag_pencil(&(1..=10).map(|i| i as f64).collect::<Vec<_>>());
        let sigma = c(5.2);
        let t = build_preconditioner(&p, sigma, &"gmres:10".parse().unwrap()).unwrap();
        let cfg = SolverConfig::new(sigma, 2);
        let res = gplhr_solve(&p, &cfg, &t, None).unwrap();
        assert!(res.converged());
        // five extraction steps after the initial residual pass
        assert!(res.state.iterations <= 6, "{} {:?}", res.state.iterations, res.state.residual_history);
        assert!((res.eigenvalues[0].ratio() - c(5.0)).norm() < 1e-10);
        assert!((res.eigenvalues[1].ratio() - c(6.0)).norm() < 1e-10);
        let r = res.r.as_ref().unwrap();
        let av = p.a().spmm(&res.v).unwrap();
        assert!((av - &res.v * r).norm() < 1e-7);
    }

    #[test]
    fn k_equals_n_recovers_full_spectrum() {
        let n = 6;
        let p = random_pencil(n, 10);
        let sigma = C64::new(0.3, -0.1);
        let t = build_preconditioner(&p, sigma, &"gmres:6".parse().unwrap()).unwrap();
        let res = gplhr_solve(&p, &SolverConfig::new(sigma, n), &t, None).unwrap();
        assert!(res.converged());
        let (a, b) = p.to_dense();
        let oracle = ordered_qz(&a, &b, sigma).unwrap().eigenvalues();
        for (got, want) in res.eigenvalues.iter().zip(&oracle) {
            assert!((got.ratio() - want.ratio()).norm() < 1e-8 * want.ratio().norm().max(1.0));
        }
    }

    #[test]
    fn explicit_identity_b_matches_marker() {
        let n = 30;
        let a = SparseMatrix::from_dense(&random_block(n, n, 11));
        let sigma = C64::new(0.2, 0.0);
        let std_p = Pencil::standard(a.clone()).unwrap();
        let gen_p = Pencil::new(a, Some(SparseMatrix::identity(n))).unwrap();
        let kind: PrecKind = "gmres:30".parse().unwrap();
        let mut ev = Vec::new();
        for p in [&std_p, &gen_p] {
            let t = build_preconditioner(p, sigma, &kind).unwrap();
            let res = gplhr_solve(p, &SolverConfig::new(sigma, 3), &t, None).unwrap();
            assert!(res.converged());
            ev.push(res.eigenvalues.iter().map(|e| e.ratio()).collect::<Vec<_>>());
        }
        for (x, y) in ev[0].iter().zip(&ev[1]) {
            assert!((x - y).norm() < 1e-10 * x.norm().max(1.0));
        }
    }

    #[test]
    fn shift_at_eigenvalue_is_flagged_or_correct() {
        let p = diag_pencil(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let sigma = c(3.0);
        let t = build_preconditioner(&p, sigma, &PrecKind::Jacobi).unwrap();
        match gplhr_solve(&p, &SolverConfig { max_iter: 50, ..SolverConfig::new(sigma, 2) }, &t, None) {
            Err(Error::SingularPencil(_)) => {}
            Err(e) => panic!("unexpected error {e}"),
            Ok(res) => {
                if res.converged() {
                    let mut ev: Vec<f64> = res.eigenvalues.iter().map(|e| e.ratio().re).collect();
                    ev.sort_by(f64::total_cmp);
                    assert!((ev[0] - 2.0).abs() < 1e-8 || (ev[0] - 3.0).abs() < 1e-8);
                    assert!((ev[0] - 3.0).abs() < 1e-8 || (ev[1] - 3.0).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn directions_modes_all_converge() {
        let n = 60;
        let p = random_pencil(n, 12);
        let sigma = C64::new(0.0, 0.1);
        let t = build_preconditioner(&p, sigma, &"ilut:1e-2".parse().unwrap()).unwrap();
        for mode in [DirectionMode::ThickRestart, DirectionMode::Lobpcg, DirectionMode::None] {
            let cfg = SolverConfig { direction_mode: mode, max_iter: 300, ..SolverConfig::new(sigma, 3) };
            let res = gplhr_solve(&p, &cfg, &t, None).unwrap();
            assert!(res.converged(), "{mode} {} {:?}", res.state.iterations, res.state.residual_history.last());
            assert!(res.state.max_schur_identity_error < 1e-11, "{}", res.state.max_schur_identity_error);
            assert!(res.state.max_gram_error < 1e-11, "{}", res.state.max_gram_error);
        }
    }
}
