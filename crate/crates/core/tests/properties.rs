mod common;

use std::sync::atomic::{AtomicUsize, Ordering};

use common::{c, multiset_error, random_pencil};
use gplhr::dense::random_block;
use gplhr::{
    build_preconditioner, gplhr_solve, ordered_qz, orth, qfree_factors, read_matrix_market, write_matrix_market,
    DenseBlock, Pencil, PencilOperator, SolverConfig, SparseMatrix, C64,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(re, im)| C64::new(re, im))
}

fn sparse(max_n: usize) -> impl Strategy<Value = SparseMatrix> {
    (1..=max_n, 1..=max_n).prop_flat_map(|(r, cols)| {
        prop::collection::vec((0..r, 0..cols, complex()), 0..3 * r.max(cols))
            .prop_map(move |t| SparseMatrix::from_triplets(r, cols, t).unwrap())
    })
}

fn upper(s: usize, seed: u64) -> DMatrix<C64> {
    random_block(s, s, seed).upper_triangle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn market_round_trip_is_exact(m in sparse(12)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        write_matrix_market(&path, &m).unwrap();
        let back = read_matrix_market(&path).unwrap();
        prop_assert_eq!((back.n_rows(), back.n_cols()), (m.n_rows(), m.n_cols()));
        let a: Vec<_> = m.iter().collect();
        let b: Vec<_> = back.iter().collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn spmm_columns_are_independent(m in sparse(15), seed in any::<u64>(), kx in 1usize..4, ky in 1usize..4) {
        let x = random_block(m.n_cols(), kx, seed);
        let y = random_block(m.n_cols(), ky, seed.wrapping_add(1));
        let mut xy = DenseBlock::zeros(m.n_cols(), kx + ky);
        xy.columns_mut(0, kx).copy_from(&x);
        xy.columns_mut(kx, ky).copy_from(&y);
        let joint = m.spmm(&xy).unwrap();
        prop_assert_eq!(joint.columns(0, kx).into_owned(), m.spmm(&x).unwrap());
        prop_assert_eq!(joint.columns(kx, ky).into_owned(), m.spmm(&y).unwrap());
    }

    #[test]
    fn qfree_keeps_diagonal_ratios(s in 1usize..10, seed in any::<u64>(), zero in prop::option::of((0usize..10, any::<bool>()))) {
        let mut ra = upper(s, seed);
        let mut rb = upper(s, seed.wrapping_add(7));
        if let Some((j, in_a)) = zero {
            let j = j % s;
            if in_a { ra[(j, j)] = c(0.0) } else { rb[(j, j)] = c(0.0) }
        }
        let (ma, mb) = qfree_factors(&ra, &rb).unwrap();
        for j in 0..s {
            let lhs = ma[(j, j)] * rb[(j, j)];
            let rhs = mb[(j, j)] * ra[(j, j)];
            let scale = (ma[(j, j)].norm() + mb[(j, j)].norm()) * (ra[(j, j)].norm() + rb[(j, j)].norm());
            prop_assert!((lhs - rhs).norm() <= 1e-13 * scale);
        }
    }

    #[test]
    fn ordered_qz_spectrum_matches_schur_oracle(s in 1usize..9, seed in any::<u64>(), sr in -1.0..1.0f64, si in -1.0..1.0f64) {
        let a = random_block(s, s, seed);
        let b = DMatrix::<C64>::identity(s, s) + random_block(s, s, seed.wrapping_add(3)) * c(0.2 / s as f64);
        let sigma = C64::new(sr, si);
        let f = ordered_qz(&a, &b, sigma).unwrap();
        let got: Vec<C64> = f.eigenvalues().iter().map(|e| e.ratio()).collect();
        let want: Vec<C64> = b.clone().lu().solve(&a).unwrap().schur().eigenvalues().unwrap().iter().copied().collect();
        prop_assert!(multiset_error(&got, &want) <= 1e-10, "{:?} vs {:?}", got, want);
    }

    #[test]
    fn orth_output_is_well_conditioned(n in 5usize..40, k in 1usize..6, seed in any::<u64>(), eps in 1e-9..1e-2f64) {
        let k = k.min(n);
        // nearly dependent columns
        let base = random_block(n, 1, seed);
        let x = DenseBlock::from_fn(n, k, |i, j| base[i] + random_block(n, k, seed ^ 99)[(i, j)] * c(eps));
        let (q, rank) = orth(&x, 1e-10).unwrap();
        prop_assert_eq!(q.ncols(), rank);
        let sv = q.singular_values();
        prop_assert!(sv.max() / sv.min() <= 1e2);
        prop_assert!((q.ad_mul(&q) - DMatrix::<C64>::identity(rank, rank)).norm() <= 1e-12);
    }
}

struct Counting {
    inner: Pencil,
    a_cols: AtomicUsize,
}

impl PencilOperator for Counting {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn is_standard(&self) -> bool {
        self.inner.is_standard()
    }
    fn apply_a(&self, x: &DenseBlock) -> DenseBlock {
        self.a_cols.fetch_add(x.ncols(), Ordering::Relaxed);
        self.inner.apply_a(x)
    }
    fn apply_b(&self, x: &DenseBlock) -> DenseBlock {
        self.inner.apply_b(x)
    }
    fn shifted_norm(&self, sigma: C64) -> f64 {
        self.inner.shifted_norm(sigma)
    }
}

#[test]
fn matvec_count_matches_instrumented_operator() {
    for (standard, m) in [(true, 1), (false, 2)] {
        let inner = random_pencil(80, standard, 77);
        let sigma = C64::new(0.1, -0.05);
        let t = build_preconditioner(&inner, sigma, &"gmres:80".parse().unwrap()).unwrap();
        let op = Counting { inner, a_cols: AtomicUsize::new(0) };
        let cfg = SolverConfig { m, check_invariants: false, ..SolverConfig::new(sigma, 3) };
        let res = gplhr_solve(&op, &cfg, &t, None).unwrap();
        assert!(res.converged());
        let st = &res.state;
        assert_eq!(st.matvec_count, op.a_cols.load(Ordering::Relaxed));
        // k initial products, then at most (m+1)·(k − locked) per expansion
        let bound: usize = cfg.k
            + st.m_history.iter().zip(&st.locked_history).map(|(&m, &q)| (m + 1) * (cfg.k - q)).sum::<usize>();
        assert!(st.matvec_count <= bound, "{} > {bound}", st.matvec_count);
    }
}
