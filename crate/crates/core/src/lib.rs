//! Interior eigenvalues of sparse non-Hermitian pencils `A x = λ B x` by a
//! block preconditioned harmonic Schur–Rayleigh–Ritz iteration.
//!
//! The solver returns the `k` eigenvalues closest to a shift `σ` together
//! with a partial generalized Schur form `A V = Q R_A`, `B V = Q R_B`, or,
//! in the eigenvector variant, the eigenvectors themselves. Only
//! applications of a preconditioner `T ≈ (A − σB)⁻¹` are needed.
//!
//! ```
//! use gplhr::{build_preconditioner, gplhr_solve, C64, Pencil, PrecKind, SolverConfig, SparseMatrix};
//!
//! let diag: Vec<C64> = (1..=10).map(|i| C64::new(i as f64, 0.0)).collect();
//! let pencil = Pencil::standard(SparseMatrix::from_diagonal(&diag)).unwrap();
//! let sigma = C64::new(5.2, 0.0);
//! let prec = build_preconditioner(&pencil, sigma, &"gmres:10".parse::<PrecKind>().unwrap()).unwrap();
//! let cfg = SolverConfig::new(sigma, 2);
//! let res = gplhr_solve(&pencil, &cfg, &prec, None).unwrap();
//! assert!(res.converged());
//! assert!((res.eigenvalues[0].ratio() - C64::new(5.0, 0.0)).norm() < 1e-10);
//! ```

pub mod cli;
pub mod dense;
pub mod error;
pub mod matrix;
pub mod precond;
pub mod solver;

pub type C64 = num_complex::Complex64;
pub type DenseBlock = nalgebra::DMatrix<C64>;

pub use dense::{dense_eig_pair, ordered_qz, orth, qfree_factors, GeneralizedEigenvalue, OrderedSchur};
pub use error::{Error, Result};
pub use matrix::{read_matrix_market, write_matrix_market, Pencil, PencilOperator, SparseMatrix};
pub use precond::{apply_prec, apply_projected_prec, build_preconditioner, PrecKind, Preconditioner};
pub use solver::{
    adapt_m, deflated_solve, gplhr_eig_solve, gplhr_solve, ConvergenceState, DirectionMode, EigResult,
    PartialSchurResult, SchurApprox, SolverConfig,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pencils.md")]
    mod pencils {}
    #[doc = include_str!("../../../book/src/schur-forms.md")]
    mod schur_forms {}
    #[doc = include_str!("../../../book/src/harmonic-extraction.md")]
    mod harmonic_extraction {}
    #[doc = include_str!("../../../book/src/preconditioners.md")]
    mod preconditioners {}
    #[doc = include_str!("../../../book/src/iteration.md")]
    mod iteration {}
    #[doc = include_str!("../../../book/src/eigenvectors-and-deflation.md")]
    mod eigenvectors_and_deflation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
