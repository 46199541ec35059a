use nalgebra::DMatrix;

use super::SparseMatrix;
use crate::error::{Error, Result};
use crate::{DenseBlock, C64};

/// The operator pair `(A, B)` of `A x = λ B x`. `B = None` marks the standard
/// problem `B = I`; every `B`-dependent path then takes the identity shortcut.
#[derive(Debug, Clone)]
pub struct Pencil {
    a: SparseMatrix,
    b: Option<SparseMatrix>,
}

impl Pencil {
    pub fn new(a: SparseMatrix, b: Option<SparseMatrix>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput(format!(
                "A must be square, got {}x{}",
                a.n_rows(),
                a.n_cols()
            )));
        }
        if let Some(b) = &b {
            if b.n_rows() != a.n_rows() || b.n_cols() != a.n_cols() {
                return Err(Error::DimensionMismatch {
                    context: "pencil B",
                    expected: a.n_rows(),
                    found: b.n_rows(),
                });
            }
        }
        Ok(Self { a, b })
    }

    pub fn standard(a: SparseMatrix) -> Result<Self> {
        Self::new(a, None)
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn b(&self) -> Option<&SparseMatrix> {
        self.b.as_ref()
    }

    pub fn n(&self) -> usize {
        self.a.n_rows()
    }

    pub fn is_standard(&self) -> bool {
        self.b.is_none()
    }

    /// `A − σB` assembled as a sparse matrix.
    pub fn shifted(&self, sigma: C64) -> SparseMatrix {
        let b = match &self.b {
            Some(b) => b.clone(),
            None => SparseMatrix::identity(self.n()),
        };
        self.a.add_scaled(-sigma, &b).expect("pencil dimensions agree")
    }

    pub fn to_dense(&self) -> (DMatrix<C64>, DMatrix<C64>) {
        let b = match &self.b {
            Some(b) => b.to_dense(),
            None => DMatrix::identity(self.n(), self.n()),
        };
        (self.a.to_dense(), b)
    }
}

/// What the iteration needs from a pencil: block products with `A` and `B`.
///
/// Implemented by [`Pencil`] and by the implicitly projected pencil used for
/// deflation, which also reports the bases it projects against.
pub trait PencilOperator: Sync {
    fn dim(&self) -> usize;
    fn is_standard(&self) -> bool;
    fn apply_a(&self, x: &DenseBlock) -> DenseBlock;
    /// Returns a copy of `x` when `B = I`.
    fn apply_b(&self, x: &DenseBlock) -> DenseBlock;
    /// Frobenius norm of `A − σB`, used to scale invariant checks.
    fn shifted_norm(&self, sigma: C64) -> f64;
    /// Previously converged right/left Schur bases that iterates must stay
    /// orthogonal to.
    fn deflation(&self) -> Option<(&DenseBlock, &DenseBlock)> {
        None
    }
}

impl PencilOperator for Pencil {
    fn dim(&self) -> usize {
        self.n()
    }

    fn is_standard(&self) -> bool {
        self.b.is_none()
    }

    fn apply_a(&self, x: &DenseBlock) -> DenseBlock {
        self.a.spmm(x).expect("block height matches pencil")
    }

    fn apply_b(&self, x: &DenseBlock) -> DenseBlock {
        match &self.b {
            Some(b) => b.spmm(x).expect("block height matches pencil"),
            None => x.clone(),
        }
    }

    fn shifted_norm(&self, sigma: C64) -> f64 {
        self.shifted(sigma).frobenius_norm()
    }
}
