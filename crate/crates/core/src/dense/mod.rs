//! Dense complex kernels on small matrices: orthonormalization, the ordered
//! generalized Schur decomposition, Q-free factors and a dense eigen-oracle.

mod eig;
mod orth;
mod qfree;
mod qz;

pub use eig::dense_eig_pair;
pub use orth::{orth, DEFAULT_DROP_TOL};
pub(crate) use orth::{orth_tracked, project_out};
pub use qfree::{qfree_factors, qfree_scaling, QFreeScaling};
pub use qz::{ordered_qz, OrderedSchur};
pub(crate) use qz::lartg;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::{DenseBlock, C64};

/// A generalized eigenvalue `λ = α/β`; `β = 0` is an infinite eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedEigenvalue {
    pub alpha: C64,
    pub beta: C64,
}

impl GeneralizedEigenvalue {
    /// Rejects the indeterminate pair `(0, 0)`.
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        if alpha.norm() + beta.norm() == 0.0 {
            return Err(Error::SingularPencil("indeterminate eigenvalue pair (0, 0)".into()));
        }
        Ok(Self { alpha, beta })
    }

    pub(crate) fn new_unchecked(alpha: C64, beta: C64) -> Self {
        Self { alpha, beta }
    }

    pub fn is_infinite(&self) -> bool {
        self.beta == C64::new(0.0, 0.0)
    }

    /// `α/β`, or `+∞ + 0i` when `β = 0`.
    pub fn ratio(&self) -> C64 {
        if self.is_infinite() {
            C64::new(f64::INFINITY, 0.0)
        } else {
            self.alpha / self.beta
        }
    }

    /// `|λ − σ|`, infinite for infinite eigenvalues.
    pub fn distance_to(&self, sigma: C64) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            (self.ratio() - sigma).norm()
        }
    }
}

/// Seeded block of complex entries with real and imaginary parts uniform in `[-1, 1)`.
pub fn random_block(n: usize, k: usize, seed: u64) -> DenseBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseBlock::from_fn(n, k, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}
