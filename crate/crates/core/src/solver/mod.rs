//! The block iteration: subspace expansion, harmonic Schur–Rayleigh–Ritz
//! extraction, and the Schur, eigenvector and deflated drivers.

mod blocks;
mod deflation;
mod eig;
mod schur;

use std::fmt;
use std::str::FromStr;

pub use deflation::{deflated_solve, DeflatedPencil};
pub use eig::{gplhr_eig_solve, EigResult};
pub use schur::{gplhr_solve, harmonic_srr, krylov_arnoldi_block, schur_residuals};

use nalgebra::DVector;

use crate::dense::{qfree_factors, GeneralizedEigenvalue};
use crate::error::{Error, Result};
use crate::{DenseBlock, C64};

/// Cap on the adapted expansion parameter.
pub const MAX_M: usize = 20;

/// How the auxiliary search block `P` is formed between iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionMode {
    /// Keep the next `k` harmonic Ritz vectors beyond the wanted ones.
    #[default]
    ThickRestart,
    /// Keep the previous `V`.
    Lobpcg,
    None,
}

impl FromStr for DirectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thick" => Ok(Self::ThickRestart),
            "lobpcg" => Ok(Self::Lobpcg),
            "none" => Ok(Self::None),
            _ => Err(Error::InvalidInput(format!("unknown direction mode '{s}'"))),
        }
    }
}

impl fmt::Display for DirectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ThickRestart => "thick",
            Self::Lobpcg => "lobpcg",
            Self::None => "none",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub sigma: C64,
    pub k: usize,
    /// Initial expansion parameter `m₀`.
    pub m: usize,
    /// Relative eigenresidual tolerance `‖Ax − λBx‖/‖Ax‖`.
    pub tol: f64,
    pub max_iter: usize,
    pub direction_mode: DirectionMode,
    pub seed: u64,
    /// Apply `(I − QQᴴ)` before the preconditioner.
    pub right_projector: bool,
    /// Track the Schur identity and trial-basis orthonormality every iteration.
    pub check_invariants: bool,
}

impl SolverConfig {
    pub fn new(sigma: C64, k: usize) -> Self {
        Self {
            sigma,
            k,
            m: 1,
            tol: 1e-8,
            max_iter: 500,
            direction_mode: DirectionMode::ThickRestart,
            seed: 0,
            right_projector: true,
            check_invariants: cfg!(debug_assertions),
        }
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 || self.k > n {
            return Err(Error::InvalidInput(format!("k = {} must lie in [1, {n}]", self.k)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidInput(format!("tolerance {} must be positive", self.tol)));
        }
        if !(self.sigma.re.is_finite() && self.sigma.im.is_finite()) {
            return Err(Error::InvalidInput(format!("shift {} is not finite", self.sigma)));
        }
        Ok(())
    }
}

/// `min(⌊m₀·k/(k−q)⌋, 20)`.
pub fn adapt_m(m0: usize, k: usize, q_locked: usize) -> usize {
    assert!(q_locked < k, "adapt_m needs q < k");
    (m0 * k / (k - q_locked)).min(MAX_M)
}

/// Current Schur approximation `A·V ≈ Q·R_A`, `B·V ≈ Q·R_B` with its Q-free factors.
#[derive(Debug, Clone)]
pub struct SchurApprox {
    pub v: DenseBlock,
    pub q: DenseBlock,
    pub r_a: DenseBlock,
    pub r_b: DenseBlock,
    pub m_a: DenseBlock,
    pub m_b: DenseBlock,
    pub p: DenseBlock,
}

impl SchurApprox {
    pub fn new(v: DenseBlock, q: DenseBlock, r_a: DenseBlock, r_b: DenseBlock) -> Result<Self> {
        let (m_a, m_b) = qfree_factors(&r_a, &r_b)?;
        let p = DenseBlock::zeros(v.nrows(), 0);
        Ok(Self { v, q, r_a, r_b, m_a, m_b, p })
    }

    pub fn k(&self) -> usize {
        self.v.ncols()
    }

    pub fn eigenvalues(&self) -> Vec<GeneralizedEigenvalue> {
        (0..self.k()).map(|j| GeneralizedEigenvalue::new_unchecked(self.r_a[(j, j)], self.r_b[(j, j)])).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceState {
    /// Passes through the main loop, each starting with a residual evaluation.
    pub iterations: usize,
    /// Number of leading converged and locked columns.
    pub locked: usize,
    pub converged: Vec<bool>,
    /// Relative eigenresiduals per pass and column.
    pub residual_history: Vec<Vec<f64>>,
    /// Schur residual norms per pass and column.
    pub schur_residual_history: Vec<Vec<f64>>,
    /// Columns multiplied by `A` (the same number by `B` when `B ≠ I`).
    pub matvec_count: usize,
    /// Columns passed through the preconditioner.
    pub prec_count: usize,
    pub current_m: usize,
    /// Expansion parameter used at each pass that expanded.
    pub m_history: Vec<usize>,
    pub locked_history: Vec<usize>,
    pub stagnated: bool,
    /// Largest `residual/tol` seen on a column after it was locked; above 1 means drift.
    pub locked_drift: f64,
    /// Largest `‖(A−σB)V − Q(R_A − σR_B)‖ / ‖A−σB‖_F` observed.
    pub max_schur_identity_error: f64,
    /// Largest `‖ZᴴZ − I‖` over trial bases.
    pub max_gram_error: f64,
}

impl ConvergenceState {
    pub fn all_converged(&self) -> bool {
        !self.converged.is_empty() && self.converged.iter().all(|&c| c)
    }

    /// Records one residual evaluation and advances contiguous locking.
    pub(crate) fn record(&mut self, residuals: Vec<f64>, schur_norms: Vec<f64>, tol: f64) {
        let run = residuals.iter().take_while(|&&r| r <= tol).count();
        for &r in &residuals[..self.locked.min(residuals.len())] {
            self.locked_drift = self.locked_drift.max(r / tol);
        }
        self.locked = self.locked.max(run);
        self.converged = residuals.iter().map(|&r| r <= tol).collect();
        self.locked_history.push(self.locked);
        self.residual_history.push(residuals);
        self.schur_residual_history.push(schur_norms);
    }
}

/// Output of the Schur-vector driver.
#[derive(Debug, Clone)]
pub struct PartialSchurResult {
    pub v: DenseBlock,
    /// Left Schur vectors; equal to `v` when `B = I`.
    pub q: DenseBlock,
    pub r_a: DenseBlock,
    pub r_b: DenseBlock,
    /// The triangular `R` with `A·V ≈ V·R`, present when `B = I`.
    pub r: Option<DenseBlock>,
    pub eigenvalues: Vec<GeneralizedEigenvalue>,
    /// Final relative eigenresidual per column.
    pub residuals: Vec<f64>,
    pub state: ConvergenceState,
}

impl PartialSchurResult {
    pub fn converged(&self) -> bool {
        self.state.all_converged() && self.eigenvalues.len() == self.state.converged.len()
    }
}

/// `‖Ax − λBx‖/‖Ax‖`; for infinite `λ`, `‖Bx‖/‖Ax‖`.
pub(crate) fn relative_eig_residual(ev: &GeneralizedEigenvalue, ax: &DVector<C64>, bx: &DVector<C64>) -> f64 {
    let ax_norm = ax.norm();
    if ev.is_infinite() {
        return bx.norm() / ax_norm;
    }
    let r = (ax - bx * ev.ratio()).norm();
    if ax_norm == 0.0 {
        r
    } else {
        r / ax_norm
    }
}
