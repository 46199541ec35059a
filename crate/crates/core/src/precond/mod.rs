//! Preconditioners `T ≈ (A − σB)⁻¹` and their projected application.

mod gmres;
mod ilut;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;

pub use ilut::IluFactors;

use crate::error::{Error, Result};
use crate::matrix::{Pencil, SparseMatrix};
use crate::{DenseBlock, C64};

/// Which preconditioner to build. Parses the strings `none`, `jacobi`,
/// `ilut:<tol>`, `gmres:<steps>` and `gmres:<steps>+<inner>`.
#[derive(Debug, Clone, PartialEq)]
pub enum PrecKind {
    Identity,
    Jacobi,
    Ilut { fill_tol: f64 },
    Gmres { steps: usize, inner: Box<PrecKind> },
}

impl FromStr for PrecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad preconditioner spec '{s}'"));
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("gmres:") {
            let (steps, inner) = match rest.split_once('+') {
                Some((steps, inner)) => (steps, inner.parse::<PrecKind>()?),
                None => (rest, PrecKind::Identity),
            };
            if matches!(inner, PrecKind::Gmres { .. }) {
                return Err(bad());
            }
            let steps = steps.parse().map_err(|_| bad())?;
            return Ok(PrecKind::Gmres { steps, inner: Box::new(inner) });
        }
        if let Some(tol) = s.strip_prefix("ilut:") {
            let fill_tol: f64 = tol.parse().map_err(|_| bad())?;
            if !fill_tol.is_finite() || fill_tol < 0.0 {
                return Err(bad());
            }
            return Ok(PrecKind::Ilut { fill_tol });
        }
        match s {
            "none" | "identity" => Ok(PrecKind::Identity),
            "jacobi" => Ok(PrecKind::Jacobi),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for PrecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecKind::Identity => write!(f, "none"),
            PrecKind::Jacobi => write!(f, "jacobi"),
            PrecKind::Ilut { fill_tol } => write!(f, "ilut:{fill_tol:e}"),
            PrecKind::Gmres { steps, inner } => write!(f, "gmres:{steps}+{inner}"),
        }
    }
}

#[derive(Debug, Clone)]
enum Action {
    Identity,
    Jacobi(Vec<C64>),
    Ilut(IluFactors),
    Gmres { steps: usize, inner: Box<Action> },
}

impl Action {
    fn build(shifted: &SparseMatrix, kind: &PrecKind) -> Result<Self> {
        Ok(match kind {
            PrecKind::Identity => Action::Identity,
            PrecKind::Jacobi => Action::Jacobi(
                shifted
                    .diagonal()
                    .into_iter()
                    .map(|d| if d == C64::new(0.0, 0.0) { C64::new(1.0, 0.0) } else { d.inv() })
                    .collect(),
            ),
            PrecKind::Ilut { fill_tol } => Action::Ilut(IluFactors::build(shifted, *fill_tol)?),
            PrecKind::Gmres { steps, inner } => Action::Gmres {
                steps: *steps,
                inner: Box::new(Self::build(shifted, inner)?),
            },
        })
    }

    fn apply_vec(&self, op: &SparseMatrix, r: &DVector<C64>) -> DVector<C64> {
        match self {
            Action::Identity => r.clone(),
            Action::Jacobi(d) => DVector::from_iterator(r.len(), r.iter().zip(d).map(|(x, d)| x * d)),
            Action::Ilut(f) => {
                let mut x = r.clone();
                f.solve_in_place(x.as_mut_slice());
                x
            }
            Action::Gmres { steps, inner } => gmres::gmres(op, r, *steps, |v| inner.apply_vec(op, v)),
        }
    }
}

/// An assembled preconditioner for one shift. Immutable once built.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    kind: PrecKind,
    shifted: SparseMatrix,
    action: Action,
}

impl Preconditioner {
    pub fn kind(&self) -> &PrecKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.shifted.n_rows()
    }

    /// The incomplete factors, when the preconditioner is ILUT.
    pub fn ilu_factors(&self) -> Option<&IluFactors> {
        match &self.action {
            Action::Ilut(f) => Some(f),
            Action::Gmres { inner, .. } => match inner.as_ref() {
                Action::Ilut(f) => Some(f),
                _ => None,
            },
            _ => None,
        }
    }
}

/// Builds `T ≈ (A − σB)⁻¹` of the requested kind.
///
/// An ILUT breakdown is returned as [`Error::PreconditionerBuild`]; use
/// [`build_preconditioner_or_jacobi`] for the fallback behaviour.
pub fn build_preconditioner(p: &Pencil, sigma: C64, kind: &PrecKind) -> Result<Preconditioner> {
    if !(sigma.re.is_finite() && sigma.im.is_finite()) {
        return Err(Error::InvalidInput(format!("shift {sigma} is not finite")));
    }
    let shifted = p.shifted(sigma);
    let action = Action::build(&shifted, kind)?;
    Ok(Preconditioner { kind: kind.clone(), shifted, action })
}

/// As [`build_preconditioner`], but falls back to Jacobi (keeping any GMRES
/// wrapper) when the ILUT factorization fails.
pub fn build_preconditioner_or_jacobi(p: &Pencil, sigma: C64, kind: &PrecKind) -> Result<Preconditioner> {
    match build_preconditioner(p, sigma, kind) {
        Err(Error::PreconditionerBuild(msg)) => {
            log::warn!("{msg}; falling back to jacobi");
            let fallback = match kind {
                PrecKind::Gmres { steps, .. } => PrecKind::Gmres { steps: *steps, inner: Box::new(PrecKind::Jacobi) },
                _ => PrecKind::Jacobi,
            };
            build_preconditioner(p, sigma, &fallback)
        }
        other => other,
    }
}

/// `T·r`, column by column.
pub fn apply_prec(t: &Preconditioner, r: &DenseBlock) -> Result<DenseBlock> {
    if r.nrows() != t.dim() {
        return Err(Error::DimensionMismatch { context: "apply_prec", expected: t.dim(), found: r.nrows() });
    }
    if let Action::Identity = t.action {
        return Ok(r.clone());
    }
    let cols: Vec<DVector<C64>> = (0..r.ncols())
        .into_par_iter()
        .map(|j| t.action.apply_vec(&t.shifted, &r.column(j).into_owned()))
        .collect();
    Ok(if cols.is_empty() { DenseBlock::zeros(r.nrows(), 0) } else { DenseBlock::from_columns(&cols) })
}

/// `(I − VVᴴ)·T·(I − QQᴴ)·r`. Pass `q = v` for the standard problem.
pub fn apply_projected_prec(t: &Preconditioner, v: &DenseBlock, q: &DenseBlock, r: &DenseBlock) -> Result<DenseBlock> {
    for (blk, ctx) in [(v, "apply_projected_prec: v"), (q, "apply_projected_prec: q")] {
        if blk.nrows() != r.nrows() {
            return Err(Error::DimensionMismatch { context: ctx, expected: r.nrows(), found: blk.nrows() });
        }
    }
    apply_projected_prec_multi(t, &[v], &[q], r, true)
}

/// Projected application against several mutually orthogonal bases at once,
/// optionally skipping the right projector.
pub(crate) fn apply_projected_prec_multi(
    t: &Preconditioner,
    vs: &[&DenseBlock],
    qs: &[&DenseBlock],
    r: &DenseBlock,
    right_projector: bool,
) -> Result<DenseBlock> {
    let mut x = r.clone();
    if right_projector {
        crate::dense::project_out(&mut x, qs);
    }
    let mut y = apply_prec(t, &x)?;
    crate::dense::project_out(&mut y, vs);
    crate::dense::project_out(&mut y, vs);
    Ok(y)
}
