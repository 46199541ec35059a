use nalgebra::DVector;

use crate::matrix::SparseMatrix;
use crate::C64;

const EXIT_RTOL: f64 = 1e-14;

/// Right-preconditioned GMRES on `op·w = rhs` from `w = 0`, running exactly
/// `steps` Arnoldi steps unless the relative residual drops below `1e-14`
/// or the Krylov space becomes invariant.
pub(crate) fn gmres<F>(op: &SparseMatrix, rhs: &DVector<C64>, steps: usize, inner: F) -> DVector<C64>
where
    F: Fn(&DVector<C64>) -> DVector<C64>,
{
    let n = rhs.len();
    let zero = C64::new(0.0, 0.0);
    let beta = rhs.norm();
    if beta == 0.0 || steps == 0 {
        return DVector::zeros(n);
    }
    let mut basis: Vec<DVector<C64>> = vec![rhs / C64::new(beta, 0.0)];
    let mut precd: Vec<DVector<C64>> = Vec::with_capacity(steps);
    // Columns of the rotated Hessenberg matrix, i.e. the triangular factor.
    let mut r: Vec<Vec<C64>> = Vec::with_capacity(steps);
    let mut rot: Vec<(f64, C64)> = Vec::with_capacity(steps);
    let mut g = vec![C64::new(beta, 0.0)];

    for j in 0..steps {
        let z = inner(&basis[j]);
        let mut w = DVector::zeros(n);
        op.mul_vec_into(z.as_slice(), w.as_mut_slice());
        precd.push(z);
        let mut h = vec![zero; j + 2];
        for (i, vi) in basis.iter().enumerate() {
            h[i] = vi.dotc(&w);
            w.axpy(-h[i], vi, C64::new(1.0, 0.0));
        }
        let hnext = w.norm();
        h[j + 1] = C64::new(hnext, 0.0);
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (x, y) = (h[i], h[i + 1]);
            h[i] = x * c + s * y;
            h[i + 1] = y * c - s.conj() * x;
        }
        let (c, s, rr) = crate::dense::lartg(h[j], h[j + 1]);
        h[j] = rr;
        h.truncate(j + 1);
        rot.push((c, s));
        let gj = g[j];
        g[j] = gj * c;
        g.push(-s.conj() * gj);
        r.push(h);
        if g[j + 1].norm() < EXIT_RTOL * beta || hnext <= f64::EPSILON * beta {
            break;
        }
        basis.push(w / C64::new(hnext, 0.0));
    }

    let mut len = r.len();
    if let Some(pos) = (0..len).find(|&i| r[i][i] == zero) {
        len = pos;
    }
    let mut y = vec![zero; len];
    for i in (0..len).rev() {
        let mut s = g[i];
        for l in i + 1..len {
            s -= r[l][i] * y[l];
        }
        y[i] = s / r[i][i];
    }
    let mut out = DVector::zeros(n);
    for (yi, zi) in y.iter().zip(&precd) {
        out.axpy(*yi, zi, C64::new(1.0, 0.0));
    }
    out
}
