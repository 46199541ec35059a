use nalgebra::{DMatrix, DVector};

use super::{ordered_qz, GeneralizedEigenvalue};
use crate::error::{Error, Result};
use crate::C64;

/// All eigenpairs of `(phi, psi)` sorted by distance to `sigma`, infinite
/// eigenvalues last. Eigenvectors come from back substitution on the ordered
/// Schur pair and are unit-normalized with their largest entry real positive.
pub fn dense_eig_pair(
    phi: &DMatrix<C64>,
    psi: &DMatrix<C64>,
    sigma: C64,
) -> Result<Vec<(GeneralizedEigenvalue, DVector<C64>)>> {
    let f = ordered_qz(phi, psi, sigma)?;
    let s = f.dim();
    let scale = f.r_a.norm() + f.r_b.norm();
    let mut out = Vec::with_capacity(s);
    for (j, ev) in f.eigenvalues().into_iter().enumerate() {
        let nrm = ev.alpha.norm().hypot(ev.beta.norm());
        let (alpha, beta) = (ev.alpha / nrm, ev.beta / nrm);
        // (β·R_A − α·R_B)·y = 0 with y_j = 1 and y_i = 0 below j.
        let m = |i: usize, l: usize| beta * f.r_a[(i, l)] - alpha * f.r_b[(i, l)];
        let mut y = DVector::<C64>::zeros(s);
        y[j] = C64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut num = C64::new(0.0, 0.0);
            for l in i + 1..=j {
                num -= m(i, l) * y[l];
            }
            let pivot = m(i, i);
            let ynorm = y.norm();
            if pivot.norm() < 1e-14 * scale {
                if num.norm() <= 1e-10 * scale * ynorm {
                    y[i] = C64::new(0.0, 0.0);
                } else {
                    return Err(Error::Deficient { index: j });
                }
            } else {
                y[i] = num / pivot;
            }
        }
        let mut x = &f.y_r * y;
        let big = x.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let phase = big.conj() / big.norm();
        x *= phase / x.norm();
        out.push((ev, x));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::random_block;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn diagonal_pair_gives_axes_in_shift_order() {
        let phi = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(2.0), c(3.0)]));
        let psi = DMatrix::identity(3, 3);
        let pairs = dense_eig_pair(&phi, &psi, c(2.1)).unwrap();
        let expected = [(2.0, 1), (3.0, 2), (1.0, 0)];
        for ((ev, x), (lam, axis)) in pairs.iter().zip(expected) {
            assert!((ev.ratio() - c(lam)).norm() < 1e-14);
            let mut e = DVector::zeros(3);
            e[axis] = c(1.0);
            assert!((x - e).norm() < 1e-14);
        }
    }

    #[test]
    fn jordan_block_is_deficient() {
        let phi = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        let psi = DMatrix::identity(2, 2);
        assert!(matches!(dense_eig_pair(&phi, &psi, c(0.0)), Err(Error::Deficient { .. })));
    }

    #[test]
    fn identity_pair_is_semisimple() {
        let id = DMatrix::<C64>::identity(3, 3);
        let pairs = dense_eig_pair(&id, &id, c(0.0)).unwrap();
        assert_eq!(pairs.len(), 3);
    }

    #[test]
    fn random_pair_residuals() {
        let phi = random_block(6, 6, 11);
        let psi = random_block(6, 6, 12);
        let tol = 1e-12 * (phi.norm() + psi.norm());
        for (ev, x) in dense_eig_pair(&phi, &psi, C64::new(0.2, 0.1)).unwrap() {
            assert!((x.norm() - 1.0).abs() < 1e-14);
            let r = &phi * &x * ev.beta - &psi * &x * ev.alpha;
            assert!(r.norm() <= tol, "{}", r.norm());
        }
    }
}
