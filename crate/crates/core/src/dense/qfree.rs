use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::C64;

/// Diagonal scalings `G1`, `G2` and the unit upper triangular
/// `G = R_A·G1 + R_B·G2` behind the Q-free form.
#[derive(Debug, Clone)]
pub struct QFreeScaling {
    pub g1: Vec<C64>,
    pub g2: Vec<C64>,
    pub g: DMatrix<C64>,
}

fn check_pair(r_a: &DMatrix<C64>, r_b: &DMatrix<C64>) -> Result<usize> {
    let k = r_a.nrows();
    if r_a.ncols() != k || r_b.nrows() != k || r_b.ncols() != k {
        return Err(Error::InvalidInput(format!(
            "triangular factors must be square and of equal size, got {}x{} and {}x{}",
            r_a.nrows(),
            r_a.ncols(),
            r_b.nrows(),
            r_b.ncols()
        )));
    }
    for j in 0..k {
        if r_a[(j, j)].norm() + r_b[(j, j)].norm() == 0.0 {
            return Err(Error::SingularPencil(format!("diagonal pair {j} is (0, 0)")));
        }
    }
    Ok(k)
}

pub fn qfree_scaling(r_a: &DMatrix<C64>, r_b: &DMatrix<C64>) -> Result<QFreeScaling> {
    let k = check_pair(r_a, r_b)?;
    let one = C64::new(1.0, 0.0);
    let mut g1 = Vec::with_capacity(k);
    let mut g2 = Vec::with_capacity(k);
    for j in 0..k {
        let (a, b) = (r_a[(j, j)], r_b[(j, j)]);
        if a.norm() < b.norm() {
            g1.push(C64::new(0.0, 0.0));
            g2.push(one / b);
        } else {
            g1.push((one - b) / a);
            g2.push(one);
        }
    }
    let mut g = DMatrix::from_fn(k, k, |i, j| if i <= j { r_a[(i, j)] * g1[j] + r_b[(i, j)] * g2[j] } else { C64::new(0.0, 0.0) });
    for j in 0..k {
        g[(j, j)] = one;
    }
    Ok(QFreeScaling { g1, g2, g })
}

/// Triangular `(M_A, M_B)` with `A·V·M_B = B·V·M_A` whenever `A·V = Q·R_A`
/// and `B·V = Q·R_B`. Diagonal ratios `M_A(j,j)/M_B(j,j)` equal
/// `R_A(j,j)/R_B(j,j)`, including infinite ones.
pub fn qfree_factors(r_a: &DMatrix<C64>, r_b: &DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let QFreeScaling { g1, g2, g } = qfree_scaling(r_a, r_b)?;
    let k = g.nrows();
    // X = G⁻¹·R_A by back substitution; G has unit diagonal.
    let mut x = DMatrix::<C64>::zeros(k, k);
    for col in 0..k {
        for i in (0..=col).rev() {
            let mut v = r_a[(i, col)];
            for l in i + 1..=col {
                v -= g[(i, l)] * x[(l, col)];
            }
            x[(i, col)] = v;
        }
    }
    let mut m_a = x.clone();
    let mut m_b = -x;
    for i in 0..k {
        for col in 0..k {
            m_a[(i, col)] *= g2[i];
            m_b[(i, col)] *= g1[i];
        }
        m_b[(i, i)] += C64::new(1.0, 0.0);
    }
    for col in 0..k {
        for i in col + 1..k {
            m_a[(i, col)] = C64::new(0.0, 0.0);
            m_b[(i, col)] = C64::new(0.0, 0.0);
        }
    }
    Ok((m_a, m_b))
}
