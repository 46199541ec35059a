//! Complex QZ: Hessenberg–triangular reduction, single-shift QZ sweeps and
//! reordering of the generalized Schur form by distance to a target shift.
//!
//! Everything runs in complex arithmetic, so all diagonal blocks are 1×1.
//! The iteration follows the structure of LAPACK's `zgghrd`/`zhgeqz`/`ztgex2`.

use nalgebra::DMatrix;

use super::GeneralizedEigenvalue;
use crate::error::{Error, Result};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Ordered generalized Schur form `Φ·y_r = y_l·r_a`, `Ψ·y_r = y_l·r_b`, with
/// diagonal ratios sorted by distance to the shift (infinite ones last).
#[derive(Debug, Clone)]
pub struct OrderedSchur {
    pub r_a: DMatrix<C64>,
    pub r_b: DMatrix<C64>,
    pub y_l: DMatrix<C64>,
    pub y_r: DMatrix<C64>,
}

impl OrderedSchur {
    pub fn dim(&self) -> usize {
        self.r_a.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<GeneralizedEigenvalue> {
        (0..self.dim())
            .map(|j| GeneralizedEigenvalue::new_unchecked(self.r_a[(j, j)], self.r_b[(j, j)]))
            .collect()
    }
}

/// Complex Givens rotation: returns `(c, s, r)` with
/// `[c s; −s̄ c]·[f; g] = [r; 0]`.
pub(crate) fn lartg(f: C64, g: C64) -> (f64, C64, C64) {
    if g == ZERO {
        return (1.0, ZERO, f);
    }
    if f == ZERO {
        let gn = g.norm();
        return (0.0, g.conj() / gn, C64::new(gn, 0.0));
    }
    let fn_ = f.norm();
    let gn = g.norm();
    let nrm = fn_.hypot(gn);
    let phase = f / fn_;
    (fn_ / nrm, phase * g.conj() / nrm, phase * nrm)
}

/// Rows `(i1, i2)`: `(x, y) ← (c·x + s·y, −s̄·x + c·y)` over the given columns.
fn rot_rows(m: &mut DMatrix<C64>, i1: usize, i2: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let x = m[(i1, j)];
        let y = m[(i2, j)];
        m[(i1, j)] = x * c + s * y;
        m[(i2, j)] = y * c - s.conj() * x;
    }
}

/// Columns `(j1, j2)`: `(x, y) ← (c·x + s·y, −s̄·x + c·y)` over the given rows.
fn rot_cols(m: &mut DMatrix<C64>, j1: usize, j2: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for i in rows {
        let x = m[(i, j1)];
        let y = m[(i, j2)];
        m[(i, j1)] = x * c + s * y;
        m[(i, j2)] = y * c - s.conj() * x;
    }
}

#[inline]
fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Working state `H = Qᴴ Φ Z`, `T = Qᴴ Ψ Z`.
struct Qz {
    h: DMatrix<C64>,
    t: DMatrix<C64>,
    q: DMatrix<C64>,
    z: DMatrix<C64>,
}

impl Qz {
    fn n(&self) -> usize {
        self.h.nrows()
    }

    /// Left rotation on rows `(i, i+1)` from column `from` on, accumulated into `Q`.
    fn left(&mut self, i: usize, c: f64, s: C64, h_from: usize, t_from: usize) {
        let n = self.n();
        rot_rows(&mut self.h, i, i + 1, c, s, h_from..n);
        rot_rows(&mut self.t, i, i + 1, c, s, t_from..n);
        rot_cols(&mut self.q, i, i + 1, c, s.conj(), 0..n);
    }

    /// Right rotation mixing columns `(j1, j2)` for the leading rows, accumulated into `Z`.
    fn right(&mut self, j1: usize, j2: usize, c: f64, s: C64, h_rows: usize, t_rows: usize) {
        let n = self.n();
        rot_cols(&mut self.h, j1, j2, c, s, 0..h_rows);
        rot_cols(&mut self.t, j1, j2, c, s, 0..t_rows);
        rot_cols(&mut self.z, j1, j2, c, s, 0..n);
    }

    fn hessenberg_triangular(phi: &DMatrix<C64>, psi: &DMatrix<C64>) -> Self {
        let n = phi.nrows();
        let qr = psi.clone().qr();
        let q = qr.q();
        let mut t = qr.r();
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = ZERO;
            }
        }
        let h = q.ad_mul(phi);
        let mut s = Self { h, t, q, z: DMatrix::identity(n, n) };
        if n < 3 {
            return s;
        }
        for jcol in 0..n - 2 {
            for jrow in (jcol + 2..n).rev() {
                let (c, sn, r) = lartg(s.h[(jrow - 1, jcol)], s.h[(jrow, jcol)]);
                s.h[(jrow - 1, jcol)] = r;
                s.h[(jrow, jcol)] = ZERO;
                s.left(jrow - 1, c, sn, jcol + 1, jrow - 1);

                let (c, sn, r) = lartg(s.t[(jrow, jrow)], s.t[(jrow, jrow - 1)]);
                s.t[(jrow, jrow)] = r;
                s.t[(jrow, jrow - 1)] = ZERO;
                s.right(jrow, jrow - 1, c, sn, n, jrow);
            }
        }
        s
    }

    /// Makes `T(j, j)` real non-negative by a unitary column scaling.
    fn normalize_column(&mut self, j: usize) {
        let absb = self.t[(j, j)].norm();
        if absb > f64::MIN_POSITIVE {
            let sign = (self.t[(j, j)] / absb).conj();
            self.t[(j, j)] = C64::new(absb, 0.0);
            for i in 0..j {
                self.t[(i, j)] *= sign;
            }
            for i in 0..=j {
                self.h[(i, j)] *= sign;
            }
            for i in 0..self.n() {
                self.z[(i, j)] *= sign;
            }
        } else {
            self.t[(j, j)] = ZERO;
        }
    }

    /// Single-shift QZ sweeps until `H` is upper triangular.
    fn iterate(&mut self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Ok(());
        }
        let ulp = f64::EPSILON;
        let safmin = f64::MIN_POSITIVE;
        let anorm = self.h.norm();
        let bnorm = self.t.norm();
        let atol = safmin.max(ulp * anorm);
        let btol = safmin.max(ulp * bnorm);
        let ascale = 1.0 / safmin.max(anorm);
        let bscale = 1.0 / safmin.max(bnorm);

        let max_sweeps = 30 * n;
        let mut ilast = n - 1;
        let mut iiter = 0usize;
        let mut eshift = ZERO;

        enum Next {
            Deflate,
            ZeroBottomT,
            Sweep(usize),
        }

        for _ in 0..max_sweeps {
            let next = 'split: {
                if ilast == 0 {
                    break 'split Next::Deflate;
                }
                let sub = self.h[(ilast, ilast - 1)];
                if abs1(sub)
                    <= safmin.max(ulp * (abs1(self.h[(ilast, ilast)]) + abs1(self.h[(ilast - 1, ilast - 1)])))
                {
                    self.h[(ilast, ilast - 1)] = ZERO;
                    break 'split Next::Deflate;
                }
                if self.t[(ilast, ilast)].norm() <= btol {
                    self.t[(ilast, ilast)] = ZERO;
                    break 'split Next::ZeroBottomT;
                }
                let mut j = ilast - 1;
                loop {
                    let ilazro = if j == 0 {
                        true
                    } else if abs1(self.h[(j, j - 1)])
                        <= safmin.max(ulp * (abs1(self.h[(j, j)]) + abs1(self.h[(j - 1, j - 1)])))
                    {
                        self.h[(j, j - 1)] = ZERO;
                        true
                    } else {
                        false
                    };

                    if self.t[(j, j)].norm() < btol {
                        self.t[(j, j)] = ZERO;
                        let mut ilazr2 = false;
                        if !ilazro {
                            let t1 = abs1(self.h[(j, j - 1)]);
                            let t2 = abs1(self.h[(j, j)]);
                            let tempr = t1.max(t2);
                            let (t1, t2) = if tempr < 1.0 && tempr != 0.0 { (t1 / tempr, t2 / tempr) } else { (t1, t2) };
                            if t1 * (ascale * abs1(self.h[(j + 1, j)])) <= t2 * (ascale * atol) {
                                ilazr2 = true;
                            }
                        }
                        if ilazro || ilazr2 {
                            // Leading diagonal of T in the block is zero: split off at the top.
                            for jch in j..ilast {
                                let (c, s, r) = lartg(self.h[(jch, jch)], self.h[(jch + 1, jch)]);
                                self.h[(jch, jch)] = r;
                                self.h[(jch + 1, jch)] = ZERO;
                                self.left(jch, c, s, jch + 1, jch + 1);
                                if ilazr2 {
                                    self.h[(jch, jch - 1)] *= c;
                                }
                                ilazr2 = false;
                                if self.t[(jch + 1, jch + 1)].norm() >= btol {
                                    if jch + 1 >= ilast {
                                        break 'split Next::Deflate;
                                    }
                                    break 'split Next::Sweep(jch + 1);
                                }
                                self.t[(jch + 1, jch + 1)] = ZERO;
                            }
                            break 'split Next::ZeroBottomT;
                        }
                        // Chase the zero down to T(ilast, ilast).
                        for jch in j..ilast {
                            let (c, s, r) = lartg(self.t[(jch, jch + 1)], self.t[(jch + 1, jch + 1)]);
                            self.t[(jch, jch + 1)] = r;
                            self.t[(jch + 1, jch + 1)] = ZERO;
                            rot_rows(&mut self.t, jch, jch + 1, c, s, jch + 2..n);
                            rot_rows(&mut self.h, jch, jch + 1, c, s, jch - 1..n);
                            rot_cols(&mut self.q, jch, jch + 1, c, s.conj(), 0..n);

                            let (c, s, r) = lartg(self.h[(jch + 1, jch)], self.h[(jch + 1, jch - 1)]);
                            self.h[(jch + 1, jch)] = r;
                            self.h[(jch + 1, jch - 1)] = ZERO;
                            self.right(jch, jch - 1, c, s, jch + 1, jch);
                        }
                        break 'split Next::ZeroBottomT;
                    } else if ilazro {
                        break 'split Next::Sweep(j);
                    }
                    j -= 1;
                }
            };

            let ifirst = match next {
                Next::Deflate | Next::ZeroBottomT => {
                    if let Next::ZeroBottomT = next {
                        let (c, s, r) = lartg(self.h[(ilast, ilast)], self.h[(ilast, ilast - 1)]);
                        self.h[(ilast, ilast)] = r;
                        self.h[(ilast, ilast - 1)] = ZERO;
                        self.right(ilast, ilast - 1, c, s, ilast, ilast);
                    }
                    self.normalize_column(ilast);
                    if ilast == 0 {
                        return Ok(());
                    }
                    ilast -= 1;
                    iiter = 0;
                    eshift = ZERO;
                    continue;
                }
                Next::Sweep(f) => f,
            };

            iiter += 1;
            let shift = if !iiter.is_multiple_of(10) {
                let h = &self.h;
                let t = &self.t;
                let l = ilast;
                let u12 = (t[(l - 1, l)] * bscale) / (t[(l, l)] * bscale);
                let ad11 = (h[(l - 1, l - 1)] * ascale) / (t[(l - 1, l - 1)] * bscale);
                let ad21 = (h[(l, l - 1)] * ascale) / (t[(l - 1, l - 1)] * bscale);
                let ad12 = (h[(l - 1, l)] * ascale) / (t[(l, l)] * bscale);
                let ad22 = (h[(l, l)] * ascale) / (t[(l, l)] * bscale);
                let abi22 = ad22 - u12 * ad21;
                let abi12 = ad12 - u12 * ad11;
                let mut shift = abi22;
                let ctemp = abi12.sqrt() * ad21.sqrt();
                if ctemp != ZERO {
                    let x = (ad11 - shift) * 0.5;
                    let temp2 = abs1(x);
                    let temp = abs1(ctemp).max(temp2);
                    let mut y = ((x / temp).powu(2) + (ctemp / temp).powu(2)).sqrt() * temp;
                    if temp2 > 0.0 {
                        let xn = x / temp2;
                        if xn.re * y.re + xn.im * y.im < 0.0 {
                            y = -y;
                        }
                    }
                    shift -= ctemp * (ctemp / (x + y));
                }
                shift
            } else {
                eshift += (self.h[(ilast, ilast - 1)] * ascale) / (self.t[(ilast - 1, ilast - 1)] * bscale);
                eshift
            };

            let istart = ifirst;
            let f = self.h[(istart, istart)] * ascale - shift * (self.t[(istart, istart)] * bscale);
            let g = self.h[(istart + 1, istart)] * ascale;
            let (mut c, mut s, _) = lartg(f, g);
            for j in istart..ilast {
                if j > istart {
                    let (cc, ss, r) = lartg(self.h[(j, j - 1)], self.h[(j + 1, j - 1)]);
                    c = cc;
                    s = ss;
                    self.h[(j, j - 1)] = r;
                    self.h[(j + 1, j - 1)] = ZERO;
                }
                self.left(j, c, s, j, j);
                let (cc, ss, r) = lartg(self.t[(j + 1, j + 1)], self.t[(j + 1, j)]);
                self.t[(j + 1, j + 1)] = r;
                self.t[(j + 1, j)] = ZERO;
                self.right(j + 1, j, cc, ss, (j + 3).min(ilast + 1), j + 1);
            }
        }
        Err(Error::QzNoConvergence { sweeps: max_sweeps })
    }

    /// Swaps the adjacent 1×1 diagonal blocks at `(j, j+1)`.
    fn swap(&mut self, j: usize) {
        let n = self.n();
        let (s00, s01, s11) = (self.h[(j, j)], self.h[(j, j + 1)], self.h[(j + 1, j + 1)]);
        let (t00, t01, t11) = (self.t[(j, j)], self.t[(j, j + 1)], self.t[(j + 1, j + 1)]);
        let f = s11 * t00 - t11 * s00;
        let g = s11 * t01 - t11 * s01;
        let sa = s11.norm() * t00.norm();
        let sb = s00.norm() * t11.norm();
        let (cz, sz, _) = lartg(g, f);
        let sz = -sz;
        rot_cols(&mut self.h, j, j + 1, cz, sz.conj(), 0..j + 2);
        rot_cols(&mut self.t, j, j + 1, cz, sz.conj(), 0..j + 2);
        rot_cols(&mut self.z, j, j + 1, cz, sz.conj(), 0..n);
        let (cq, sq, _) = if sa >= sb {
            lartg(self.h[(j, j)], self.h[(j + 1, j)])
        } else {
            lartg(self.t[(j, j)], self.t[(j + 1, j)])
        };
        rot_rows(&mut self.h, j, j + 1, cq, sq, j..n);
        rot_rows(&mut self.t, j, j + 1, cq, sq, j..n);
        rot_cols(&mut self.q, j, j + 1, cq, sq.conj(), 0..n);
        self.h[(j + 1, j)] = ZERO;
        self.t[(j + 1, j)] = ZERO;
    }
}

fn distance_key(alpha: C64, beta: C64, sigma: C64) -> f64 {
    if beta == ZERO {
        f64::INFINITY
    } else {
        (alpha / beta - sigma).norm()
    }
}

/// Full generalized Schur decomposition of `(phi, psi)`, reordered so that
/// the diagonal ratios are ascending in distance to `sigma`. Equal distances
/// keep the order produced by the QZ iteration.
pub fn ordered_qz(phi: &DMatrix<C64>, psi: &DMatrix<C64>, sigma: C64) -> Result<OrderedSchur> {
    let s = phi.nrows();
    if s == 0 || phi.ncols() != s || psi.nrows() != s || psi.ncols() != s {
        return Err(Error::InvalidInput(format!(
            "ordered_qz needs two square matrices of equal size, got {}x{} and {}x{}",
            phi.nrows(),
            phi.ncols(),
            psi.nrows(),
            psi.ncols()
        )));
    }
    let scale = phi.norm() + psi.norm();
    let mut qz = Qz::hessenberg_triangular(phi, psi);
    qz.iterate()?;

    let tiny = 1e-14 * scale;
    for j in 0..s {
        if qz.h[(j, j)].norm() <= tiny && qz.t[(j, j)].norm() <= tiny {
            return Err(Error::SingularPencil(format!(
                "diagonal pair {j} of the Schur form is (0, 0) within {tiny:.1e}"
            )));
        }
    }

    let mut keys: Vec<f64> = (0..s).map(|j| distance_key(qz.h[(j, j)], qz.t[(j, j)], sigma)).collect();
    for i in 1..s {
        let mut j = i;
        while j > 0 && keys[j - 1] > keys[j] {
            qz.swap(j - 1);
            keys.swap(j - 1, j);
            j -= 1;
        }
    }
    // Re-normalize so that r_b has a real non-negative diagonal after the swaps.
    for j in 0..s {
        qz.normalize_column(j);
    }
    for j in 0..s {
        for i in j + 1..s {
            qz.h[(i, j)] = ZERO;
            qz.t[(i, j)] = ZERO;
        }
    }
    Ok(OrderedSchur { r_a: qz.h, r_b: qz.t, y_l: qz.q, y_r: qz.z })
}
